"""
命令行入口

子命令：
- make-synthetic: 生成合成场景（清单、图像、真值 checkpoint）
- train:          训练（配置文件 / 预设 + --set 覆盖项）
- render:         checkpoint + 相机 -> 图像文件
- eval:           checkpoint + 数据集 -> PSNR / SSIM
- gradcheck:      有限差分梯度检查
- compare:        residual split 与 baseline 对比，输出 CSV
- ablate:         消融实验
- sweep:          β / λ_s 敏感性扫描

stdout 只输出结果（JSON / CSV 路径），日志走 stderr。
退出码：0 成功；2 用法或配置错误；1 其他错误。
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from src.core.config import settings
from src.core.errors import ConfigError, ResGSError
from src.core.log import setup_logging
from src.io.checkpoint import load_checkpoint
from src.io.dataset import load_dataset
from src.io.images import write_image
from src.io.synthetic import make_synthetic
from src.model.camera import Camera
from src.render.gradcheck import DEFAULT_STEP, DEFAULT_TOLERANCE, run_gradcheck
from src.render.rasterizer import render
from src.render.settings import RenderSettings
from src.schemas.config import PRESET_NAMES, TrainConfig
from src.schemas.dataset import CameraSchema, SyntheticSpec
from src.services.experiment_service import (
    ABLATE_HEADER,
    ABLATION_VARIANTS,
    COMPARE_HEADER,
    SWEEP_HEADER,
    ExperimentService,
    write_csv,
)
from src.training.trainer import evaluate, train

logger = logging.getLogger(__name__)


def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _render_settings(args: argparse.Namespace) -> RenderSettings:
    workers = getattr(args, "workers", None)
    return RenderSettings(workers=workers) if workers else RenderSettings()


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _build_config(args: argparse.Namespace) -> TrainConfig:
    if args.config:
        config = TrainConfig.load(args.config)
    else:
        config = TrainConfig.preset(args.preset, total_iterations=args.iterations or 3000)
    overrides = list(args.set or [])
    if args.config and args.iterations:
        overrides.append(f"total_iterations={args.iterations}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return config.with_overrides(overrides) if overrides else config


# ==================== 子命令 ====================


def cmd_make_synthetic(args: argparse.Namespace) -> int:
    try:
        if args.spec:
            spec = SyntheticSpec.model_validate_json(Path(args.spec).read_text(encoding="utf-8"))
        else:
            spec = SyntheticSpec(
                n_gaussians=args.n_gaussians,
                n_views=args.n_views,
                resolution=args.resolution,
                seed=args.seed,
                init_mode=args.init_mode,
                image_format=args.image_format,
            )
    except ValidationError as exc:
        raise ConfigError(f"invalid synthetic spec: {exc}") from exc
    manifest, truth = make_synthetic(spec, Path(args.out))
    _emit(
        {
            "manifest": str(Path(args.out) / "manifest.json"),
            "ground_truth": str(Path(args.out) / "ground_truth.ply"),
            "views": len(manifest.views),
            "train": len(manifest.train),
            "test": len(manifest.test),
            "gaussians": len(truth),
        }
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _build_config(args)
    out = Path(args.out) if args.out else Path(settings.RESGS_OUTPUT_DIR) / (args.preset or "run")
    setup_logging(log_file=out / "train.log")
    dataset = load_dataset(Path(args.data))
    cloud, log = train(dataset, config, out, _render_settings(args))
    final = log.final
    _emit(
        {
            "output_dir": str(out),
            "iterations": config.total_iterations,
            "config_hash": config.config_hash(),
            "count": len(cloud),
            "psnr": final.psnr if final else None,
            "ssim": final.ssim if final else None,
            "max_level": cloud.max_level,
        }
    )
    return 0


def _load_camera(args: argparse.Namespace) -> Camera:
    if args.camera:
        try:
            schema = CameraSchema.model_validate_json(Path(args.camera).read_text(encoding="utf-8"))
        except ValidationError as exc:
            raise ConfigError(f"invalid camera file {args.camera}: {exc}") from exc
        return Camera.from_schema(schema)
    if args.data and args.view:
        dataset = load_dataset(Path(args.data))
        if args.view not in dataset.views:
            raise ConfigError(f"view {args.view!r} not in {args.data}")
        return dataset.views[args.view].camera
    raise ConfigError("render needs --camera FILE or --data MANIFEST --view ID")


def cmd_render(args: argparse.Namespace) -> int:
    cloud = load_checkpoint(Path(args.checkpoint))
    camera = _load_camera(args)
    output = render(camera, cloud, tuple(args.background), args.sh_degree, _render_settings(args))
    write_image(Path(args.out), output.image)
    _emit({"image": str(args.out), "width": camera.width, "height": camera.height})
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cloud = load_checkpoint(Path(args.checkpoint))
    dataset = load_dataset(Path(args.data))
    if args.split == "test":
        views = dataset.test_views or dataset.train_views
    elif args.split == "train":
        views = dataset.train_views
    else:
        views = list(dataset.views.values())
    mean_psnr, mean_ssim = evaluate(
        cloud, views, tuple(args.background), settings=_render_settings(args)
    )
    _emit({"psnr": mean_psnr, "ssim": mean_ssim, "views": len(views), "count": len(cloud)})
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    result = run_gradcheck(
        seed=args.seed,
        scenes=args.scenes,
        step=args.step,
        tolerance=args.tolerance,
        max_elements_per_group=args.max_elements,
    )
    sys.stdout.write(f"max relative error: {result.max_rel_error:.3e}\n")
    for group, error in sorted(result.per_group.items()):
        sys.stdout.write(f"  {group}: {error:.3e}\n")
    return 0 if result.passed else 1


def _service(args: argparse.Namespace) -> ExperimentService:
    return ExperimentService(
        load_dataset(Path(args.data)),
        total_iterations=args.iterations,
        output_dir=Path(args.runs_dir) if args.runs_dir else None,
        overrides=args.set,
        render_settings=_render_settings(args),
    )


def cmd_compare(args: argparse.Namespace) -> int:
    rows = _service(args).compare(args.seeds)
    path = write_csv(Path(args.out), COMPARE_HEADER, rows)
    _emit({"csv": str(path), "rows": len(rows)})
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    rows = _service(args).ablate(args.seeds, args.variants)
    path = write_csv(Path(args.out), ABLATE_HEADER, rows)
    _emit({"csv": str(path), "rows": len(rows)})
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    rows = _service(args).sweep(args.betas, args.lambdas, args.seeds)
    path = write_csv(Path(args.out), SWEEP_HEADER, rows)
    _emit({"csv": str(path), "rows": len(rows)})
    return 0


# ==================== 参数解析 ====================


def _add_experiment_args(parser: argparse.ArgumentParser, default_out: str) -> None:
    parser.add_argument("--data", required=True, help="数据集 manifest.json")
    parser.add_argument("--iterations", type=int, default=3000, help="每次运行的迭代数")
    parser.add_argument("--seeds", type=_int_list, default=[0], help="逗号分隔的 seed 列表")
    parser.add_argument("--out", default=default_out, help="输出 CSV 路径")
    parser.add_argument("--runs-dir", help="各次运行的输出目录（不给则不写运行产物）")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="配置覆盖项")
    parser.add_argument("--workers", type=int, help="渲染线程数")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resgs", description="ResGS 桌面规模训练与实验")
    subparsers = parser.add_subparsers(dest="command", required=True, help="操作类型")

    synth = subparsers.add_parser("make-synthetic", help="生成合成场景")
    synth.add_argument("--out", required=True, help="输出目录")
    synth.add_argument("--spec", help="SyntheticSpec JSON 文件（覆盖下列参数）")
    synth.add_argument("--n-gaussians", type=int, default=64)
    synth.add_argument("--n-views", type=int, default=10)
    synth.add_argument("--resolution", type=int, default=128)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument(
        "--init-mode", choices=["groundtruth-perturbed", "random"], default="groundtruth-perturbed"
    )
    synth.add_argument("--image-format", choices=["npy", "png"], default="npy")
    synth.set_defaults(handler=cmd_make_synthetic)

    train_parser = subparsers.add_parser("train", help="训练")
    train_parser.add_argument("--data", required=True, help="数据集 manifest.json")
    train_parser.add_argument("--config", help="run config JSON 文件")
    train_parser.add_argument("--preset", choices=PRESET_NAMES, default="resgs", help="命名预设")
    train_parser.add_argument("--iterations", type=int, help="总迭代数")
    train_parser.add_argument("--seed", type=int, help="随机种子")
    train_parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="配置覆盖项")
    train_parser.add_argument("--out", help="输出目录")
    train_parser.add_argument("--workers", type=int, help="渲染线程数")
    train_parser.set_defaults(handler=cmd_train)

    render_parser = subparsers.add_parser("render", help="渲染 checkpoint")
    render_parser.add_argument("--checkpoint", required=True, help="PLY checkpoint")
    render_parser.add_argument("--camera", help="CameraSchema JSON 文件")
    render_parser.add_argument("--data", help="数据集 manifest.json（与 --view 一起使用）")
    render_parser.add_argument("--view", help="视图 id")
    render_parser.add_argument("--out", required=True, help="输出图像（.png / .npy）")
    render_parser.add_argument("--background", type=float, nargs=3, default=[0.0, 0.0, 0.0])
    render_parser.add_argument("--sh-degree", type=int, help="SH 阶数（默认取 checkpoint）")
    render_parser.add_argument("--workers", type=int, help="渲染线程数")
    render_parser.set_defaults(handler=cmd_render)

    eval_parser = subparsers.add_parser("eval", help="评估 checkpoint")
    eval_parser.add_argument("--checkpoint", required=True, help="PLY checkpoint")
    eval_parser.add_argument("--data", required=True, help="数据集 manifest.json")
    eval_parser.add_argument("--split", choices=["test", "train", "all"], default="test")
    eval_parser.add_argument("--background", type=float, nargs=3, default=[0.0, 0.0, 0.0])
    eval_parser.add_argument("--workers", type=int, help="渲染线程数")
    eval_parser.set_defaults(handler=cmd_eval)

    grad = subparsers.add_parser("gradcheck", help="有限差分梯度检查")
    grad.add_argument("--seed", type=int, default=0)
    grad.add_argument("--scenes", type=int, default=20)
    grad.add_argument("--step", type=float, default=DEFAULT_STEP)
    grad.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    grad.add_argument("--max-elements", type=int, help="每组参数最多抽查的元素数")
    grad.set_defaults(handler=cmd_gradcheck)

    compare = subparsers.add_parser("compare", help="residual split 与 baseline 对比")
    _add_experiment_args(compare, "compare.csv")
    compare.set_defaults(handler=cmd_compare)

    ablate = subparsers.add_parser("ablate", help="消融实验")
    _add_experiment_args(ablate, "ablate.csv")
    ablate.add_argument(
        "--variants",
        type=lambda s: [v for v in s.split(",") if v],
        default=list(ABLATION_VARIANTS),
        help="逗号分隔的预设名",
    )
    ablate.set_defaults(handler=cmd_ablate)

    sweep = subparsers.add_parser("sweep", help="β / λ_s 敏感性扫描")
    _add_experiment_args(sweep, "sweep.csv")
    sweep.add_argument("--betas", type=_float_list, default=[0.1, 0.3, 0.5, 0.7])
    sweep.add_argument("--lambdas", type=_float_list, default=[1.2, 1.6, 2.0])
    sweep.set_defaults(handler=cmd_sweep)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    setup_logging()
    logger.debug("Running command %s", args.command)
    try:
        return args.handler(args)
    except ConfigError as exc:
        sys.stderr.write(f"resgs {args.command}: configuration error: {exc}\n")
        return 2
    except (ResGSError, OSError) as exc:
        sys.stderr.write(f"resgs {args.command}: {exc}\n")
        return 1
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 130


if __name__ == "__main__":
    sys.exit(main())
