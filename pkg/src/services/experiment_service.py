import csv
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from src.io.dataset import Dataset
from src.render.settings import DEFAULT_RENDER_SETTINGS, RenderSettings
from src.schemas.config import TrainConfig
from src.training.trainer import RunLog, train

logger = logging.getLogger(__name__)

COMPARE_HEADER = ["mode", "seed", "iteration", "psnr", "ssim", "count"]
ABLATE_HEADER = ["variant", "seed", "psnr", "ssim", "count", "max_level"]
SWEEP_HEADER = ["beta", "lambda_s", "seed", "psnr", "ssim", "count"]

COMPARE_MODES = {"residual-split": "resgs", "baseline-split-clone": "baseline"}
ABLATION_VARIANTS = ("baseline", "base-ip", "base-rs", "base-rs-ip", "resgs")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


class ExperimentService:
    """
    实验业务服务 (Application Layer)
    负责对比、消融和超参数扫描：为每个组合生成配置、调度训练并汇总成 CSV 行。
    """

    def __init__(
        self,
        dataset: Dataset,
        total_iterations: int = 3000,
        output_dir: Optional[Path] = None,
        overrides: Optional[List[str]] = None,
        render_settings: RenderSettings = DEFAULT_RENDER_SETTINGS,
    ):
        self.dataset = dataset
        self.total_iterations = total_iterations
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.overrides = list(overrides or [])
        self.render_settings = render_settings
        logger.info(
            "Initializing ExperimentService: %d views, %d iterations, output=%s",
            len(dataset),
            total_iterations,
            self.output_dir,
        )

    def config_for(self, preset: str, seed: int, extra: Optional[List[str]] = None) -> TrainConfig:
        """命名预设 + 公共覆盖项 + 本次组合的覆盖项"""
        config = TrainConfig.preset(preset, total_iterations=self.total_iterations, seed=seed)
        overrides = self.overrides + list(extra or [])
        return config.with_overrides(overrides) if overrides else config

    def run(self, config: TrainConfig, name: str) -> RunLog:
        run_dir = self.output_dir / name if self.output_dir is not None else None
        logger.info("Running %s (seed %d)", name, config.seed)
        _, log = train(self.dataset, config, run_dir, self.render_settings)
        return log

    def compare(self, seeds: Sequence[int]) -> List[List[object]]:
        """
        residual split 与 baseline split/clone 的对比

        :return: 每个模式、每个 seed、每个评估点一行，列见 COMPARE_HEADER
        """
        rows: List[List[object]] = []
        for seed in seeds:
            for mode, preset in COMPARE_MODES.items():
                log = self.run(self.config_for(preset, seed), f"{preset}_seed{seed}")
                for record in log.evals:
                    rows.append(
                        [mode, seed, record.iteration, repr(record.psnr), repr(record.ssim), record.count]
                    )
        logger.debug("Compare produced %d rows", len(rows))
        return rows

    def ablate(
        self, seeds: Sequence[int], variants: Sequence[str] = ABLATION_VARIANTS
    ) -> List[List[object]]:
        """消融：每个变体、每个 seed 的最终评估，列见 ABLATE_HEADER"""
        rows: List[List[object]] = []
        for variant in variants:
            for seed in seeds:
                final = self.run(self.config_for(variant, seed), f"{variant}_seed{seed}").final
                rows.append(
                    [variant, seed, repr(final.psnr), repr(final.ssim), final.count, final.max_level]
                )
        return rows

    def sweep(
        self,
        betas: Sequence[float],
        lambdas: Sequence[float],
        seeds: Sequence[int],
        preset: str = "resgs",
    ) -> List[List[object]]:
        """β 与 λ_s 的敏感性扫描，列见 SWEEP_HEADER"""
        rows: List[List[object]] = []
        for beta in betas:
            for lambda_s in lambdas:
                for seed in seeds:
                    config = self.config_for(
                        preset, seed, [f"densify.beta={beta}", f"densify.lambda_s={lambda_s}"]
                    )
                    final = self.run(config, f"beta{beta}_lambda{lambda_s}_seed{seed}").final
                    rows.append(
                        [beta, lambda_s, seed, repr(final.psnr), repr(final.ssim), final.count]
                    )
        return rows
