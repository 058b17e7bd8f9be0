"""
训练主循环

每次迭代：
1. 按 seed 打乱的顺序轮流取一个训练视图（每个 epoch 重新打乱）
2. 由迭代数解析 stage / substage，取对应金字塔层的目标图像与缩放后的相机
3. 渲染、计算 L1 + D-SSIM 损失并反向传播，累加视空间梯度统计
4. Adam 更新后重新归一化四元数

densify_start <= it < densify_stop 且 (it + 1) 是 densify_interval 的倍数时执行稠密化，
之后清零统计；每 opacity_reduction_interval 次迭代缩减不透明度并剪枝。
同一配置与 seed 下，最终点云与 RunLog 逐位一致（与线程数无关）。
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import ConfigError, DivergenceError
from src.densify import get_densifier, opacity_reduction, prune, select
from src.io.checkpoint import save_checkpoint
from src.io.dataset import Dataset, View, init_cloud_from_points, scene_extent
from src.metrics.loss import loss as compute_loss
from src.metrics.loss import DEFAULT_LOSS_CONFIG, psnr, ssim
from src.model.camera import Camera
from src.model.gaussians import GaussianCloud
from src.render.backward import backward
from src.render.rasterizer import render
from src.render.settings import DEFAULT_RENDER_SETTINGS, RenderSettings
from src.render.stats import ViewspaceGradStats, reset_stats
from src.schedule.clock import StageClock, StageInfo, stage_at
from src.schedule.pyramid import build_pyramid
from src.schemas.config import LossConfig, TrainConfig
from src.schemas.report import DensifyReport
from src.training.optimizer import AdamOptimizer

logger = logging.getLogger(__name__)

METRICS_HEADER = ["iteration", "loss", "psnr", "ssim", "count", "stage", "substage", "max_level"]
DENSIFY_HEADER = [
    "iteration",
    "substage",
    "selected",
    "created",
    "pruned",
    "count_before",
    "count_after",
]


@dataclass
class EvalRecord:
    iteration: int
    loss: float
    psnr: float
    ssim: float
    count: int
    stage: int
    substage: int
    max_level: int
    level_histogram: Dict[int, int] = field(default_factory=dict)

    def csv_row(self) -> List[object]:
        return [
            self.iteration,
            repr(self.loss),
            repr(self.psnr),
            repr(self.ssim),
            self.count,
            self.stage,
            self.substage,
            self.max_level,
        ]


@dataclass
class StepRecord:
    """单步训练记录（渲染尺寸用于核对阶段分辨率）"""

    iteration: int
    loss: float
    stage: int
    substage: int
    height: int
    width: int
    count: int


@dataclass
class RunLog:
    evals: List[EvalRecord] = field(default_factory=list)
    steps: List[StepRecord] = field(default_factory=list)
    densify: List[DensifyReport] = field(default_factory=list)
    checkpoints: List[Path] = field(default_factory=list)

    def add_eval(self, record: EvalRecord) -> None:
        if self.evals and record.iteration <= self.evals[-1].iteration:
            raise ValueError(
                f"eval iteration {record.iteration} after {self.evals[-1].iteration}"
            )
        self.evals.append(record)

    @property
    def final(self) -> Optional[EvalRecord]:
        return self.evals[-1] if self.evals else None

    def write_metrics_csv(self, path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(METRICS_HEADER)
            for record in self.evals:
                writer.writerow(record.csv_row())

    def write_densify_csv(self, path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(DENSIFY_HEADER)
            for report in self.densify:
                writer.writerow(report.csv_row())


def _ssim_config(cfg: LossConfig, height: int, width: int) -> Optional[LossConfig]:
    """图像小于 SSIM 窗口时缩小窗口；小于 3 像素时返回 None"""
    smallest = min(height, width)
    if smallest >= cfg.ssim_window:
        return cfg
    window = smallest if smallest % 2 == 1 else smallest - 1
    if window < 3:
        return None
    return cfg.model_copy(update={"ssim_window": window})


def evaluate(
    cloud: GaussianCloud,
    views: Sequence[View],
    background: Sequence[float] = (0.0, 0.0, 0.0),
    sh_degree: Optional[int] = None,
    settings: RenderSettings = DEFAULT_RENDER_SETTINGS,
    loss_cfg: LossConfig = DEFAULT_LOSS_CONFIG,
) -> Tuple[float, float]:
    """
    在原分辨率下渲染每个视图并与原图比较

    Returns:
        (平均 PSNR, 平均 SSIM)；完全重建时 PSNR 为 inf

    Raises:
        ConfigError: 没有视图
    """
    if not views:
        raise ConfigError("evaluate needs at least one view")
    psnrs, ssims = [], []
    for view in views:
        image = render(view.camera, cloud, background, sh_degree, settings).image
        psnrs.append(psnr(image, view.image, loss_cfg.peak))
        cfg = _ssim_config(loss_cfg, *view.image.shape[:2])
        ssims.append(ssim(image, view.image, cfg) if cfg is not None else math.nan)
    return float(np.mean(psnrs)), float(np.mean(ssims))


class Trainer:
    """
    一次训练运行

    Args:
        dataset: 数据集（至少一个训练视图）
        config: 训练配置
        output_dir: 给定时写出 config.json、metrics.csv、densify.csv、final.ply 与中间 checkpoint
        render_settings: 渲染参数
        initial_cloud: 初始点云；缺省时由数据集的点集初始化
    """

    def __init__(
        self,
        dataset: Dataset,
        config: TrainConfig,
        output_dir: Optional[Path] = None,
        render_settings: RenderSettings = DEFAULT_RENDER_SETTINGS,
        initial_cloud: Optional[GaussianCloud] = None,
    ):
        if not dataset.train_ids:
            raise ConfigError("dataset has no training views")
        if initial_cloud is None and dataset.points is None:
            raise ConfigError("dataset has no initial point set and no initial cloud was given")

        self.dataset = dataset
        self.config = config
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.render_settings = render_settings
        self.background = np.asarray(config.background, dtype=np.float64)

        if initial_cloud is not None:
            self.cloud = initial_cloud.copy()
            if self.cloud.sh_degree != config.sh_degree:
                self.cloud.resize_sh(config.sh_degree)
        else:
            positions, colors = dataset.points
            self.cloud = init_cloud_from_points(positions, colors, config.sh_degree)

        train_views = dataset.train_views
        self.extent = (
            config.densify.scene_extent
            if config.densify.scene_extent is not None
            else scene_extent([v.camera for v in train_views])
        )
        self.clock = StageClock.from_config(config.schedule, config.total_iterations)
        levels = config.schedule.levels if config.use_pyramid else 1
        self.pyramid = build_pyramid({v.id: v.image for v in train_views}, levels)
        self.optimizer = AdamOptimizer(config.optimizer, config.total_iterations, self.extent)
        self.densifier = get_densifier(config.densify, self.extent)
        self.stats = ViewspaceGradStats.zeros(len(self.cloud))

        self._order_rng = np.random.default_rng([config.seed, 0])
        self._densify_rng = np.random.default_rng([config.seed, 1])
        self._queue: List[str] = []
        self._last_checkpoint: Optional[Path] = None
        self.log = RunLog()

        logger.info(
            "Trainer ready: %d Gaussians, %d train views, extent %.4g, %s, pyramid=%s",
            len(self.cloud),
            len(train_views),
            self.extent,
            self.densifier,
            config.use_pyramid,
        )

    # ==================== 单步 ====================

    def _next_view(self) -> View:
        if not self._queue:
            order = self._order_rng.permutation(len(self.dataset.train_ids))
            self._queue = [self.dataset.train_ids[i] for i in order]
        return self.dataset.views[self._queue.pop(0)]

    def active_sh_degree(self, iteration: int) -> int:
        return min(self.config.sh_degree, iteration // self.config.sh_degree_interval)

    def stage_view(self, view: View, level: int) -> Tuple[Camera, np.ndarray]:
        """金字塔第 level 层的 (相机, 目标图像)；内参乘以 2^(level − L)"""
        target = self.pyramid.get(view.id, level)
        height, width = target.shape[:2]
        camera = view.camera
        if level < self.pyramid.levels:
            camera = camera.scaled(2.0 ** (level - self.pyramid.levels), width, height)
        return camera, target

    def _step(self, iteration: int, info: StageInfo) -> float:
        view = self._next_view()
        level = info.level if self.config.use_pyramid else self.pyramid.levels
        camera, target = self.stage_view(view, level)
        height, width = target.shape[:2]

        output = render(
            camera,
            self.cloud,
            self.background,
            self.active_sh_degree(iteration),
            self.render_settings,
        )
        loss_cfg = self.config.loss
        if min(height, width) < loss_cfg.ssim_window:
            loss_cfg = loss_cfg.model_copy(update={"lambda_dssim": 0.0})
        value, grad_image = compute_loss(output.image, target, loss_cfg)
        if not math.isfinite(value):
            raise DivergenceError(iteration, self._last_checkpoint)

        grads, increment = backward(output, self.cloud, grad_image)
        self.stats.accumulate(increment)
        self.optimizer.step(self.cloud, grads.as_dict(), iteration)
        self.cloud.normalize_rotations()

        self.log.steps.append(
            StepRecord(
                iteration=iteration,
                loss=value,
                stage=info.stage,
                substage=info.substage,
                height=height,
                width=width,
                count=len(self.cloud),
            )
        )
        return value

    # ==================== 稠密化 / 剪枝 ====================

    def _is_densify_iteration(self, iteration: int) -> bool:
        cfg = self.config
        return (
            cfg.densify_start <= iteration < cfg.densify_stop
            and (iteration + 1) % cfg.densify_interval == 0
        )

    def _is_reduction_iteration(self, iteration: int) -> bool:
        cfg = self.config.densify
        if (iteration + 1) % cfg.opacity_reduction_interval != 0:
            return False
        return cfg.opacity_reduction_after_densify or iteration < self.config.densify_stop

    def densify(self, iteration: int, info: StageInfo) -> DensifyReport:
        chosen = select(self.stats, self.cloud.levels, info.substage, self.config.densify, self.cloud.ids)
        ids_before = self.cloud.ids.copy()
        report = self.densifier.apply(self.cloud, chosen, self._densify_rng)
        report.iteration = iteration
        report.substage = info.substage
        self.log.densify.append(report)
        # 新的统计窗口
        self.stats.keep(np.isin(ids_before, report.pruned, invert=True))
        self.stats.extend(len(self.cloud) - len(self.stats))
        reset_stats(self.stats)
        logger.info(
            "Densify at iteration %d (substage %d): %d selected, %d created, %d removed, %d -> %d",
            iteration,
            info.substage,
            len(report.selected),
            len(report.created),
            len(report.pruned),
            report.count_before,
            report.count_after,
        )
        return report

    def reduce_and_prune(self, iteration: int, info: StageInfo) -> DensifyReport:
        cfg = self.config.densify
        ids_before = self.cloud.ids.copy()
        opacity_reduction(self.cloud, cfg.opacity_reduction_factor)
        report = prune(self.cloud, cfg.prune_opacity_eps)
        report.iteration = iteration
        report.substage = info.substage
        if report.pruned:
            self.stats.keep(np.isin(ids_before, report.pruned, invert=True))
            self.log.densify.append(report)
        logger.debug(
            "Opacity reduction at iteration %d, pruned %d", iteration, len(report.pruned)
        )
        return report

    # ==================== 评估 / 输出 ====================

    def _eval_views(self) -> List[View]:
        return self.dataset.test_views or self.dataset.train_views

    def _record_eval(self, iteration: int, info: StageInfo, loss_value: float) -> EvalRecord:
        mean_psnr, mean_ssim = evaluate(
            self.cloud,
            self._eval_views(),
            self.background,
            self.active_sh_degree(iteration),
            self.render_settings,
            self.config.loss,
        )
        record = EvalRecord(
            iteration=iteration + 1,
            loss=loss_value,
            psnr=mean_psnr,
            ssim=mean_ssim,
            count=len(self.cloud),
            stage=info.stage,
            substage=info.substage,
            max_level=self.cloud.max_level,
            level_histogram=self.cloud.level_histogram(),
        )
        self.log.add_eval(record)
        logger.info(
            "Iteration %d: loss %.6f, PSNR %.3f, SSIM %.4f, %d Gaussians, max level %d",
            record.iteration,
            loss_value,
            mean_psnr,
            mean_ssim,
            record.count,
            record.max_level,
        )
        return record

    def _save_midrun(self, iteration: int) -> None:
        path = self.output_dir / "checkpoints" / f"iter_{iteration + 1:06d}.ply"
        save_checkpoint(self.cloud, path, final=False, config_hash=self.config.config_hash())
        self._last_checkpoint = path
        self.log.checkpoints.append(path)

    def _write_outputs(self) -> None:
        out = self.output_dir
        out.mkdir(parents=True, exist_ok=True)
        self.config.save(out / "config.json")
        self.log.write_metrics_csv(out / "metrics.csv")
        self.log.write_densify_csv(out / "densify.csv")
        final_path = save_checkpoint(
            self.cloud, out / "final.ply", final=True, config_hash=self.config.config_hash()
        )
        self.log.checkpoints.append(final_path)

    # ==================== 主循环 ====================

    def run(self) -> Tuple[GaussianCloud, RunLog]:
        cfg = self.config
        total = cfg.total_iterations
        logger.info("Training for %d iterations (config %s)", total, cfg.config_hash())

        for iteration in range(total):
            info = stage_at(iteration, self.clock)
            value = self._step(iteration, info)

            if self._is_densify_iteration(iteration):
                self.densify(iteration, info)
            if self._is_reduction_iteration(iteration):
                self.reduce_and_prune(iteration, info)

            if (iteration + 1) % cfg.eval_interval == 0 or iteration + 1 == total:
                self._record_eval(iteration, info, value)
            if (
                self.output_dir is not None
                and cfg.checkpoint_interval
                and (iteration + 1) % cfg.checkpoint_interval == 0
            ):
                self._save_midrun(iteration)

        if self.output_dir is not None:
            self._write_outputs()
        return self.cloud, self.log


def train(
    dataset: Dataset,
    config: TrainConfig,
    output_dir: Optional[Path] = None,
    render_settings: RenderSettings = DEFAULT_RENDER_SETTINGS,
    initial_cloud: Optional[GaussianCloud] = None,
) -> Tuple[GaussianCloud, RunLog]:
    """训练并返回 (最终点云, RunLog)"""
    return Trainer(dataset, config, output_dir, render_settings, initial_cloud).run()
