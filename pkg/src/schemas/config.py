"""
训练配置模型定义

用于:
1. run config 文件（JSON）的加载与校验
2. 命令行 --set 覆盖项的合并
3. checkpoint 中记录的 config hash

默认值对应桌面规模（desk-scale）的实验：总迭代数与各阶段长度按 30000 次迭代的参考设置等比例缩小。
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Tuple

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from src.core.errors import ConfigError

# 参考阶段划分：2500 / 6000 / 30000，densify 在 12000 停止
REFERENCE_TOTAL_ITERATIONS = 30000
REFERENCE_STAGE_ENDS = (2500, 6000, 30000)
REFERENCE_DENSIFY_STOP = 12000
REFERENCE_DENSIFY_START = 500

TAU_ABSOLUTE = 0.00067
TAU_ABSOLUTE_SMALL = 0.0016
TAU_SIGNED = 0.00028


# ==================== 损失 ====================


class LossConfig(BaseModel):
    """L1 + D-SSIM 损失配置"""

    lambda_dssim: float = Field(default=0.2, ge=0.0, le=1.0)
    ssim_window: int = Field(default=11, ge=3)
    ssim_sigma: float = Field(default=1.5, gt=0.0)
    peak: float = Field(default=1.0, gt=0.0)

    model_config = {"extra": "forbid"}

    @field_validator("ssim_window")
    @classmethod
    def _window_is_odd(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("ssim_window must be odd")
        return value


# ==================== 稠密化 ====================


class DensifyConfig(BaseModel):
    """
    稠密化配置

    tau / alpha / lambda_s / beta 取参考实验设置；
    baseline_percent_dense 即 τ_s = kR 中的 k（与子阶段序号 k 分开存放）。
    """

    tau: float = Field(default=TAU_ABSOLUTE, gt=0.0)
    alpha: float = Field(default=2.0 ** (1.0 / 3.0), gt=1.0)
    lambda_s: float = Field(default=1.6, gt=1.0)
    beta: float = Field(default=0.3, gt=0.0, lt=1.0)
    mode: Literal["residual-split", "baseline-split-clone"] = "residual-split"
    grad_source: Literal["signed", "absolute"] = "absolute"
    varying_threshold: bool = True
    baseline_percent_dense: float = Field(default=0.01, gt=0.0)
    baseline_split_children: int = Field(default=2, ge=1)
    baseline_split_divisor: float = Field(default=1.6, gt=1.0)
    # None: 由相机中心包围球半径 × 1.1 推出
    scene_extent: float | None = Field(default=None, gt=0.0)
    prune_opacity_eps: float = Field(default=0.005, gt=0.0, lt=1.0)
    opacity_reduction_factor: float = Field(default=0.6, gt=0.0, lt=1.0)
    opacity_reduction_interval: int = Field(default=600, ge=1)
    opacity_reduction_after_densify: bool = True
    densify_interval: int = Field(default=100, ge=1)
    densify_start: int = Field(default=REFERENCE_DENSIFY_START, ge=0)
    # 默认 3000 次迭代的 40%，与参考设置 12000 / 30000 同比例
    densify_stop_iteration: int = Field(default=1200, ge=0)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _window_order(self) -> "DensifyConfig":
        if self.densify_start > self.densify_stop_iteration:
            raise ValueError("densify_start must not exceed densify_stop_iteration")
        return self


# ==================== 阶段调度 ====================


class StageScheduleConfig(BaseModel):
    """
    阶段 / 子阶段调度

    stage_ends 每项可以是绝对迭代数（> 1）或占总迭代数的比例（<= 1）。
    最后一项总是被解析为 total_iterations。
    """

    levels: int = Field(default=3, ge=1)
    substages: int = Field(default=3, ge=1)
    stage_ends: List[float] = Field(
        default_factory=lambda: [e / REFERENCE_TOTAL_ITERATIONS for e in REFERENCE_STAGE_ENDS]
    )

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _ends_match_levels(self) -> "StageScheduleConfig":
        if len(self.stage_ends) != self.levels:
            raise ValueError(
                f"stage_ends has {len(self.stage_ends)} entries, expected {self.levels}"
            )
        if any(e <= 0 for e in self.stage_ends):
            raise ValueError("stage_ends must be positive")
        return self

    def resolve(self, total_iterations: int) -> List[int]:
        """解析为严格递增的绝对边界，最后一项等于 total_iterations"""
        ends: List[int] = []
        for value in self.stage_ends[:-1]:
            ends.append(int(round(value * total_iterations)) if value <= 1.0 else int(value))
        ends.append(total_iterations)
        if any(b <= a for a, b in zip([0] + ends[:-1], ends)):
            raise ConfigError(
                f"stage boundaries {ends} are not strictly increasing for "
                f"{total_iterations} iterations"
            )
        return ends


# ==================== 优化器 ====================


class OptimizerConfig(BaseModel):
    """Adam 参数组学习率（3D-GS 参考值）"""

    position_lr_init: float = Field(default=1.6e-4, gt=0.0)
    position_lr_final: float = Field(default=1.6e-6, gt=0.0)
    sh_lr: float = Field(default=2.5e-3, gt=0.0)
    sh_rest_lr_divisor: float = Field(default=20.0, gt=0.0)
    opacity_lr: float = Field(default=5e-2, gt=0.0)
    scale_lr: float = Field(default=5e-3, gt=0.0)
    rotation_lr: float = Field(default=1e-3, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-15, gt=0.0)
    scale_position_lr_by_extent: bool = True

    model_config = {"extra": "forbid"}


# ==================== 训练 ====================


PRESET_NAMES: Tuple[str, ...] = (
    "resgs",
    "resgs-small",
    "resgs-3dgs",
    "baseline",
    "base-ip",
    "base-rs",
    "base-rs-ip",
)


class TrainConfig(BaseModel):
    """
    一次训练运行的全部超参数

    给定 seed 时，配置完全决定运行结果。
    """

    total_iterations: int = Field(default=3000, ge=1)
    loss: LossConfig = Field(default_factory=LossConfig)
    densify: DensifyConfig = Field(default_factory=DensifyConfig)
    schedule: StageScheduleConfig = Field(default_factory=StageScheduleConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    use_pyramid: bool = True
    sh_degree: int = Field(default=1, ge=0, le=3)
    sh_degree_interval: int = Field(default=1000, ge=1)
    background: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    seed: int = 0
    eval_interval: int = Field(default=100, ge=1)
    # 0 表示不写中间 checkpoint
    checkpoint_interval: int = Field(default=0, ge=0)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _densify_within_run(self) -> "TrainConfig":
        if self.densify.densify_stop_iteration > self.total_iterations:
            raise ValueError(
                f"densify_stop_iteration ({self.densify.densify_stop_iteration}) exceeds "
                f"total_iterations ({self.total_iterations})"
            )
        return self

    # 便捷访问
    @property
    def densify_interval(self) -> int:
        return self.densify.densify_interval

    @property
    def densify_start(self) -> int:
        return self.densify.densify_start

    @property
    def densify_stop(self) -> int:
        return self.densify.densify_stop_iteration

    def config_hash(self) -> str:
        """规范化 JSON 的 sha256（前 16 位）"""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def preset(cls, name: str, total_iterations: int = 3000, seed: int = 0) -> "TrainConfig":
        """
        获取命名预设

        - resgs:       完整流程，AbsGS 梯度，τ=0.00067
        - resgs-small: 同上，τ=0.0016
        - resgs-3dgs:  3D-GS 梯度，τ=0.00028
        - baseline:    3D-GS split/clone，无图像金字塔，固定阈值
        - base-ip / base-rs / base-rs-ip: 消融实验组合

        迭代相关的量按参考比例缩放到 total_iterations。
        """
        if name not in PRESET_NAMES:
            raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")

        ratio = total_iterations / REFERENCE_TOTAL_ITERATIONS
        densify_stop = int(round(REFERENCE_DENSIFY_STOP * ratio))
        densify_start = min(int(round(REFERENCE_DENSIFY_START * ratio)), densify_stop)

        residual = name in ("resgs", "resgs-small", "resgs-3dgs", "base-rs", "base-rs-ip")
        pyramid = name in ("resgs", "resgs-small", "resgs-3dgs", "base-ip", "base-rs-ip")
        varying = name in ("resgs", "resgs-small", "resgs-3dgs")
        if name == "resgs-small":
            tau, source = TAU_ABSOLUTE_SMALL, "absolute"
        elif name == "resgs":
            tau, source = TAU_ABSOLUTE, "absolute"
        else:
            tau, source = TAU_SIGNED, "signed"

        densify = DensifyConfig(
            tau=tau,
            grad_source=source,
            mode="residual-split" if residual else "baseline-split-clone",
            varying_threshold=varying,
            densify_start=densify_start,
            densify_stop_iteration=densify_stop,
        )
        return cls(
            total_iterations=total_iterations,
            densify=densify,
            use_pyramid=pyramid,
            seed=seed,
            sh_degree_interval=max(1, total_iterations // 3),
        )

    @classmethod
    def load(cls, path: Path) -> "TrainConfig":
        """从 JSON 文件加载配置"""
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            return cls.model_validate_json(text)
        except ValidationError as exc:
            raise ConfigError(f"invalid config {path}: {exc}") from exc

    def save(self, path: Path) -> None:
        Path(path).write_text(
            json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    def with_overrides(self, overrides: List[str]) -> "TrainConfig":
        """
        应用 key.sub=value 形式的覆盖项

        value 先按 JSON 解析（数字、布尔、列表），失败则当作字符串。
        """
        data: Dict[str, Any] = self.model_dump(mode="json")
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            key, raw = item.split("=", 1)
            try:
                value: Any = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            node = data
            parts = key.strip().split(".")
            for part in parts[:-1]:
                if not isinstance(node.get(part), dict):
                    raise ConfigError(f"unknown config section {part!r} in {key!r}")
                node = node[part]
            if parts[-1] not in node:
                raise ConfigError(f"unknown config key {key!r}")
            node[parts[-1]] = value
        try:
            return TrainConfig.model_validate(data)
        except ValidationError as exc:
            raise ConfigError(f"invalid override: {exc}") from exc
