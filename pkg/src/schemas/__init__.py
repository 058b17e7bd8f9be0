"""
Pydantic 数据模型

- config: 训练 / 损失 / 稠密化 / 调度 / 优化器配置
- dataset: 相机、数据集清单、合成场景参数
- report: 稠密化事件报告
"""

from .config import (
    DensifyConfig,
    LossConfig,
    OptimizerConfig,
    PRESET_NAMES,
    StageScheduleConfig,
    TrainConfig,
)
from .dataset import CameraSchema, DatasetManifest, PointSet, SyntheticSpec, ViewEntry
from .report import CreatedGaussian, DensifyReport

__all__ = [
    "CameraSchema",
    "CreatedGaussian",
    "DatasetManifest",
    "DensifyConfig",
    "DensifyReport",
    "LossConfig",
    "OptimizerConfig",
    "PRESET_NAMES",
    "PointSet",
    "StageScheduleConfig",
    "SyntheticSpec",
    "TrainConfig",
    "ViewEntry",
]
