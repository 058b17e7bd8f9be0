"""
稠密化控制

- selection: 变化阈值与候选选择
- residual: residual split
- baseline: 3D-GS split / clone
- ops: 剪枝与不透明度缩减
"""

from typing import Optional

from src.schemas.config import DensifyConfig

from .base import Densifier
from .baseline import BaselineSplitCloneDensifier, baseline_densify
from .ops import opacity_reduction, prune
from .residual import ResidualSplitDensifier, residual_split
from .selection import select, threshold_for


def get_densifier(cfg: DensifyConfig, scene_extent: Optional[float] = None) -> Densifier:
    """按 cfg.mode 创建 Densifier"""
    if cfg.mode == "residual-split":
        return ResidualSplitDensifier(cfg, scene_extent)
    return BaselineSplitCloneDensifier(cfg, scene_extent)


__all__ = [
    "BaselineSplitCloneDensifier",
    "Densifier",
    "ResidualSplitDensifier",
    "baseline_densify",
    "get_densifier",
    "opacity_reduction",
    "prune",
    "residual_split",
    "select",
    "threshold_for",
]
