"""
按层级变化的梯度阈值与稠密化候选选择

    τ_{k,l} = τ              若 l >= k
    τ_{k,l} = τ / α^(k−l)    若 l <  k

varying_threshold 关闭时所有层级都使用 τ。
"""

from typing import Dict, List, Optional

import numpy as np

from src.render.stats import ViewspaceGradStats
from src.schemas.config import DensifyConfig


def threshold_for(level: int, k: int, cfg: DensifyConfig) -> float:
    if not cfg.varying_threshold or level >= k:
        return cfg.tau
    return cfg.tau / cfg.alpha ** (k - level)


def select(
    stats: ViewspaceGradStats,
    levels: np.ndarray,
    k: int,
    cfg: DensifyConfig,
    ids: Optional[np.ndarray] = None,
) -> List[int]:
    """
    选出平均梯度达到阈值（含等于）且被观测到过的 Gaussian

    Returns:
        升序 id 列表；ids 缺省时返回行号
    """
    levels = np.asarray(levels, dtype=np.int64)
    ids = np.arange(len(levels)) if ids is None else np.asarray(ids)
    if len(stats) != len(levels):
        raise ValueError(f"stats cover {len(stats)} Gaussians, levels {len(levels)}")

    cache: Dict[int, float] = {}
    thresholds = np.empty(len(levels))
    for row, level in enumerate(levels):
        level = int(level)
        if level not in cache:
            cache[level] = threshold_for(level, k, cfg)
        thresholds[row] = cache[level]

    average = stats.average(cfg.grad_source)
    chosen = (stats.observation_count > 0) & (average >= thresholds)
    return sorted(int(i) for i in ids[chosen])
