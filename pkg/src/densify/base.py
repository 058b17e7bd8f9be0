"""
Densifier 基类定义

所有稠密化算子（residual split、baseline split/clone）的抽象基类。
"""

import logging
from abc import ABC, abstractmethod
from typing import Iterable, Optional

import numpy as np

from src.model.gaussians import GaussianCloud
from src.schemas.config import DensifyConfig
from src.schemas.report import DensifyReport

logger = logging.getLogger(__name__)


class Densifier(ABC):
    """
    Densifier 抽象基类

    子类实现单个 Gaussian 的 densify_one；apply 按 id 升序依次处理选中集合，
    因此同一 rng 状态下结果确定。
    """

    def __init__(self, cfg: DensifyConfig, scene_extent: Optional[float] = None):
        self.cfg = cfg
        self.scene_extent = scene_extent if scene_extent is not None else cfg.scene_extent

    @property
    def densifier_name(self) -> str:
        """Densifier 名称，用于日志和调试"""
        return self.__class__.__name__

    @abstractmethod
    def densify_one(
        self, cloud: GaussianCloud, gaussian_id: int, rng: np.random.Generator
    ) -> DensifyReport:
        """处理一个 Gaussian，返回本次操作的报告"""

    def apply(
        self, cloud: GaussianCloud, gaussian_ids: Iterable[int], rng: np.random.Generator
    ) -> DensifyReport:
        selected = sorted(int(i) for i in gaussian_ids)
        report = DensifyReport(selected=selected, count_before=len(cloud), count_after=len(cloud))
        for gaussian_id in selected:
            report = report.merge(self.densify_one(cloud, gaussian_id, rng))
        report.selected = selected
        logger.debug(
            "%s: %d selected, %d created, %d removed",
            self.densifier_name,
            len(selected),
            len(report.created),
            len(report.pruned),
        )
        return report

    def __repr__(self) -> str:
        return f"<{self.densifier_name}>"
