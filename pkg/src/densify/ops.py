"""剪枝与周期性不透明度缩减"""

import logging

import numpy as np

from src.core.errors import InvalidParameterError
from src.model.gaussians import GaussianCloud
from src.schemas.report import DensifyReport

logger = logging.getLogger(__name__)


def prune(cloud: GaussianCloud, eps: float) -> DensifyReport:
    """删除 sigmoid(logit) < eps 的 Gaussian"""
    if not 0.0 < eps < 1.0:
        raise InvalidParameterError(f"prune threshold must lie in (0, 1), got {eps}")
    count_before = len(cloud)
    keep = cloud.opacities >= eps
    removed = cloud.keep(keep) if not np.all(keep) else []
    if removed:
        logger.debug("Pruned %d Gaussians below opacity %.4g", len(removed), eps)
    return DensifyReport(pruned=removed, count_before=count_before, count_after=len(cloud))


def opacity_reduction(cloud: GaussianCloud, factor: float) -> None:
    """所有不透明度在激活空间乘以 factor"""
    if not 0.0 < factor < 1.0:
        raise InvalidParameterError(f"opacity reduction factor must lie in (0, 1), got {factor}")
    if len(cloud):
        # 下溢到 0 的不透明度夹到最小正数，logit 保持有限
        reduced = np.maximum(factor * cloud.opacities, np.finfo(np.float64).tiny)
        cloud.set_opacities(np.arange(len(cloud)), reduced)
