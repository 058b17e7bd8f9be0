"""
3D-GS split / clone

τ_s = baseline_percent_dense · scene_extent
- max 线性尺度 >= τ_s：split，父被 baseline_split_children 个子 Gaussian 替换，
  尺度除以 baseline_split_divisor，位置各自从 N(μ, Σ) 采样
- 否则：clone，原位复制
子 Gaussian 继承父的层级。
"""

import logging
import math
from typing import Optional

import numpy as np

from src.core.errors import InvalidParameterError
from src.densify.base import Densifier
from src.model.gaussians import GaussianCloud
from src.model.geometry import sample_positions
from src.schemas.config import DensifyConfig
from src.schemas.report import CreatedGaussian, DensifyReport

logger = logging.getLogger(__name__)


def baseline_densify(
    cloud: GaussianCloud,
    gaussian_id: int,
    cfg: DensifyConfig,
    rng: np.random.Generator,
    scene_extent: Optional[float] = None,
) -> DensifyReport:
    """
    Raises:
        NotFoundError: id 不存在
        InvalidParameterError: 未给出 scene_extent
    """
    extent = scene_extent if scene_extent is not None else cfg.scene_extent
    if extent is None:
        raise InvalidParameterError("baseline split/clone needs a scene extent")

    row = cloud.row_of(gaussian_id)
    count_before = len(cloud)
    level = int(cloud.levels[row])
    split = float(np.max(cloud.scales[row])) >= cfg.baseline_percent_dense * extent

    if split:
        k = cfg.baseline_split_children
        positions = sample_positions(
            np.repeat(cloud.positions[row][None, :], k, axis=0),
            np.repeat(cloud.log_scales[row][None, :], k, axis=0),
            np.repeat(cloud.rotations[row][None, :], k, axis=0),
            rng,
        )
        log_scales = np.repeat(
            (cloud.log_scales[row] - math.log(cfg.baseline_split_divisor))[None, :], k, axis=0
        )
    else:
        k = 1
        positions = cloud.positions[row][None, :].copy()
        log_scales = cloud.log_scales[row][None, :].copy()

    new_ids = cloud.append(
        positions=positions,
        log_scales=log_scales,
        rotations=np.repeat(cloud.rotations[row][None, :], k, axis=0),
        opacity_logits=np.repeat(cloud.opacity_logits[row], k),
        sh=np.repeat(cloud.sh[row][None, :, :], k, axis=0),
        levels=np.full(k, level),
    )
    removed = cloud.remove([gaussian_id]) if split else []

    return DensifyReport(
        selected=[int(gaussian_id)],
        created=[CreatedGaussian(id=i, parent_id=int(gaussian_id), level=level) for i in new_ids],
        pruned=removed,
        count_before=count_before,
        count_after=len(cloud),
    )


class BaselineSplitCloneDensifier(Densifier):
    def densify_one(
        self, cloud: GaussianCloud, gaussian_id: int, rng: np.random.Generator
    ) -> DensifyReport:
        return baseline_densify(cloud, gaussian_id, self.cfg, rng, self.scene_extent)
