"""
Residual split

父 Gaussian 保留；新增一个子 Gaussian 作为残差：
- log_scale_child = log_scale_parent − ln(λ_s)
- 旋转、SH、不透明度 logit 原样复制（取父的缩减前值）
- 位置从 N(μ_parent, Σ_parent) 采样
- level_child = level_parent + 1
之后父的不透明度在激活空间乘以 β。
"""

import logging
import math

import numpy as np

from src.densify.base import Densifier
from src.model.gaussians import GaussianCloud
from src.model.geometry import sample_position
from src.schemas.config import DensifyConfig
from src.schemas.report import CreatedGaussian, DensifyReport

logger = logging.getLogger(__name__)


def residual_split(
    cloud: GaussianCloud, gaussian_id: int, cfg: DensifyConfig, rng: np.random.Generator
) -> DensifyReport:
    """
    Raises:
        NotFoundError: id 不存在
    """
    row = cloud.row_of(gaussian_id)
    count_before = len(cloud)
    position = sample_position(
        cloud.positions[row], cloud.log_scales[row], cloud.rotations[row], rng
    )
    level = int(cloud.levels[row]) + 1
    parent_opacity = float(cloud.opacities[row])

    (child_id,) = cloud.append(
        positions=position[None, :],
        log_scales=(cloud.log_scales[row] - math.log(cfg.lambda_s))[None, :],
        rotations=cloud.rotations[row][None, :].copy(),
        opacity_logits=np.array([cloud.opacity_logits[row]]),
        sh=cloud.sh[row][None, :, :].copy(),
        levels=np.array([level]),
    )
    cloud.set_opacities(np.array([row]), np.array([cfg.beta * parent_opacity]))

    return DensifyReport(
        selected=[int(gaussian_id)],
        created=[CreatedGaussian(id=child_id, parent_id=int(gaussian_id), level=level)],
        count_before=count_before,
        count_after=len(cloud),
    )


class ResidualSplitDensifier(Densifier):
    def densify_one(
        self, cloud: GaussianCloud, gaussian_id: int, rng: np.random.Generator
    ) -> DensifyReport:
        return residual_split(cloud, gaussian_id, self.cfg, rng)
