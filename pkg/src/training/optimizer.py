"""
按参数组的 Adam

动量按 Gaussian id 对齐：稠密化新增的 Gaussian 从零动量开始，
被删除的 Gaussian 的动量随之丢弃，保留下来的 Gaussian 动量不变。

某个 Gaussian 本步梯度全部为 0（未参与渲染）时只衰减动量、不更新参数；
梯度出现非有限值时记录警告并跳过该 Gaussian。
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from src.model.gaussians import PARAMETER_FIELDS, GaussianCloud, flatten_rows
from src.schemas.config import OptimizerConfig

logger = logging.getLogger(__name__)


def get_expon_lr_func(lr_init: float, lr_final: float, max_steps: int) -> Callable[[int], float]:
    """从 lr_init 到 lr_final 的对数线性衰减；step >= max_steps 后保持 lr_final"""

    def helper(step: int) -> float:
        t = min(max(step / max_steps, 0.0), 1.0) if max_steps > 0 else 1.0
        return math.exp(math.log(lr_init) * (1.0 - t) + math.log(lr_final) * t)

    return helper


@dataclass
class _Moments:
    first: Dict[str, np.ndarray]
    second: Dict[str, np.ndarray]


class AdamOptimizer:
    def __init__(self, cfg: OptimizerConfig, total_iterations: int, spatial_lr_scale: float = 1.0):
        self.cfg = cfg
        self.spatial_lr_scale = spatial_lr_scale if cfg.scale_position_lr_by_extent else 1.0
        self.position_lr = get_expon_lr_func(
            cfg.position_lr_init * self.spatial_lr_scale,
            cfg.position_lr_final * self.spatial_lr_scale,
            total_iterations,
        )
        self.step_count = 0
        self.ids = np.zeros(0, dtype=np.int64)
        self.moments = _Moments(first={}, second={})

    def learning_rates(self, iteration: int, sh_coeffs: int) -> Dict[str, np.ndarray]:
        """各参数组学习率；SH 的高阶系数使用 sh_lr / sh_rest_lr_divisor"""
        sh_lr = np.full((sh_coeffs, 1), self.cfg.sh_lr / self.cfg.sh_rest_lr_divisor)
        sh_lr[0] = self.cfg.sh_lr
        return {
            "positions": np.asarray(self.position_lr(iteration)),
            "log_scales": np.asarray(self.cfg.scale_lr),
            "rotations": np.asarray(self.cfg.rotation_lr),
            "opacity_logits": np.asarray(self.cfg.opacity_lr),
            "sh": sh_lr,
        }

    def sync(self, cloud: GaussianCloud) -> None:
        """按 id 把动量与点云行对齐"""
        if self.moments.first and np.array_equal(self.ids, cloud.ids):
            return
        lookup = {int(i): row for row, i in enumerate(self.ids)}
        source = np.array([lookup.get(int(i), -1) for i in cloud.ids], dtype=np.int64)
        found = source >= 0

        for name, values in cloud.parameters().items():
            for store in (self.moments.first, self.moments.second):
                fresh = np.zeros_like(values)
                if name in store:
                    fresh[found] = store[name][source[found]]
                store[name] = fresh
        self.ids = cloud.ids.copy()

    def step(self, cloud: GaussianCloud, grads: Dict[str, np.ndarray], iteration: int) -> List[int]:
        """
        原地更新点云参数

        Returns:
            因梯度非有限而跳过的 Gaussian id
        """
        self.sync(cloud)
        self.step_count += 1
        n = len(cloud)
        b1, b2, eps = self.cfg.beta1, self.cfg.beta2, self.cfg.eps

        finite = np.ones(n, dtype=bool)
        active = np.zeros(n, dtype=bool)
        for name in PARAMETER_FIELDS:
            flat = flatten_rows(grads[name])
            finite &= np.all(np.isfinite(flat), axis=1)
            active |= np.any(flat != 0.0, axis=1)
        skipped = [int(i) for i in cloud.ids[~finite]]
        if skipped:
            logger.warning("Skipping optimizer step for %d Gaussians with non-finite gradients: %s",
                           len(skipped), skipped[:10])

        update = finite & active
        decay = finite & ~active
        lrs = self.learning_rates(iteration, cloud.sh.shape[1])
        bias1 = 1.0 - b1 ** self.step_count
        bias2 = 1.0 - b2 ** self.step_count

        for name, param in cloud.parameters().items():
            m = self.moments.first[name]
            v = self.moments.second[name]
            g = grads[name]
            m[update] = b1 * m[update] + (1.0 - b1) * g[update]
            v[update] = b2 * v[update] + (1.0 - b2) * g[update] * g[update]
            m[decay] = b1 * m[decay]
            v[decay] = b2 * v[decay]
            m_hat = m[update] / bias1
            v_hat = v[update] / bias2
            param[update] -= lrs[name] * m_hat / (np.sqrt(v_hat) + eps)

        cloud.touch()
        return skipped
