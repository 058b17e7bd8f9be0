"""
视空间位置梯度统计（稠密化触发量）

按点云行对齐：稠密化 / 剪枝改变点云行时需要同步 keep / extend。
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

GradSource = Literal["signed", "absolute"]


@dataclass
class ViewspaceGradStats:
    signed_grad_norm_sum: np.ndarray
    abs_grad_norm_sum: np.ndarray
    observation_count: np.ndarray
    max_screen_radius: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "ViewspaceGradStats":
        return cls(
            signed_grad_norm_sum=np.zeros(n),
            abs_grad_norm_sum=np.zeros(n),
            observation_count=np.zeros(n, dtype=np.int64),
            max_screen_radius=np.zeros(n),
        )

    def __len__(self) -> int:
        return int(self.observation_count.shape[0])

    def accumulate(self, increment: "ViewspaceGradStats") -> None:
        if len(increment) != len(self):
            raise ValueError(f"stats size mismatch: {len(increment)} vs {len(self)}")
        self.signed_grad_norm_sum += increment.signed_grad_norm_sum
        self.abs_grad_norm_sum += increment.abs_grad_norm_sum
        self.observation_count += increment.observation_count
        np.maximum(self.max_screen_radius, increment.max_screen_radius, out=self.max_screen_radius)

    def reset(self) -> None:
        self.signed_grad_norm_sum[:] = 0.0
        self.abs_grad_norm_sum[:] = 0.0
        self.observation_count[:] = 0
        self.max_screen_radius[:] = 0.0

    def keep(self, mask: np.ndarray) -> None:
        mask = np.asarray(mask, dtype=bool)
        self.signed_grad_norm_sum = self.signed_grad_norm_sum[mask]
        self.abs_grad_norm_sum = self.abs_grad_norm_sum[mask]
        self.observation_count = self.observation_count[mask]
        self.max_screen_radius = self.max_screen_radius[mask]

    def extend(self, k: int) -> None:
        """为新增的 k 个 Gaussian 追加零行"""
        fresh = ViewspaceGradStats.zeros(k)
        self.signed_grad_norm_sum = np.concatenate([self.signed_grad_norm_sum, fresh.signed_grad_norm_sum])
        self.abs_grad_norm_sum = np.concatenate([self.abs_grad_norm_sum, fresh.abs_grad_norm_sum])
        self.observation_count = np.concatenate([self.observation_count, fresh.observation_count])
        self.max_screen_radius = np.concatenate([self.max_screen_radius, fresh.max_screen_radius])

    def average(self, source: GradSource) -> np.ndarray:
        """窗口内的平均梯度范数；未观测到的 Gaussian 为 0"""
        total = self.abs_grad_norm_sum if source == "absolute" else self.signed_grad_norm_sum
        counts = self.observation_count
        return np.divide(total, counts, out=np.zeros_like(total), where=counts > 0)


def reset_stats(stats: ViewspaceGradStats) -> None:
    stats.reset()
