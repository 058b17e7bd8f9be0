"""
训练损失与评估指标

- loss: (1−λ)·L1 + λ·(1−SSIM)/2，附解析梯度
- ssim: 高斯窗 SSIM，只在窗口完全落在图像内的位置求值（valid）
- psnr: 10·log10(peak² / MSE)，MSE 为 0 时返回 +inf
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.ndimage import correlate1d

from src.core.errors import ShapeError
from src.schemas.config import LossConfig

DEFAULT_LOSS_CONFIG = LossConfig()


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    """归一化的一维高斯窗"""
    offsets = np.arange(size, dtype=np.float64) - size // 2
    window = np.exp(-(offsets * offsets) / (2.0 * sigma * sigma))
    return window / window.sum()


def _check_pair(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a, b = a[..., None], b[..., None]
    return a, b


def _blur(image: np.ndarray, window: np.ndarray) -> np.ndarray:
    """沿前两维做可分离相关（边界值不会进入 valid 区域）"""
    out = correlate1d(image, window, axis=0, mode="constant", cval=0.0)
    return correlate1d(out, window, axis=1, mode="constant", cval=0.0)


@dataclass
class _SSIMTerms:
    value: float
    grad_a: np.ndarray


def _ssim_terms(a: np.ndarray, b: np.ndarray, cfg: LossConfig, want_grad: bool) -> _SSIMTerms:
    a, b = _check_pair(a, b)
    size = cfg.ssim_window
    height, width = a.shape[:2]
    if height < size or width < size:
        raise ShapeError(f"image {height}x{width} is smaller than the {size}x{size} SSIM window")

    r = size // 2
    valid = (slice(r, height - r), slice(r, width - r))
    window = gaussian_window(size, cfg.ssim_sigma)
    c1 = (0.01 * cfg.peak) ** 2
    c2 = (0.03 * cfg.peak) ** 2

    mu_a = _blur(a, window)[valid]
    mu_b = _blur(b, window)[valid]
    e_aa = _blur(a * a, window)[valid]
    e_bb = _blur(b * b, window)[valid]
    e_ab = _blur(a * b, window)[valid]
    s_aa = e_aa - mu_a * mu_a
    s_bb = e_bb - mu_b * mu_b
    s_ab = e_ab - mu_a * mu_b

    a1 = 2.0 * mu_a * mu_b + c1
    a2 = 2.0 * s_ab + c2
    b1 = mu_a * mu_a + mu_b * mu_b + c1
    b2 = s_aa + s_bb + c2
    ssim_map = (a1 * a2) / (b1 * b2)
    value = float(np.mean(ssim_map))

    if not want_grad:
        return _SSIMTerms(value=value, grad_a=np.zeros(0))

    scale = 1.0 / ssim_map.size
    denom = b1 * b2
    d_mu = scale * (
        (2.0 * mu_b * a2 - 2.0 * mu_b * a1) / denom
        - ssim_map * (2.0 * mu_a / b1 - 2.0 * mu_a / b2)
    )
    d_saa = scale * (-ssim_map / b2)
    d_sab = scale * (2.0 * a1 / denom)

    def spread(valid_grad: np.ndarray) -> np.ndarray:
        full = np.zeros_like(a)
        full[valid] = valid_grad
        return _blur(full, window)

    grad = spread(d_mu) + 2.0 * a * spread(d_saa) + b * spread(d_sab)
    return _SSIMTerms(value=value, grad_a=grad)


def ssim(a: np.ndarray, b: np.ndarray, cfg: LossConfig = DEFAULT_LOSS_CONFIG) -> float:
    """
    平均 SSIM（各通道、各 valid 位置取均值）

    Raises:
        ShapeError: 尺寸不一致，或图像小于窗口
    """
    return _ssim_terms(a, b, cfg, want_grad=False).value


def ssim_with_grad(
    a: np.ndarray, b: np.ndarray, cfg: LossConfig = DEFAULT_LOSS_CONFIG
) -> Tuple[float, np.ndarray]:
    """SSIM 及其对 a 的梯度"""
    terms = _ssim_terms(a, b, cfg, want_grad=True)
    grad = terms.grad_a
    if np.asarray(a).ndim == 2:
        grad = grad[..., 0]
    return terms.value, grad


def loss(
    rendered: np.ndarray, target: np.ndarray, cfg: LossConfig = DEFAULT_LOSS_CONFIG
) -> Tuple[float, np.ndarray]:
    """
    训练损失及 ∂loss/∂rendered

    L1 的次梯度在 r == t 处取 0。λ = 0 时不计算 SSIM，因此小于窗口的图像也可用。
    """
    r, t = _check_pair(rendered, target)
    diff = r - t
    n = diff.size
    lam = cfg.lambda_dssim

    value = (1.0 - lam) * float(np.mean(np.abs(diff)))
    grad = (1.0 - lam) * np.sign(diff) / n
    if lam > 0.0:
        terms = _ssim_terms(r, t, cfg, want_grad=True)
        value += lam * (1.0 - terms.value) / 2.0
        grad = grad - 0.5 * lam * terms.grad_a

    if np.asarray(rendered).ndim == 2:
        grad = grad[..., 0]
    return value, grad


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    a, b = _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)
