"""
Gaussian 几何：四元数、协方差构造、求值与采样

四元数约定为 (w, x, y, z)。批量函数在内部先归一化四元数，
所以有限差分扰动后的非单位四元数也能得到一致的旋转；
单个 Gaussian 的公开接口则要求输入本身已是单位四元数。
"""

import logging

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from src.core.errors import DegenerateCovarianceError, InvalidParameterError

logger = logging.getLogger(__name__)

QUATERNION_TOLERANCE = 1e-6
MAX_CONDITION_NUMBER = 1e12


def normalize_quaternions(q: np.ndarray) -> np.ndarray:
    """按行归一化 (N, 4) 四元数"""
    q = np.asarray(q, dtype=np.float64)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def quaternions_to_rotmats(q: np.ndarray) -> np.ndarray:
    """
    (N, 4) 四元数 -> (N, 3, 3) 旋转矩阵

    输入先归一化。
    """
    r, x, y, z = np.moveaxis(normalize_quaternions(q), -1, 0)
    rot = np.empty(r.shape + (3, 3), dtype=np.float64)
    rot[..., 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    rot[..., 0, 1] = 2.0 * (x * y - r * z)
    rot[..., 0, 2] = 2.0 * (x * z + r * y)
    rot[..., 1, 0] = 2.0 * (x * y + r * z)
    rot[..., 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    rot[..., 1, 2] = 2.0 * (y * z - r * x)
    rot[..., 2, 0] = 2.0 * (x * z - r * y)
    rot[..., 2, 1] = 2.0 * (y * z + r * x)
    rot[..., 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return rot


def quaternion_to_rotmat(q: np.ndarray) -> np.ndarray:
    return quaternions_to_rotmats(np.asarray(q, dtype=np.float64)[None, :])[0]


def quaternion_multiply(q2: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """Hamilton 积 q2 ∘ q1（先 q1 后 q2）"""
    w2, x2, y2, z2 = q2
    w1, x1, y1, z1 = q1
    return np.array(
        [
            w2 * w1 - x2 * x1 - y2 * y1 - z2 * z1,
            w2 * x1 + x2 * w1 + y2 * z1 - z2 * y1,
            w2 * y1 - x2 * z1 + y2 * w1 + z2 * x1,
            w2 * z1 + x2 * y1 - y2 * x1 + z2 * w1,
        ]
    )


def scale_rotation_factors(log_scales: np.ndarray, rotations: np.ndarray) -> np.ndarray:
    """M = R S，满足 Σ = M Mᵀ，形状 (N, 3, 3)"""
    rot = quaternions_to_rotmats(rotations)
    return rot * np.exp(np.asarray(log_scales, dtype=np.float64))[:, None, :]


def build_covariances(log_scales: np.ndarray, rotations: np.ndarray) -> np.ndarray:
    """批量 Σ = R S Sᵀ Rᵀ，不做校验（渲染热路径使用）"""
    m = scale_rotation_factors(log_scales, rotations)
    cov = m @ np.swapaxes(m, -1, -2)
    return 0.5 * (cov + np.swapaxes(cov, -1, -2))


def build_covariance(log_scale: np.ndarray, rotation: np.ndarray) -> np.ndarray:
    """
    由 log 尺度和单位四元数构造 3x3 协方差

    Raises:
        InvalidParameterError: 输入非有限，或四元数偏离单位长度超过 1e-6
    """
    log_scale = np.asarray(log_scale, dtype=np.float64)
    rotation = np.asarray(rotation, dtype=np.float64)
    if log_scale.shape != (3,) or rotation.shape != (4,):
        raise InvalidParameterError(
            f"expected log_scale (3,) and rotation (4,), got {log_scale.shape} and {rotation.shape}"
        )
    if not (np.all(np.isfinite(log_scale)) and np.all(np.isfinite(rotation))):
        raise InvalidParameterError("non-finite log_scale or rotation")
    norm = float(np.linalg.norm(rotation))
    if abs(norm - 1.0) > QUATERNION_TOLERANCE:
        raise InvalidParameterError(f"rotation quaternion has norm {norm:.9f}, expected 1")
    return build_covariances(log_scale[None, :], rotation[None, :])[0]


def eval_gaussian(mu: np.ndarray, sigma: np.ndarray, x: np.ndarray) -> float:
    """
    非归一化 Gaussian 值 exp(-½ dᵀ Σ⁻¹ d)

    Raises:
        DegenerateCovarianceError: Σ 非正定或条件数超过 1e12
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    eigenvalues = np.linalg.eigvalsh(sigma)
    if eigenvalues[0] <= 0.0 or eigenvalues[-1] / eigenvalues[0] > MAX_CONDITION_NUMBER:
        raise DegenerateCovarianceError(
            f"covariance is degenerate (eigenvalues {eigenvalues[0]:.3e} .. {eigenvalues[-1]:.3e})"
        )
    d = np.asarray(x, dtype=np.float64) - np.asarray(mu, dtype=np.float64)
    solved = cho_solve(cho_factor(sigma), d)
    return float(np.exp(-0.5 * float(d @ solved)))


def check_scale_conditioning(log_scale: np.ndarray) -> None:
    """按 exp(2·log_scale) 的最大/最小比检查条件数"""
    log_scale = np.asarray(log_scale, dtype=np.float64)
    spread = 2.0 * (float(np.max(log_scale)) - float(np.min(log_scale)))
    if spread > np.log(MAX_CONDITION_NUMBER):
        raise DegenerateCovarianceError(
            f"scale ratio exceeds condition limit {MAX_CONDITION_NUMBER:.0e}"
        )


def offsets_from_normals(
    log_scales: np.ndarray, rotations: np.ndarray, normals: np.ndarray
) -> np.ndarray:
    """R S z，z 为给定的标准正态样本 (N, 3)"""
    m = scale_rotation_factors(log_scales, rotations)
    return np.einsum("nij,nj->ni", m, np.asarray(normals, dtype=np.float64))


def sample_positions(
    positions: np.ndarray,
    log_scales: np.ndarray,
    rotations: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """μ + R S z，逐行从 N(μ, Σ) 采样；z 按行顺序从 rng 取"""
    positions = np.asarray(positions, dtype=np.float64)
    normals = rng.standard_normal((positions.shape[0], 3))
    return positions + offsets_from_normals(log_scales, rotations, normals)


def sample_position(
    mu: np.ndarray, log_scale: np.ndarray, rotation: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """从 N(μ, Σ) 采样一个位置"""
    return sample_positions(
        np.asarray(mu, dtype=np.float64)[None, :],
        np.asarray(log_scale, dtype=np.float64)[None, :],
        np.asarray(rotation, dtype=np.float64)[None, :],
        rng,
    )[0]
