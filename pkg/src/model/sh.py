"""
实球谐（real SH）基函数，最高 3 阶

颜色 = Σ_k Y_k(d)·c_k + 0.5，再截断到 [0, ∞)。
系数布局为 (N, M, 3)：M = (D+1)² 个基函数，最后一维是颜色通道。
"""

import numpy as np

from src.core.errors import InvalidParameterError

SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = (
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
)
SH_C3 = (
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
)

MAX_SH_DEGREE = 3


def num_coeffs(degree: int) -> int:
    return (degree + 1) ** 2


def rgb_to_sh_dc(rgb: np.ndarray) -> np.ndarray:
    """0 阶系数，使得 eval 结果等于 rgb"""
    return (np.asarray(rgb, dtype=np.float64) - 0.5) / SH_C0


def sh_dc_to_rgb(dc: np.ndarray) -> np.ndarray:
    return np.asarray(dc, dtype=np.float64) * SH_C0 + 0.5


def sh_basis(dirs: np.ndarray, degree: int) -> np.ndarray:
    """(N, 3) 方向 -> (N, (D+1)²) 基函数值"""
    dirs = np.asarray(dirs, dtype=np.float64)
    x, y, z = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    basis = np.zeros((dirs.shape[0], num_coeffs(degree)), dtype=np.float64)
    basis[:, 0] = SH_C0
    if degree < 1:
        return basis

    basis[:, 1] = -SH_C1 * y
    basis[:, 2] = SH_C1 * z
    basis[:, 3] = -SH_C1 * x
    if degree < 2:
        return basis

    xx, yy, zz = x * x, y * y, z * z
    xy, yz, xz = x * y, y * z, x * z
    basis[:, 4] = SH_C2[0] * xy
    basis[:, 5] = SH_C2[1] * yz
    basis[:, 6] = SH_C2[2] * (2.0 * zz - xx - yy)
    basis[:, 7] = SH_C2[3] * xz
    basis[:, 8] = SH_C2[4] * (xx - yy)
    if degree < 3:
        return basis

    basis[:, 9] = SH_C3[0] * y * (3.0 * xx - yy)
    basis[:, 10] = SH_C3[1] * xy * z
    basis[:, 11] = SH_C3[2] * y * (4.0 * zz - xx - yy)
    basis[:, 12] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy)
    basis[:, 13] = SH_C3[4] * x * (4.0 * zz - xx - yy)
    basis[:, 14] = SH_C3[5] * z * (xx - yy)
    basis[:, 15] = SH_C3[6] * x * (xx - 3.0 * yy)
    return basis


def sh_basis_jacobian(dirs: np.ndarray, degree: int) -> np.ndarray:
    """
    基函数对方向分量 (x, y, z) 的偏导，形状 (N, (D+1)², 3)

    把 x, y, z 当作独立变量求导；归一化的链式法则由调用方处理。
    """
    dirs = np.asarray(dirs, dtype=np.float64)
    x, y, z = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    jac = np.zeros((dirs.shape[0], num_coeffs(degree), 3), dtype=np.float64)
    if degree < 1:
        return jac

    jac[:, 1, 1] = -SH_C1
    jac[:, 2, 2] = SH_C1
    jac[:, 3, 0] = -SH_C1
    if degree < 2:
        return jac

    jac[:, 4, 0] = SH_C2[0] * y
    jac[:, 4, 1] = SH_C2[0] * x
    jac[:, 5, 1] = SH_C2[1] * z
    jac[:, 5, 2] = SH_C2[1] * y
    jac[:, 6, 0] = -2.0 * SH_C2[2] * x
    jac[:, 6, 1] = -2.0 * SH_C2[2] * y
    jac[:, 6, 2] = 4.0 * SH_C2[2] * z
    jac[:, 7, 0] = SH_C2[3] * z
    jac[:, 7, 2] = SH_C2[3] * x
    jac[:, 8, 0] = 2.0 * SH_C2[4] * x
    jac[:, 8, 1] = -2.0 * SH_C2[4] * y
    if degree < 3:
        return jac

    xx, yy, zz = x * x, y * y, z * z
    jac[:, 9, 0] = SH_C3[0] * 6.0 * x * y
    jac[:, 9, 1] = SH_C3[0] * (3.0 * xx - 3.0 * yy)
    jac[:, 10, 0] = SH_C3[1] * y * z
    jac[:, 10, 1] = SH_C3[1] * x * z
    jac[:, 10, 2] = SH_C3[1] * x * y
    jac[:, 11, 0] = SH_C3[2] * (-2.0 * x * y)
    jac[:, 11, 1] = SH_C3[2] * (4.0 * zz - xx - 3.0 * yy)
    jac[:, 11, 2] = SH_C3[2] * 8.0 * y * z
    jac[:, 12, 0] = SH_C3[3] * (-6.0 * x * z)
    jac[:, 12, 1] = SH_C3[3] * (-6.0 * y * z)
    jac[:, 12, 2] = SH_C3[3] * (6.0 * zz - 3.0 * xx - 3.0 * yy)
    jac[:, 13, 0] = SH_C3[4] * (4.0 * zz - 3.0 * xx - yy)
    jac[:, 13, 1] = SH_C3[4] * (-2.0 * x * y)
    jac[:, 13, 2] = SH_C3[4] * 8.0 * x * z
    jac[:, 14, 0] = SH_C3[5] * 2.0 * x * z
    jac[:, 14, 1] = SH_C3[5] * (-2.0 * y * z)
    jac[:, 14, 2] = SH_C3[5] * (xx - yy)
    jac[:, 15, 0] = SH_C3[6] * (3.0 * xx - 3.0 * yy)
    jac[:, 15, 1] = SH_C3[6] * (-6.0 * x * y)
    return jac


def eval_sh_colors(
    sh_coeffs: np.ndarray, dirs: np.ndarray, degree: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    批量求颜色

    Returns:
        (colors, basis, clamped)：截断后的颜色 (N, 3)、基函数 (N, M_active)、
        被截断到 0 的通道掩码 (N, 3)
    """
    basis = sh_basis(dirs, degree)
    active = np.asarray(sh_coeffs, dtype=np.float64)[:, : basis.shape[1], :]
    raw = np.einsum("nk,nkc->nc", basis, active) + 0.5
    clamped = raw < 0.0
    return np.where(clamped, 0.0, raw), basis, clamped


def eval_sh_color(sh_coeffs: np.ndarray, view_direction: np.ndarray, degree: int) -> np.ndarray:
    """单个 Gaussian：sh_coeffs (M, 3)，view_direction 单位向量"""
    if not 0 <= degree <= MAX_SH_DEGREE:
        raise InvalidParameterError(f"SH degree must be in 0..{MAX_SH_DEGREE}, got {degree}")
    colors, _, _ = eval_sh_colors(
        np.asarray(sh_coeffs, dtype=np.float64)[None, :, :],
        np.asarray(view_direction, dtype=np.float64)[None, :],
        degree,
    )
    return colors[0]
