"""
解析反向传播

像素级：按前向顺序重放每个行带，逐 splat 求
    ∂C/∂c_i = α_i T_i
    ∂C/∂α_i = c_i T_i − (C − A_i) / (1 − α_i)，A_i 为合成到 i（含）的累积颜色
再经 α = o·exp(-½ dᵀQd) 传到不透明度、2D 均值和 conic Q。

Gaussian 级：conic -> cov2d -> (Σ, J) -> (R, S, 相机坐标) -> 参数，
颜色的梯度同时经 SH 基函数传到视线方向，再回到位置。

各行带的部分和按行带顺序相加，线程数不影响结果。
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.core.errors import ShapeError, StaleAuxiliaryError
from src.core.parallel import map_bands
from src.model.gaussians import GaussianCloud
from src.model.geometry import normalize_quaternions
from src.model.sh import num_coeffs, sh_basis_jacobian
from src.render.rasterizer import BandRecord, RenderOutput
from src.render.stats import ViewspaceGradStats

logger = logging.getLogger(__name__)


@dataclass
class CloudGradients:
    """与点云参数同形状的梯度"""

    positions: np.ndarray
    log_scales: np.ndarray
    rotations: np.ndarray
    opacity_logits: np.ndarray
    sh: np.ndarray
    means2d: np.ndarray

    @classmethod
    def zeros_like(cls, cloud: GaussianCloud) -> "CloudGradients":
        return cls(
            positions=np.zeros_like(cloud.positions),
            log_scales=np.zeros_like(cloud.log_scales),
            rotations=np.zeros_like(cloud.rotations),
            opacity_logits=np.zeros_like(cloud.opacity_logits),
            sh=np.zeros_like(cloud.sh),
            means2d=np.zeros((len(cloud), 2)),
        )

    def as_dict(self) -> dict:
        return {
            "positions": self.positions,
            "log_scales": self.log_scales,
            "rotations": self.rotations,
            "opacity_logits": self.opacity_logits,
            "sh": self.sh,
        }


@dataclass
class _SplatPartials:
    color: np.ndarray
    opacity: np.ndarray
    mean: np.ndarray
    mean_abs: np.ndarray
    conic: np.ndarray
    touched: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "_SplatPartials":
        return cls(
            color=np.zeros((n, 3)),
            opacity=np.zeros(n),
            mean=np.zeros((n, 2)),
            mean_abs=np.zeros((n, 2)),
            conic=np.zeros((n, 3)),
            touched=np.zeros(n, dtype=bool),
        )

    def add(self, other: "_SplatPartials") -> None:
        self.color += other.color
        self.opacity += other.opacity
        self.mean += other.mean
        self.mean_abs += other.mean_abs
        self.conic += other.conic
        self.touched |= other.touched


def _backward_band(
    record: BandRecord, output: RenderOutput, grad_image: np.ndarray
) -> _SplatPartials:
    splats = output.splats
    partials = _SplatPartials.zeros(len(splats))
    y0, y1 = record.band
    final = output.image[y0:y1]
    grad = grad_image[y0:y1]
    acc = np.zeros_like(final)

    for fp in record.footprints:
        i = fp.index
        rows, cols = fp.rows, fp.cols
        color = splats.colors[i]

        weight = np.where(fp.contributes, fp.alpha * fp.t_before, 0.0)
        acc[rows, cols] += weight[..., None] * color

        g = grad[rows, cols]
        residual = final[rows, cols] - acc[rows, cols]
        partials.color[i] += np.sum(g * weight[..., None], axis=(0, 1))

        d_alpha = np.sum(
            g * (color * fp.t_before[..., None] - residual / (1.0 - fp.alpha)[..., None]), axis=2
        )
        d_alpha = np.where(fp.contributes & ~fp.clamped, d_alpha, 0.0)
        partials.opacity[i] += np.sum(d_alpha * fp.gauss)

        # α = o·exp(power)，power = -½ q
        d_power = d_alpha * fp.alpha
        ca, cb, cc = splats.conics[i]
        dx, dy = fp.dx[None, :], fp.dy[:, None]
        gx = d_power * (ca * dx + cb * dy)
        gy = d_power * (cb * dx + cc * dy)
        partials.mean[i] += (np.sum(gx), np.sum(gy))
        partials.mean_abs[i] += (np.sum(np.abs(gx)), np.sum(np.abs(gy)))
        partials.conic[i] -= 0.5 * np.array(
            [np.sum(d_power * dx * dx), np.sum(d_power * dx * dy), np.sum(d_power * dy * dy)]
        )
        partials.touched[i] = True

    return partials


def _quaternion_backward(quats: np.ndarray, d_rot: np.ndarray) -> np.ndarray:
    """∂L/∂R -> ∂L/∂q（经过归一化）"""
    q_hat = normalize_quaternions(quats)
    norm = np.linalg.norm(quats, axis=1)
    r, x, y, z = q_hat.T
    d = d_rot
    dr = 2.0 * (
        -z * d[:, 0, 1] + y * d[:, 0, 2] + z * d[:, 1, 0] - x * d[:, 1, 2] - y * d[:, 2, 0] + x * d[:, 2, 1]
    )
    dx = 2.0 * (
        y * d[:, 0, 1] + z * d[:, 0, 2] + y * d[:, 1, 0] - 2.0 * x * d[:, 1, 1] - r * d[:, 1, 2]
        + z * d[:, 2, 0] + r * d[:, 2, 1] - 2.0 * x * d[:, 2, 2]
    )
    dy = 2.0 * (
        -2.0 * y * d[:, 0, 0] + x * d[:, 0, 1] + r * d[:, 0, 2] + x * d[:, 1, 0] + z * d[:, 1, 2]
        - r * d[:, 2, 0] + z * d[:, 2, 1] - 2.0 * y * d[:, 2, 2]
    )
    dz = 2.0 * (
        -2.0 * z * d[:, 0, 0] - r * d[:, 0, 1] + x * d[:, 0, 2] + r * d[:, 1, 0] - 2.0 * z * d[:, 1, 1]
        + y * d[:, 1, 2] + x * d[:, 2, 0] + y * d[:, 2, 1]
    )
    d_hat = np.stack([dr, dx, dy, dz], axis=1)
    radial = np.sum(q_hat * d_hat, axis=1, keepdims=True)
    return (d_hat - q_hat * radial) / norm[:, None]


def backward(
    output: RenderOutput, cloud: GaussianCloud, grad_image: np.ndarray
) -> tuple[CloudGradients, ViewspaceGradStats]:
    """
    反向传播 loss 对渲染图像的梯度

    Args:
        output: 同一点云、同一相机的渲染结果
        cloud: 点云（generation 必须与渲染时一致）
        grad_image: ∂loss/∂image，形状 H×W×3

    Returns:
        (参数梯度, 本视图的视空间梯度统计增量)

    Raises:
        StaleAuxiliaryError: 点云在渲染之后被修改
        ShapeError: grad_image 形状与图像不符
    """
    if output.generation != cloud.generation or output.cloud_size != len(cloud):
        raise StaleAuxiliaryError(
            f"render output is for generation {output.generation}, cloud is at {cloud.generation}"
        )
    grad_image = np.asarray(grad_image, dtype=np.float64)
    if grad_image.shape != output.image.shape:
        raise ShapeError(
            f"gradient image shape {grad_image.shape} does not match render {output.image.shape}"
        )

    camera = output.camera
    splats = output.splats
    n = len(splats)
    grads = CloudGradients.zeros_like(cloud)
    increment = ViewspaceGradStats.zeros(len(cloud))
    if n == 0:
        return grads, increment

    band_partials = map_bands(
        lambda record: _backward_band(record, output, grad_image),
        output.bands,
        output.settings.workers,
    )
    partials = _SplatPartials.zeros(n)
    for part in band_partials:
        partials.add(part)

    rows = splats.rows

    # 颜色 -> SH 系数与视线方向
    d_color = np.where(splats.color_clamped, 0.0, partials.color)
    m_active = num_coeffs(output.sh_degree)
    grads.sh[rows, :m_active, :] = splats.sh_basis[:, :, None] * d_color[:, None, :]
    d_pos = np.zeros((n, 3))
    if output.sh_degree > 0:
        basis_jac = sh_basis_jacobian(splats.view_dirs, output.sh_degree)
        d_basis = np.einsum("nkc,nc->nk", cloud.sh[rows, :m_active, :], d_color)
        d_dir = np.einsum("nk,nkj->nj", d_basis, basis_jac)
        dirs = splats.view_dirs
        radial = np.sum(dirs * d_dir, axis=1, keepdims=True)
        d_pos += (d_dir - dirs * radial) / splats.view_dist[:, None]

    # 不透明度
    o = splats.opacities
    grads.opacity_logits[rows] = partials.opacity * o * (1.0 - o)

    # conic -> cov2d：dC = -Q dQ Q
    qa, qb, qc = splats.conics.T
    conic = np.stack([np.stack([qa, qb], 1), np.stack([qb, qc], 1)], 1)
    da, db, dc = partials.conic.T
    d_conic = np.stack([np.stack([da, db], 1), np.stack([db, dc], 1)], 1)
    d_cov2d = -conic @ d_conic @ conic

    # cov2d = T Σ Tᵀ，T = J W
    w = camera.rotation
    jac = splats.jacobians
    t_mat = jac @ w
    d_cov3d = np.swapaxes(t_mat, 1, 2) @ d_cov2d @ t_mat
    d_t_mat = 2.0 * d_cov2d @ t_mat @ splats.cov3d
    d_jac = d_t_mat @ w.T

    # J 与 mean2d -> 相机坐标
    fx, fy = camera.fx, camera.fy
    tx, ty, tz = splats.cam_points.T
    du, dv = partials.mean.T
    d_cam = np.zeros((n, 3))
    d_cam[:, 0] = du * fx / tz - d_jac[:, 0, 2] * fx / (tz * tz)
    d_cam[:, 1] = dv * fy / tz - d_jac[:, 1, 2] * fy / (tz * tz)
    d_cam[:, 2] = (
        -du * fx * tx / (tz * tz)
        - dv * fy * ty / (tz * tz)
        - d_jac[:, 0, 0] * fx / (tz * tz)
        - d_jac[:, 1, 1] * fy / (tz * tz)
        + d_jac[:, 0, 2] * 2.0 * fx * tx / (tz * tz * tz)
        + d_jac[:, 1, 2] * 2.0 * fy * ty / (tz * tz * tz)
    )
    d_pos += d_cam @ w
    grads.positions[rows] = d_pos

    # Σ = M Mᵀ，M = R diag(s)
    rot = splats.rotmats
    scales = splats.scales
    d_m = 2.0 * d_cov3d @ (rot * scales[:, None, :])
    d_scale = np.sum(d_m * rot, axis=1)
    grads.log_scales[rows] = d_scale * scales
    d_rot = d_m * scales[:, None, :]
    grads.rotations[rows] = _quaternion_backward(cloud.rotations[rows], d_rot)

    grads.means2d[rows] = partials.mean

    # 视空间统计
    if output.settings.viewspace_units == "ndc":
        unit = np.array([0.5 * camera.width, 0.5 * camera.height])
    else:
        unit = np.ones(2)
    touched = partials.touched
    increment.signed_grad_norm_sum[rows] = np.where(
        touched, np.linalg.norm(partials.mean * unit, axis=1), 0.0
    )
    increment.abs_grad_norm_sum[rows] = np.where(
        touched, np.linalg.norm(partials.mean_abs * unit, axis=1), 0.0
    )
    increment.observation_count[rows] = touched.astype(np.int64)
    increment.max_screen_radius[rows] = np.where(touched, splats.radii, 0.0)
    return grads, increment
