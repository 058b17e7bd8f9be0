"""
EWA 投影：3D Gaussian -> 屏幕空间 2D Gaussian

cov2d = J W Σ Wᵀ Jᵀ + dilation·I，其中 J 为透视投影在 μ 处的雅可比，
W 为 world-to-camera 旋转。相机坐标 z <= near_clip 或
cutoff_sigma 椭圆的像素包围盒与图像不相交时剔除。
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.model.camera import Camera
from src.model.gaussians import Gaussian, GaussianCloud
from src.model.geometry import quaternions_to_rotmats
from src.model.sh import eval_sh_colors
from src.render.settings import DEFAULT_RENDER_SETTINGS, RenderSettings

logger = logging.getLogger(__name__)

# 统计用的屏幕半径（最大特征方向上的 3σ），与求值足迹无关
SCREEN_RADIUS_SIGMA = 3.0


@dataclass
class Splat2D:
    """单个投影结果"""

    mean2d: np.ndarray
    cov2d: np.ndarray
    depth: float
    color: np.ndarray
    opacity: float
    source_id: int
    view_jacobian: np.ndarray


@dataclass
class ProjectedSplats:
    """
    一次投影中所有可见 Gaussian 的屏幕空间量（按点云行顺序），
    以及反向传播需要的中间量。order 为按深度排序后的下标。
    """

    rows: np.ndarray
    ids: np.ndarray
    means2d: np.ndarray
    cov2d: np.ndarray
    conics: np.ndarray
    depths: np.ndarray
    colors: np.ndarray
    opacities: np.ndarray
    jacobians: np.ndarray
    cam_points: np.ndarray
    rotmats: np.ndarray
    scales: np.ndarray
    cov3d: np.ndarray
    view_dirs: np.ndarray
    view_dist: np.ndarray
    sh_basis: np.ndarray
    color_clamped: np.ndarray
    bboxes: np.ndarray
    radii: np.ndarray
    order: np.ndarray

    def __len__(self) -> int:
        return int(self.rows.shape[0])

    def splat(self, index: int) -> Splat2D:
        return Splat2D(
            mean2d=self.means2d[index].copy(),
            cov2d=self.cov2d[index].copy(),
            depth=float(self.depths[index]),
            color=self.colors[index].copy(),
            opacity=float(self.opacities[index]),
            source_id=int(self.ids[index]),
            view_jacobian=self.jacobians[index].copy(),
        )


def project_cloud(
    camera: Camera,
    cloud: GaussianCloud,
    sh_degree: int,
    settings: RenderSettings = DEFAULT_RENDER_SETTINGS,
) -> ProjectedSplats:
    """投影整个点云，返回可见部分"""
    w = camera.rotation
    t_all = cloud.positions @ w.T + camera.translation
    candidates = np.nonzero(t_all[:, 2] > camera.near_clip)[0]

    t = t_all[candidates]
    tx, ty, tz = t[:, 0], t[:, 1], t[:, 2]
    fx, fy = camera.fx, camera.fy

    jac = np.zeros((len(candidates), 2, 3))
    jac[:, 0, 0] = fx / tz
    jac[:, 0, 2] = -fx * tx / (tz * tz)
    jac[:, 1, 1] = fy / tz
    jac[:, 1, 2] = -fy * ty / (tz * tz)

    rotmats = quaternions_to_rotmats(cloud.rotations[candidates])
    scales = np.exp(cloud.log_scales[candidates])
    factors = rotmats * scales[:, None, :]
    cov3d = factors @ np.swapaxes(factors, 1, 2)

    tw = jac @ w
    cov2d = tw @ cov3d @ np.swapaxes(tw, 1, 2)
    cov2d[:, 0, 0] += settings.dilation
    cov2d[:, 1, 1] += settings.dilation
    cov2d[:, 0, 1] = cov2d[:, 1, 0] = 0.5 * (cov2d[:, 0, 1] + cov2d[:, 1, 0])

    a, b, c = cov2d[:, 0, 0], cov2d[:, 0, 1], cov2d[:, 1, 1]
    det = a * c - b * b
    means2d = np.stack([fx * tx / tz + camera.cx, fy * ty / tz + camera.cy], axis=1)

    positive = det > 0.0
    half_x = settings.cutoff_sigma * np.sqrt(np.where(positive, a, 0.0))
    half_y = settings.cutoff_sigma * np.sqrt(np.where(positive, c, 0.0))
    x0 = np.maximum(np.ceil(means2d[:, 0] - half_x), 0)
    x1 = np.minimum(np.floor(means2d[:, 0] + half_x), camera.width - 1)
    y0 = np.maximum(np.ceil(means2d[:, 1] - half_y), 0)
    y1 = np.minimum(np.floor(means2d[:, 1] + half_y), camera.height - 1)
    visible = positive & (x0 <= x1) & (y0 <= y1)

    keep = np.nonzero(visible)[0]
    rows = candidates[keep]
    a, b, c, det = a[keep], b[keep], c[keep], det[keep]
    conics = np.stack([c / det, -b / det, a / det], axis=1)
    mid = 0.5 * (a + c)
    lambda_max = mid + np.sqrt(np.maximum(mid * mid - det, 0.0))

    diff = cloud.positions[rows] - camera.center
    dist = np.linalg.norm(diff, axis=1)
    dirs = diff / dist[:, None]
    colors, basis, clamped = eval_sh_colors(cloud.sh[rows], dirs, sh_degree)

    depths = t[keep, 2]
    ids = cloud.ids[rows]
    order = np.lexsort((ids, depths))

    return ProjectedSplats(
        rows=rows,
        ids=ids,
        means2d=means2d[keep],
        cov2d=cov2d[keep],
        conics=conics,
        depths=depths,
        colors=colors,
        opacities=cloud.opacities[rows],
        jacobians=jac[keep],
        cam_points=t[keep],
        rotmats=rotmats[keep],
        scales=scales[keep],
        cov3d=cov3d[keep],
        view_dirs=dirs,
        view_dist=dist,
        sh_basis=basis,
        color_clamped=clamped,
        bboxes=np.stack([x0[keep], x1[keep], y0[keep], y1[keep]], axis=1).astype(np.int64),
        radii=SCREEN_RADIUS_SIGMA * np.sqrt(lambda_max),
        order=order,
    )


def project_gaussian(
    camera: Camera,
    gaussian: Gaussian,
    sh_degree: int = 0,
    settings: RenderSettings = DEFAULT_RENDER_SETTINGS,
) -> Optional[Splat2D]:
    """投影单个 Gaussian；被剔除时返回 None"""
    degree = min(sh_degree, int(round(np.sqrt(gaussian.sh.shape[0]))) - 1)
    projected = project_cloud(
        camera, GaussianCloud.from_gaussians([gaussian], sh_degree=degree), degree, settings
    )
    if len(projected) == 0:
        return None
    return projected.splat(0)
