"""测试用的小场景构造函数"""

import numpy as np

from src.model.camera import Camera
from src.model.gaussians import GaussianCloud, opacity_to_logit
from src.model.sh import rgb_to_sh_dc


def make_camera(width: int = 32, height: int = 32, focal: float | None = None) -> Camera:
    """位于原点、朝 +z 的相机，像素中心在整数坐标"""
    f = float(focal if focal is not None else width)
    return Camera(
        fx=f,
        fy=f,
        cx=(width - 1) / 2.0,
        cy=(height - 1) / 2.0,
        width=width,
        height=height,
        rotation=np.eye(3),
        translation=np.zeros(3),
    )


def make_cloud(
    positions,
    scales=0.2,
    opacities=0.5,
    colors=(0.6, 0.4, 0.2),
    sh_degree: int = 0,
) -> GaussianCloud:
    """各向同性、单位旋转的小点云"""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    n = positions.shape[0]
    scales = np.broadcast_to(np.asarray(scales, dtype=np.float64), (n,))
    opacities = np.broadcast_to(np.asarray(opacities, dtype=np.float64), (n,))
    colors = np.broadcast_to(np.asarray(colors, dtype=np.float64), (n, 3))
    sh = np.zeros((n, (sh_degree + 1) ** 2, 3))
    sh[:, 0, :] = rgb_to_sh_dc(colors)
    rotations = np.zeros((n, 4))
    rotations[:, 0] = 1.0
    return GaussianCloud.from_arrays(
        positions=positions,
        log_scales=np.repeat(np.log(scales)[:, None], 3, axis=1),
        rotations=rotations,
        opacity_logits=opacity_to_logit(opacities),
        sh=sh,
    )
