"""
Gaussian 场景模型

- geometry: 四元数、协方差、求值与采样
- sh: 实球谐基函数与颜色
- gaussians: GaussianCloud 存储与 id / 层级记账
- camera: 针孔相机
"""

from .camera import Camera
from .gaussians import Gaussian, GaussianCloud
from .geometry import build_covariance, eval_gaussian, sample_position
from .sh import eval_sh_color

__all__ = [
    "Camera",
    "Gaussian",
    "GaussianCloud",
    "build_covariance",
    "eval_gaussian",
    "eval_sh_color",
    "sample_position",
]
