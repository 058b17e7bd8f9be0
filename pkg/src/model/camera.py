"""
针孔相机

像素中心位于整数坐标：u = fx·x/z + cx，v = fy·y/z + cy（相机坐标系 z 朝前）。
"""

from dataclasses import dataclass

import numpy as np

from src.core.errors import InvalidParameterError
from src.schemas.dataset import CameraSchema

ORTHONORMAL_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class Camera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray
    translation: np.ndarray
    near_clip: float = 0.01

    def __post_init__(self) -> None:
        rotation = np.asarray(self.rotation, dtype=np.float64)
        translation = np.asarray(self.translation, dtype=np.float64)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

        if rotation.shape != (3, 3) or translation.shape != (3,):
            raise InvalidParameterError("camera rotation must be 3x3 and translation a 3-vector")
        if not (np.all(np.isfinite(rotation)) and np.all(np.isfinite(translation))):
            raise InvalidParameterError("camera extrinsics must be finite")
        if np.max(np.abs(rotation @ rotation.T - np.eye(3))) > ORTHONORMAL_TOLERANCE:
            raise InvalidParameterError("camera rotation is not orthonormal")
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidParameterError(f"focal lengths must be positive, got {self.fx}, {self.fy}")
        if self.width < 1 or self.height < 1:
            raise InvalidParameterError(f"image size must be >= 1, got {self.width}x{self.height}")
        if not self.near_clip > 0:
            raise InvalidParameterError(f"near_clip must be positive, got {self.near_clip}")

    @property
    def center(self) -> np.ndarray:
        """相机中心（世界坐标）"""
        return -self.rotation.T @ self.translation

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def project(self, points: np.ndarray) -> np.ndarray:
        """世界坐标点 -> 像素坐标 (N, 2)（不做裁剪）"""
        t = self.world_to_camera(points)
        return np.stack(
            [self.fx * t[:, 0] / t[:, 2] + self.cx, self.fy * t[:, 1] / t[:, 2] + self.cy], axis=1
        )

    def scaled(self, factor: float, width: int, height: int) -> "Camera":
        """
        内参整体乘以 factor，并换成给定的图像尺寸（金字塔层使用）

        cx/cy 按比例缩放，与 box 滤波金字塔的像素中心相差不到半个粗像素；这是有意保留的约定。
        """
        return Camera(
            fx=self.fx * factor,
            fy=self.fy * factor,
            cx=self.cx * factor,
            cy=self.cy * factor,
            width=width,
            height=height,
            rotation=self.rotation,
            translation=self.translation,
            near_clip=self.near_clip,
        )

    @classmethod
    def look_at(
        cls,
        eye: np.ndarray,
        target: np.ndarray,
        up: np.ndarray,
        fov_deg: float,
        width: int,
        height: int,
        near_clip: float = 0.01,
    ) -> "Camera":
        """朝向 target 的相机；y 轴朝下（图像行方向），z 轴朝前"""
        eye = np.asarray(eye, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - eye
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(up, dtype=np.float64))
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        rotation = np.stack([right, down, forward])
        focal = 0.5 * width / np.tan(0.5 * np.deg2rad(fov_deg))
        return cls(
            fx=focal,
            fy=focal,
            cx=(width - 1) / 2.0,
            cy=(height - 1) / 2.0,
            width=width,
            height=height,
            rotation=rotation,
            translation=-rotation @ eye,
            near_clip=near_clip,
        )

    @classmethod
    def from_schema(cls, schema: CameraSchema) -> "Camera":
        return cls(
            fx=schema.fx,
            fy=schema.fy,
            cx=schema.cx,
            cy=schema.cy,
            width=schema.width,
            height=schema.height,
            rotation=np.array(schema.rotation, dtype=np.float64),
            translation=np.array(schema.translation, dtype=np.float64),
            near_clip=schema.near_clip,
        )

    def to_schema(self) -> CameraSchema:
        return CameraSchema(
            fx=self.fx,
            fy=self.fy,
            cx=self.cx,
            cy=self.cy,
            width=self.width,
            height=self.height,
            rotation=self.rotation.tolist(),
            translation=self.translation.tolist(),
            near_clip=self.near_clip,
        )
