"""
数据集与合成场景的数据模型

DatasetManifest 是人类可读的 JSON 清单：视图列表（图像路径 + 相机），
train / test 划分，以及可选的初始点集。
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

MANIFEST_VERSION = 1


class CameraSchema(BaseModel):
    """针孔相机（清单中的序列化形式）"""

    fx: float = Field(gt=0.0)
    fy: float = Field(gt=0.0)
    cx: float
    cy: float
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    rotation: List[List[float]] = Field(description="world-to-camera 3x3 rotation, row-major")
    translation: List[float] = Field(description="world-to-camera translation")
    near_clip: float = Field(default=0.01, gt=0.0)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _shapes(self) -> "CameraSchema":
        if len(self.rotation) != 3 or any(len(row) != 3 for row in self.rotation):
            raise ValueError("rotation must be 3x3")
        if len(self.translation) != 3:
            raise ValueError("translation must have 3 entries")
        return self


class ViewEntry(BaseModel):
    """单个视图：图像路径（相对清单目录）+ 相机"""

    id: str
    image: str
    camera: CameraSchema

    model_config = {"extra": "forbid"}


class PointSet(BaseModel):
    """初始点集（位置 + RGB，RGB 取值 [0,1]）"""

    positions: List[List[float]]
    colors: List[List[float]]

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _paired(self) -> "PointSet":
        if len(self.positions) != len(self.colors):
            raise ValueError("positions and colors must have the same length")
        if any(len(p) != 3 for p in self.positions) or any(len(c) != 3 for c in self.colors):
            raise ValueError("points and colors must be 3-vectors")
        return self


class DatasetManifest(BaseModel):
    """数据集清单"""

    version: int = MANIFEST_VERSION
    views: List[ViewEntry] = Field(default_factory=list)
    train: List[str] = Field(default_factory=list)
    test: List[str] = Field(default_factory=list)
    points: Optional[PointSet] = None

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _splits(self) -> "DatasetManifest":
        ids = [v.id for v in self.views]
        if len(set(ids)) != len(ids):
            raise ValueError("view ids must be unique")
        overlap = set(self.train) & set(self.test)
        if overlap:
            raise ValueError(f"train/test splits overlap: {sorted(overlap)}")
        unknown = (set(self.train) | set(self.test)) - set(ids)
        if unknown:
            raise ValueError(f"split references unknown views: {sorted(unknown)}")
        return self


class SyntheticSpec(BaseModel):
    """
    合成场景参数

    init_mode:
    - groundtruth-perturbed: 从真值 Gaussian 中抽取一部分中心并加扰动作为初始点
    - random: 单位立方体内均匀随机点，随机颜色

    fov_deg 为空时，焦距按立方体角点在所有视图中的投影确定，
    最远的角点落在半幅宽度的 box_fill 处。
    """

    n_gaussians: int = Field(default=64, ge=1)
    n_views: int = Field(default=10, ge=1)
    resolution: int = Field(default=128, ge=8)
    seed: int = 0
    init_mode: Literal["groundtruth-perturbed", "random"] = "groundtruth-perturbed"
    holdout_every: int = Field(default=5, ge=0, description="0 disables the test split")
    init_fraction: float = Field(default=0.25, gt=0.0, le=1.0)
    init_noise: float = Field(default=0.05, ge=0.0)
    camera_distance: float = Field(default=3.0, gt=0.0)
    camera_elevation: float = Field(default=0.35, description="radians above the ring plane")
    fov_deg: Optional[float] = Field(default=None, gt=1.0, lt=170.0)
    box_fill: float = Field(default=0.9, gt=0.0, le=1.0)
    scale_range: List[float] = Field(default_factory=lambda: [0.04, 0.12])
    opacity_range: List[float] = Field(default_factory=lambda: [0.6, 0.95])
    image_format: Literal["npy", "png"] = "npy"

    model_config = {"extra": "forbid"}
