"""
数据集加载与保存

清单格式见 src.schemas.dataset.DatasetManifest；图像路径相对清单所在目录。
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.spatial import cKDTree

from src.core.errors import DatasetError, InvalidParameterError
from src.io.images import read_image, write_image
from src.model.camera import Camera
from src.model.gaussians import GaussianCloud, opacity_to_logit
from src.model.sh import num_coeffs, rgb_to_sh_dc
from src.schemas.dataset import DatasetManifest, PointSet, ViewEntry

logger = logging.getLogger(__name__)

INITIAL_OPACITY = 0.1
FALLBACK_SCALE = 0.1


@dataclass
class View:
    id: str
    camera: Camera
    image: np.ndarray


@dataclass
class Dataset:
    views: Dict[str, View]
    train_ids: List[str]
    test_ids: List[str] = field(default_factory=list)
    points: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __len__(self) -> int:
        return len(self.views)

    @property
    def train_views(self) -> List[View]:
        return [self.views[i] for i in self.train_ids]

    @property
    def test_views(self) -> List[View]:
        return [self.views[i] for i in self.test_ids]

    @property
    def cameras(self) -> List[Camera]:
        return [v.camera for v in self.views.values()]


def load_dataset(manifest_path: Path) -> Dataset:
    """
    加载清单及其引用的全部图像

    Raises:
        DatasetError: 清单无法解析、图像缺失或尺寸与相机不符
    """
    manifest_path = Path(manifest_path)
    logger.info("Loading dataset manifest: %s", manifest_path)
    try:
        manifest = DatasetManifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"cannot read manifest {manifest_path}: {exc}") from exc
    except ValidationError as exc:
        raise DatasetError(f"invalid manifest {manifest_path}: {exc}") from exc

    root = manifest_path.parent
    views: Dict[str, View] = {}
    for entry in manifest.views:
        try:
            camera = Camera.from_schema(entry.camera)
        except InvalidParameterError as exc:
            raise DatasetError(f"view {entry.id!r}: malformed camera: {exc}") from exc
        image = read_image(root / entry.image)
        if image.shape[:2] != (camera.height, camera.width):
            raise DatasetError(
                f"view {entry.id!r}: image {image.shape[1]}x{image.shape[0]} does not match "
                f"camera {camera.width}x{camera.height}"
            )
        views[entry.id] = View(id=entry.id, camera=camera, image=image)

    train_ids = list(manifest.train)
    if not train_ids and not manifest.test:
        train_ids = list(views)

    points = None
    if manifest.points is not None:
        points = (
            np.array(manifest.points.positions, dtype=np.float64).reshape(-1, 3),
            np.array(manifest.points.colors, dtype=np.float64).reshape(-1, 3),
        )
    logger.info("Loaded %d views (%d train / %d test)", len(views), len(train_ids), len(manifest.test))
    return Dataset(views=views, train_ids=train_ids, test_ids=list(manifest.test), points=points)


def save_dataset(dataset: Dataset, directory: Path, image_format: str = "npy") -> Path:
    """写出图像与 manifest.json，返回清单路径"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries: List[ViewEntry] = []
    for view in dataset.views.values():
        relative = f"images/{view.id}.{image_format}"
        write_image(directory / relative, view.image)
        entries.append(ViewEntry(id=view.id, image=relative, camera=view.camera.to_schema()))

    points = None
    if dataset.points is not None:
        points = PointSet(
            positions=dataset.points[0].tolist(), colors=dataset.points[1].tolist()
        )
    manifest = DatasetManifest(
        views=entries, train=dataset.train_ids, test=dataset.test_ids, points=points
    )
    path = directory / "manifest.json"
    path.write_text(
        json.dumps(manifest.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8"
    )
    return path


def scene_extent(cameras: Sequence[Camera]) -> float:
    """相机中心包围球半径 × 1.1；只有一个相机（半径为 0）时按半径 1 处理"""
    centers = np.stack([c.center for c in cameras])
    radius = float(np.max(np.linalg.norm(centers - centers.mean(axis=0), axis=1)))
    return 1.1 * (radius if radius > 0.0 else 1.0)


def init_cloud_from_points(
    positions: np.ndarray, colors: np.ndarray, sh_degree: int
) -> GaussianCloud:
    """
    由点集初始化点云

    - SH 0 阶系数由 RGB 反推，其余系数为 0
    - 尺度取到 3 个最近邻平均距离的 log
    - 旋转为单位四元数，不透明度 0.1
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    n = positions.shape[0]
    if n == 0:
        return GaussianCloud.empty(sh_degree)

    if n > 1:
        k = min(4, n)
        distances, _ = cKDTree(positions).query(positions, k=k)
        mean_dist = np.maximum(distances[:, 1:].mean(axis=1), 1e-7)
    else:
        mean_dist = np.full(1, FALLBACK_SCALE)

    sh = np.zeros((n, num_coeffs(sh_degree), 3))
    sh[:, 0, :] = rgb_to_sh_dc(colors)
    rotations = np.zeros((n, 4))
    rotations[:, 0] = 1.0
    return GaussianCloud.from_arrays(
        positions=positions,
        log_scales=np.repeat(np.log(mean_dist)[:, None], 3, axis=1),
        rotations=rotations,
        opacity_logits=np.full(n, float(opacity_to_logit(INITIAL_OPACITY))),
        sh=sh,
    )
