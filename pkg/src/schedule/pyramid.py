"""
图像金字塔

第 L 层是原图；第 i−1 层由第 i 层做 2×2 盒式平均得到，
尺寸为 (⌊H/2⌋, ⌊W/2⌋)，最小为 1。奇数尺寸时最后一个下标截断到边界。
"""

import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)


def level_size(height: int, width: int, level: int, levels: int) -> Tuple[int, int]:
    """第 level 层的 (H, W)"""
    shift = levels - level
    return max(1, height >> shift), max(1, width >> shift)


def downsample(image: np.ndarray) -> np.ndarray:
    """2×2 盒式平均，尺寸减半（向下取整，最小 1）"""
    height, width = image.shape[:2]
    rows = np.arange(max(1, height // 2))
    cols = np.arange(max(1, width // 2))
    r0, r1 = 2 * rows, np.minimum(2 * rows + 1, height - 1)
    c0, c1 = 2 * cols, np.minimum(2 * cols + 1, width - 1)
    top = image[r0][:, c0] + image[r0][:, c1]
    bottom = image[r1][:, c0] + image[r1][:, c1]
    return (top + bottom) * 0.25


@dataclass
class ImagePyramid:
    """images[level][view_id]，level 取 1..L"""

    levels: int
    images: Dict[int, Dict[str, np.ndarray]]

    def get(self, view_id: str, level: int) -> np.ndarray:
        return self.images[level][view_id]

    def size(self, view_id: str, level: int) -> Tuple[int, int]:
        image = self.images[level][view_id]
        return int(image.shape[0]), int(image.shape[1])


def build_pyramid(
    views: Union[Mapping[str, np.ndarray], Sequence[np.ndarray]], levels: int
) -> ImagePyramid:
    """
    为每个视图构建 L 层金字塔

    Args:
        views: {view_id: 图像} 或图像序列（此时用下标字符串作为 id）
        levels: 层数 L >= 1
    """
    if levels < 1:
        raise ValueError(f"pyramid needs at least one level, got {levels}")
    if not isinstance(views, Mapping):
        views = {str(i): image for i, image in enumerate(views)}

    images: Dict[int, Dict[str, np.ndarray]] = {levels: {}}
    for view_id, image in views.items():
        images[levels][view_id] = np.asarray(image, dtype=np.float64)
    for level in range(levels - 1, 0, -1):
        images[level] = {vid: downsample(img) for vid, img in images[level + 1].items()}

    logger.debug("Built %d-level pyramid for %d views", levels, len(views))
    return ImagePyramid(levels=levels, images=images)
