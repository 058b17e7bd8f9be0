"""
数据读写

- images: PNG / NPY 图像
- dataset: 清单加载、保存与点云初始化
- checkpoint: PLY checkpoint
- synthetic: 合成场景生成
"""

from .checkpoint import FORMAT_VERSION, load_checkpoint, read_checkpoint_header, save_checkpoint
from .dataset import Dataset, View, init_cloud_from_points, load_dataset, save_dataset, scene_extent
from .images import read_image, write_image
from .synthetic import generate_synthetic, make_synthetic

__all__ = [
    "Dataset",
    "FORMAT_VERSION",
    "View",
    "generate_synthetic",
    "init_cloud_from_points",
    "load_checkpoint",
    "load_dataset",
    "make_synthetic",
    "read_checkpoint_header",
    "read_image",
    "save_checkpoint",
    "save_dataset",
    "scene_extent",
    "write_image",
]
