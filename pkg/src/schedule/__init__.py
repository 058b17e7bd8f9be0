"""图像金字塔与阶段时钟"""

from .clock import StageClock, StageInfo, stage_at
from .pyramid import ImagePyramid, build_pyramid, downsample, level_size

__all__ = [
    "ImagePyramid",
    "StageClock",
    "StageInfo",
    "build_pyramid",
    "downsample",
    "level_size",
    "stage_at",
]
