"""
可微光栅化

- projection: EWA 投影
- rasterizer: 前向合成
- backward: 解析梯度与视空间统计
- stats: ViewspaceGradStats
- gradcheck: 有限差分梯度检查
"""

from .backward import CloudGradients, backward
from .gradcheck import GradcheckResult, run_gradcheck
from .projection import ProjectedSplats, Splat2D, project_cloud, project_gaussian
from .rasterizer import RenderOutput, render
from .settings import DEFAULT_RENDER_SETTINGS, EXACT_RENDER_SETTINGS, RenderSettings
from .stats import ViewspaceGradStats, reset_stats

__all__ = [
    "CloudGradients",
    "DEFAULT_RENDER_SETTINGS",
    "EXACT_RENDER_SETTINGS",
    "GradcheckResult",
    "ProjectedSplats",
    "RenderOutput",
    "RenderSettings",
    "Splat2D",
    "ViewspaceGradStats",
    "backward",
    "project_cloud",
    "project_gaussian",
    "render",
    "reset_stats",
    "run_gradcheck",
]
