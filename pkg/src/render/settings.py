"""渲染常量"""

from typing import Literal, Optional

from pydantic import BaseModel, Field


class RenderSettings(BaseModel):
    """
    光栅化参数

    - dilation: 加到 2D 协方差对角线上的低通项（像素²）
    - alpha_max: 单次 alpha 上限
    - transmittance_min: 透射率低于该值时提前终止；0 表示关闭
    - cutoff_sigma: 足迹半径（马氏距离），同时决定裁剪；默认 6.5，足迹外 o·G′ < 7e-10
    - viewspace_units: 视空间梯度单位，ndc 为像素梯度乘以 (W/2, H/2)
    """

    dilation: float = Field(default=0.3, ge=0.0)
    alpha_max: float = Field(default=0.999, gt=0.0, lt=1.0)
    transmittance_min: float = Field(default=1e-4, ge=0.0, lt=1.0)
    cutoff_sigma: float = Field(default=6.5, gt=0.0)
    band_height: Optional[int] = Field(default=None, ge=1)
    workers: Optional[int] = Field(default=None, ge=1)
    viewspace_units: Literal["ndc", "pixel"] = "ndc"

    model_config = {"extra": "forbid", "frozen": True}


DEFAULT_RENDER_SETTINGS = RenderSettings()

# 梯度检查与合成 oracle 使用：关闭提前终止，足迹放宽到 10σ
EXACT_RENDER_SETTINGS = RenderSettings(transmittance_min=0.0, cutoff_sigma=10.0)
