"""
异常层级

所有业务异常继承 ResGSError；与内置语义一致的异常同时继承对应内置类型，
调用方可以任选其一捕获。
"""

from pathlib import Path
from typing import Optional


class ResGSError(Exception):
    """所有 ResGS 异常的基类"""


class InvalidParameterError(ResGSError, ValueError):
    """参数非有限或超出定义域"""


class DegenerateCovarianceError(ResGSError, ValueError):
    """协方差条件数超过阈值"""


class NonFiniteParameterError(ResGSError, ValueError):
    """渲染时检测到非有限参数"""

    def __init__(self, gaussian_id: int, field: str):
        self.gaussian_id = gaussian_id
        self.field = field
        super().__init__(f"non-finite {field} on Gaussian id={gaussian_id}")


class StaleAuxiliaryError(ResGSError):
    """RenderOutput 与当前点云不匹配（点云在渲染后被修改）"""


class ShapeError(ResGSError, ValueError):
    """图像尺寸不匹配或过小"""


class BoundsError(ResGSError, IndexError):
    """迭代次数等索引越界"""


class NotFoundError(ResGSError, KeyError):
    """按 id 查找 Gaussian 失败"""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "not found"


class ConfigError(ResGSError, ValueError):
    """配置文件或命令行覆盖项无效"""


class DivergenceError(ResGSError):
    """训练发散（loss 非有限）"""

    def __init__(self, iteration: int, last_checkpoint: Optional[Path]):
        self.iteration = iteration
        self.last_checkpoint = last_checkpoint
        ref = str(last_checkpoint) if last_checkpoint else "none written"
        super().__init__(
            f"non-finite loss at iteration {iteration}; last good checkpoint: {ref}"
        )


class DatasetError(ResGSError):
    """数据集加载失败"""


class CheckpointError(ResGSError):
    """checkpoint 读写失败"""
