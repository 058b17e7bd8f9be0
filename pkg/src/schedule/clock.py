"""
阶段 / 子阶段时钟

L 个阶段由边界迭代数划分（左闭右开，最后一个边界为总迭代数）；
每个阶段均分为 K 个子阶段，余数归最后一个子阶段。
全局子阶段序号 k 从 0 开始，到 L·K − 1 结束。
"""

from dataclasses import dataclass
from typing import List, NamedTuple

from src.core.errors import BoundsError, ConfigError
from src.schemas.config import StageScheduleConfig


class StageInfo(NamedTuple):
    stage: int
    substage: int
    level: int


@dataclass(frozen=True)
class StageClock:
    levels: int
    substages: int
    stage_ends: List[int]

    def __post_init__(self) -> None:
        if len(self.stage_ends) != self.levels:
            raise ConfigError(f"{len(self.stage_ends)} stage boundaries for {self.levels} stages")
        starts = [0] + list(self.stage_ends[:-1])
        if any(end <= start for start, end in zip(starts, self.stage_ends)):
            raise ConfigError(f"stage boundaries {self.stage_ends} are not strictly increasing")

    @classmethod
    def from_config(cls, cfg: StageScheduleConfig, total_iterations: int) -> "StageClock":
        return cls(
            levels=cfg.levels, substages=cfg.substages, stage_ends=cfg.resolve(total_iterations)
        )

    @property
    def total(self) -> int:
        return self.stage_ends[-1]

    def substage_bounds(self, stage: int) -> List[int]:
        """阶段内部的子阶段起点（不含阶段起点）"""
        start = 0 if stage == 1 else self.stage_ends[stage - 2]
        span = (self.stage_ends[stage - 1] - start) // self.substages
        return [start + j * span for j in range(1, self.substages)] if span > 0 else []


def stage_at(iteration: int, clock: StageClock) -> StageInfo:
    """
    Returns:
        (stage, substage, level)：stage 与 level 取 1..L，substage 为全局 0 起序号

    Raises:
        BoundsError: iteration 不在 [0, total) 内
    """
    if not 0 <= iteration < clock.total:
        raise BoundsError(f"iteration {iteration} outside [0, {clock.total})")

    stage = next(i for i, end in enumerate(clock.stage_ends, start=1) if iteration < end)
    start = 0 if stage == 1 else clock.stage_ends[stage - 2]
    span = (clock.stage_ends[stage - 1] - start) // clock.substages
    local = min((iteration - start) // span, clock.substages - 1) if span > 0 else clock.substages - 1
    return StageInfo(stage=stage, substage=(stage - 1) * clock.substages + local, level=stage)
