"""稠密化事件报告"""

from typing import List, Optional

from pydantic import BaseModel, Field, model_validator


class CreatedGaussian(BaseModel):
    """新建 Gaussian：id、父 id、层级"""

    id: int
    parent_id: int
    level: int = Field(ge=0)


class DensifyReport(BaseModel):
    """
    一次稠密化（或剪枝）事件的记录

    同一次事件内 created 与 pruned 不相交，计数前后一致。
    """

    iteration: Optional[int] = None
    substage: Optional[int] = None
    selected: List[int] = Field(default_factory=list)
    created: List[CreatedGaussian] = Field(default_factory=list)
    pruned: List[int] = Field(default_factory=list)
    count_before: int = 0
    count_after: int = 0

    @model_validator(mode="after")
    def _consistent(self) -> "DensifyReport":
        created_ids = {c.id for c in self.created}
        if created_ids & set(self.pruned):
            raise ValueError("a Gaussian cannot be created and pruned in the same pass")
        return self

    @property
    def created_ids(self) -> List[int]:
        return [c.id for c in self.created]

    def merge(self, other: "DensifyReport") -> "DensifyReport":
        """合并同一事件中的多步操作（计数取首尾）"""
        return DensifyReport(
            iteration=self.iteration if self.iteration is not None else other.iteration,
            substage=self.substage if self.substage is not None else other.substage,
            selected=self.selected + other.selected,
            created=self.created + other.created,
            pruned=self.pruned + other.pruned,
            count_before=self.count_before,
            count_after=other.count_after,
        )

    def csv_row(self) -> List[object]:
        return [
            "" if self.iteration is None else self.iteration,
            "" if self.substage is None else self.substage,
            len(self.selected),
            len(self.created),
            len(self.pruned),
            self.count_before,
            self.count_after,
        ]
