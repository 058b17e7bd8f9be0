"""
训练

- optimizer: 按参数组的 Adam（动量按 id 对齐）
- trainer: 主循环、评估与 RunLog
"""

from .optimizer import AdamOptimizer, get_expon_lr_func
from .trainer import (
    DENSIFY_HEADER,
    METRICS_HEADER,
    EvalRecord,
    RunLog,
    StepRecord,
    Trainer,
    evaluate,
    train,
)

__all__ = [
    "AdamOptimizer",
    "DENSIFY_HEADER",
    "EvalRecord",
    "METRICS_HEADER",
    "RunLog",
    "StepRecord",
    "Trainer",
    "evaluate",
    "get_expon_lr_func",
    "train",
]
