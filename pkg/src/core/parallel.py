"""
行带并行工具

render / backward 按固定高度的行带切分图像。行带划分只取决于 band_height，
与线程数无关；结果按行带顺序返回，所以下游归约顺序固定，线程数变化时结果逐位一致。
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

from src.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")

Band = Tuple[int, int]

_executor: Optional[ThreadPoolExecutor] = None
_executor_workers: int = 0
_executor_lock = threading.Lock()  # 线程安全锁


def row_bands(height: int, band_height: Optional[int] = None) -> List[Band]:
    """把 [0, height) 切成若干 [y0, y1) 行带"""
    step = max(1, band_height or settings.RESGS_BAND_HEIGHT)
    return [(y0, min(y0 + step, height)) for y0 in range(0, height, step)]


def get_executor(workers: int) -> ThreadPoolExecutor:
    """
    获取共享线程池（线程安全）

    使用双重检查锁定，线程数变化时重建线程池。
    """
    global _executor, _executor_workers

    if _executor is not None and _executor_workers == workers:
        return _executor

    with _executor_lock:
        if _executor is not None and _executor_workers == workers:
            return _executor
        if _executor is not None:
            _executor.shutdown(wait=True)
        logger.debug("Creating render thread pool with %d workers", workers)
        _executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="resgs-band")
        _executor_workers = workers
    return _executor


def map_bands(
    fn: Callable[[Band], T], bands: Sequence[Band], workers: Optional[int] = None
) -> List[T]:
    """对每个行带执行 fn，结果按行带顺序返回"""
    n_workers = workers if workers is not None else settings.RESGS_WORKERS
    if n_workers <= 1 or len(bands) <= 1:
        return [fn(band) for band in bands]
    return list(get_executor(n_workers).map(fn, bands))
