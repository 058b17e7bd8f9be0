"""
日志配置：Stderr + File

stdout 只用于命令结果（CSV / JSON），日志一律走 stderr，
训练时额外写一份 sidecar 日志文件（带时间戳，不进入任何数据文件）。
"""

import logging
import sys
from pathlib import Path
from typing import Optional

from src.core.config import settings

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(log_file: Optional[Path] = None, level: Optional[int] = None) -> None:
    """
    配置 Root Logger

    Args:
        log_file: 可选的 sidecar 日志文件路径，父目录会自动创建
        level: 日志级别，默认取 settings.LOG_LEVEL
    """
    formatter = logging.Formatter(LOG_FORMAT)

    stderr_handler = logging.StreamHandler(sys.stderr)
    stderr_handler.setFormatter(formatter)
    handlers: list[logging.Handler] = [stderr_handler]

    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(formatter)
        handlers.append(file_handler)

    logging.getLogger().handlers.clear()
    logging.basicConfig(
        level=level if level is not None else settings.get_log_level(),
        handlers=handlers,
        force=True,
    )
    if log_file is not None:
        logging.getLogger(__name__).info(
            "Logging configured. Log file: %s", log_file.absolute()
        )
