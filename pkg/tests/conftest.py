from __future__ import annotations

import logging
import sys

import numpy as np
import pytest

from src.model.camera import Camera
from src.model.gaussians import GaussianCloud
from tests.helpers import make_camera, make_cloud


# =============================================================================
# Pytest Markers Registration
# =============================================================================
def pytest_configure(config):
    """注册自定义标记以避免警告。"""
    config.addinivalue_line(
        "markers",
        "integration: long comparative training runs (requires RESGS_RUN_INTEGRATION=1)",
    )


# =============================================================================
# Logging Configuration
# =============================================================================
# 配置测试日志
logging.basicConfig(
    level=logging.DEBUG,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    stream=sys.stderr,
)
logger = logging.getLogger(__name__)
logger.info("测试日志配置完成: level=DEBUG")


@pytest.fixture(autouse=True)
def log_test_start(request):
    """为每个测试记录开始和结束日志。"""
    logger.info("=" * 80)
    logger.info("开始测试: %s", request.node.name)
    yield
    logger.info("完成测试: %s", request.node.name)
    logger.info("=" * 80)


@pytest.fixture(autouse=True)
def single_worker(request, monkeypatch):
    """
    单元测试默认单线程渲染，输出目录指向临时目录。

    标记为 @pytest.mark.integration 的测试保留环境配置。
    """
    if request.node.get_closest_marker("integration"):
        return
    from src.core.config import settings

    monkeypatch.setattr(settings, "RESGS_WORKERS", 1)
    monkeypatch.setattr(settings, "RESGS_BAND_HEIGHT", 32)
    monkeypatch.setattr(settings, "RESGS_OUTPUT_DIR", str(request.getfixturevalue("tmp_path")))


# =============================================================================
# Scene Fixtures
# =============================================================================
@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def camera() -> Camera:
    return make_camera()


@pytest.fixture
def two_gaussians() -> GaussianCloud:
    """前后两个 Gaussian，前者偏左"""
    return make_cloud([[-0.2, 0.0, 2.5], [0.1, 0.05, 3.5]], scales=[0.25, 0.35], opacities=[0.5, 0.7])
