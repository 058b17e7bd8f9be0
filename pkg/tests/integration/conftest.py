"""
Integration Test Configuration
集成测试配置 - 桌面规模对比实验

测试场景: 64 个真值 Gaussian，8 个训练视图 + 2 个留出视图，128×128，3000 次迭代。
单次完整运行需要数分钟 CPU 时间，默认跳过。

启用方式:
- RESGS_RUN_INTEGRATION=1
- 可选 RESGS_WORKERS=<n> 设置渲染线程数
"""

from typing import Dict, List

import numpy as np
import pytest

from src.core.config import settings
from src.io.synthetic import generate_synthetic
from src.schemas.dataset import SyntheticSpec
from src.services.experiment_service import ExperimentService

# =============================================================================
# Integration Test Constants
# =============================================================================
TOTAL_ITERATIONS = 3000
SEEDS = (0, 1, 2)
SCENE_SPEC = SyntheticSpec(n_gaussians=64, n_views=10, resolution=128, holdout_every=5, seed=0)


skip_without_opt_in = pytest.mark.skipif(
    not settings.RESGS_RUN_INTEGRATION,
    reason="long comparative runs disabled (set RESGS_RUN_INTEGRATION=1)",
)


# =============================================================================
# Fixtures
# =============================================================================
@pytest.fixture(scope="session")
def synthetic_scene():
    """128² 合成场景与其真值点云"""
    return generate_synthetic(SCENE_SPEC)


@pytest.fixture(scope="session")
def experiments(synthetic_scene):
    dataset, _ = synthetic_scene
    return ExperimentService(dataset, total_iterations=TOTAL_ITERATIONS)


@pytest.fixture(scope="session")
def ablation_rows(experiments) -> Dict[str, List[List[object]]]:
    """每个消融变体在三个 seed 上的最终评估行"""
    rows = experiments.ablate(SEEDS)
    grouped: Dict[str, List[List[object]]] = {}
    for row in rows:
        grouped.setdefault(row[0], []).append(row)
    return grouped


def mean_psnr(rows: List[List[object]]) -> float:
    return float(np.mean([float(r[2]) for r in rows]))


def mean_count(rows: List[List[object]]) -> float:
    return float(np.mean([r[4] for r in rows]))
