"""
有限差分梯度检查

随机生成小场景（<= 10 个 Gaussian，<= 32×32，SH 0 或 1 阶），目标函数取
    f(cloud) = Σ W ⊙ render(cloud)
W 为随机权重图，因此 ∂f/∂image = W。解析梯度由 backward 给出，
与中心差分逐元素比较：
    err = |a − d| / max(|a|, |d|, floor)
floor 使接近 0 的梯度按绝对误差判断。
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from src.model.camera import Camera
from src.model.gaussians import PARAMETER_FIELDS, GaussianCloud, opacity_to_logit
from src.model.sh import num_coeffs, rgb_to_sh_dc
from src.render.backward import backward
from src.render.rasterizer import render
from src.render.settings import EXACT_RENDER_SETTINGS, RenderSettings

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-5
DEFAULT_STEP = 1e-5
ERROR_FLOOR = 1e-3


@dataclass
class GradcheckScene:
    camera: Camera
    cloud: GaussianCloud
    weights: np.ndarray
    background: np.ndarray
    sh_degree: int


@dataclass
class GradcheckResult:
    max_rel_error: float = 0.0
    per_group: Dict[str, float] = field(default_factory=dict)
    scenes: int = 0
    checked: int = 0
    worst: Optional[Tuple[int, str, Tuple[int, ...]]] = None
    tolerance: float = DEFAULT_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance

    def update(self, scene: int, group: str, index: Tuple[int, ...], error: float) -> None:
        self.checked += 1
        self.per_group[group] = max(self.per_group.get(group, 0.0), error)
        if error > self.max_rel_error or self.worst is None:
            self.max_rel_error = max(self.max_rel_error, error)
            self.worst = (scene, group, index)


def random_scene(rng: np.random.Generator, max_gaussians: int = 10, max_size: int = 32) -> GradcheckScene:
    """
    随机小场景

    相机位于原点朝 +z；Gaussian 深度在 [2, 4]，不透明度 0.1–0.6，
    颜色保持为正（避开 SH 颜色在 0 处的截断）。
    """
    n = int(rng.integers(1, max_gaussians + 1))
    width = int(rng.integers(max_size // 2, max_size + 1))
    height = int(rng.integers(max_size // 2, max_size + 1))
    degree = int(rng.integers(0, 2))

    camera = Camera(
        fx=float(width),
        fy=float(width),
        cx=(width - 1) / 2.0,
        cy=(height - 1) / 2.0,
        width=width,
        height=height,
        rotation=np.eye(3),
        translation=np.zeros(3),
    )
    depth = rng.uniform(2.0, 4.0, size=n)
    lateral = rng.uniform(-0.3, 0.3, size=(n, 2)) * depth[:, None] * np.array([1.0, height / width])
    positions = np.column_stack([lateral, depth])

    sh = np.zeros((n, num_coeffs(degree), 3))
    sh[:, 0, :] = rgb_to_sh_dc(rng.uniform(0.2, 0.8, size=(n, 3)))
    if degree > 0:
        sh[:, 1:, :] = rng.uniform(-0.05, 0.05, size=(n, num_coeffs(degree) - 1, 3))

    cloud = GaussianCloud.from_arrays(
        positions=positions,
        log_scales=rng.uniform(np.log(0.1), np.log(0.4), size=(n, 3)),
        rotations=rng.standard_normal((n, 4)),
        opacity_logits=opacity_to_logit(rng.uniform(0.1, 0.6, size=n)),
        sh=sh,
    )
    return GradcheckScene(
        camera=camera,
        cloud=cloud,
        weights=rng.standard_normal((height, width, 3)),
        background=rng.uniform(0.0, 1.0, size=3),
        sh_degree=degree,
    )


def _objective(scene: GradcheckScene, settings: RenderSettings) -> float:
    image = render(scene.camera, scene.cloud, scene.background, scene.sh_degree, settings).image
    return float(np.sum(scene.weights * image))


def check_scene(
    scene: GradcheckScene,
    result: GradcheckResult,
    scene_index: int,
    step: float = DEFAULT_STEP,
    settings: RenderSettings = EXACT_RENDER_SETTINGS,
    max_elements_per_group: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> None:
    """把一个场景的逐元素误差记入 result"""
    output = render(scene.camera, scene.cloud, scene.background, scene.sh_degree, settings)
    analytic = backward(output, scene.cloud, scene.weights)[0].as_dict()

    for group in PARAMETER_FIELDS:
        param = getattr(scene.cloud, group)
        indices = list(np.ndindex(param.shape))
        if max_elements_per_group is not None and len(indices) > max_elements_per_group:
            chooser = rng if rng is not None else np.random.default_rng(scene_index)
            picked = np.sort(chooser.choice(len(indices), size=max_elements_per_group, replace=False))
            indices = [indices[i] for i in picked]

        for index in indices:
            original = param[index]
            param[index] = original + step
            scene.cloud.touch()
            f_plus = _objective(scene, settings)
            param[index] = original - step
            scene.cloud.touch()
            f_minus = _objective(scene, settings)
            param[index] = original
            scene.cloud.touch()

            numeric = (f_plus - f_minus) / (2.0 * step)
            a = float(analytic[group][index])
            error = abs(a - numeric) / max(abs(a), abs(numeric), ERROR_FLOOR)
            result.update(scene_index, group, tuple(int(i) for i in index), error)


def run_gradcheck(
    seed: int = 0,
    scenes: int = 20,
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    max_elements_per_group: Optional[int] = None,
) -> GradcheckResult:
    """
    在 scenes 个随机场景上比较解析梯度与中心差分

    Args:
        seed: 场景生成种子
        scenes: 场景数量
        step: 差分步长
        tolerance: 通过阈值（相对误差）
        max_elements_per_group: 每组参数最多抽查的元素数；None 表示全部
    """
    rng = np.random.default_rng(seed)
    result = GradcheckResult(tolerance=tolerance)
    for index in range(scenes):
        scene = random_scene(rng)
        check_scene(
            scene,
            result,
            index,
            step=step,
            max_elements_per_group=max_elements_per_group,
            rng=rng,
        )
        result.scenes += 1
        logger.debug(
            "Gradcheck scene %d: %d Gaussians, %dx%d, SH %d, running max %.3g",
            index,
            len(scene.cloud),
            scene.camera.width,
            scene.camera.height,
            scene.sh_degree,
            result.max_rel_error,
        )
    logger.info(
        "Gradcheck: %d scenes, %d elements, max relative error %.3g (%s)",
        result.scenes,
        result.checked,
        result.max_rel_error,
        "pass" if result.passed else "FAIL",
    )
    return result
