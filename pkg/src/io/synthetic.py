"""
合成场景生成

真值 Gaussian 在以原点为中心的单位立方体内随机采样；相机均匀分布在
距原点 camera_distance 的圆环上（带仰角），朝向原点，焦距默认按立方体的投影拟合。
数据集图像由真值点云渲染得到，初始点集按 init_mode 生成。
"""

import json
import logging
from dataclasses import replace
from pathlib import Path
from typing import Tuple

import numpy as np

from src.core.errors import ConfigError
from src.io.checkpoint import save_checkpoint
from src.io.dataset import Dataset, View, save_dataset
from src.model.camera import Camera
from src.model.gaussians import GaussianCloud, opacity_to_logit
from src.model.sh import rgb_to_sh_dc, sh_dc_to_rgb
from src.render.rasterizer import render
from src.schemas.dataset import DatasetManifest, SyntheticSpec

logger = logging.getLogger(__name__)

BOX_HALF_WIDTH = 0.5
# 只用于构造相机朝向，fov_deg 为空时焦距随后重新拟合
DEFAULT_FOV_DEG = 40.0


def box_corners() -> np.ndarray:
    half = BOX_HALF_WIDTH
    return np.array(np.meshgrid([-half, half], [-half, half], [-half, half])).reshape(3, -1).T


def fit_focal(cameras: list[Camera], fill: float) -> float:
    """所有视图共用的焦距：最远的立方体角点落在半幅宽度的 fill 处"""
    corners = box_corners()
    reach = 0.0
    for camera in cameras:
        local = camera.world_to_camera(corners)
        if np.any(local[:, 2] <= camera.near_clip):
            raise ConfigError("camera ring intersects the scene box; increase camera_distance")
        tangents = np.abs(local[:, :2] / local[:, 2:3])
        half_extent = np.array([camera.cx, camera.cy])
        reach = max(reach, float(np.max(tangents / half_extent)))
    return fill / reach


def ring_cameras(spec: SyntheticSpec) -> list[Camera]:
    cameras = []
    elevation = spec.camera_elevation
    for j in range(spec.n_views):
        theta = 2.0 * np.pi * j / spec.n_views
        eye = spec.camera_distance * np.array(
            [np.cos(elevation) * np.cos(theta), np.cos(elevation) * np.sin(theta), np.sin(elevation)]
        )
        cameras.append(
            Camera.look_at(
                eye=eye,
                target=np.zeros(3),
                up=np.array([0.0, 0.0, 1.0]),
                fov_deg=spec.fov_deg if spec.fov_deg is not None else DEFAULT_FOV_DEG,
                width=spec.resolution,
                height=spec.resolution,
            )
        )
    if spec.fov_deg is None:
        focal = fit_focal(cameras, spec.box_fill)
        cameras = [replace(c, fx=focal, fy=focal) for c in cameras]
        logger.debug("Fitted focal length %.4g px to the scene box", focal)
    return cameras


def ground_truth_cloud(spec: SyntheticSpec, rng: np.random.Generator) -> GaussianCloud:
    n = spec.n_gaussians
    positions = rng.uniform(-BOX_HALF_WIDTH, BOX_HALF_WIDTH, size=(n, 3))
    low, high = spec.scale_range
    log_scales = rng.uniform(np.log(low), np.log(high), size=(n, 3))
    rotations = rng.standard_normal((n, 4))
    rotations /= np.linalg.norm(rotations, axis=1, keepdims=True)
    opacities = rng.uniform(spec.opacity_range[0], spec.opacity_range[1], size=n)
    colors = rng.uniform(0.1, 0.9, size=(n, 3))
    return GaussianCloud.from_arrays(
        positions=positions,
        log_scales=log_scales,
        rotations=rotations,
        opacity_logits=opacity_to_logit(opacities),
        sh=rgb_to_sh_dc(colors)[:, None, :],
    )


def initial_points(
    spec: SyntheticSpec, truth: GaussianCloud, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    m = max(1, int(round(spec.init_fraction * len(truth))))
    if spec.init_mode == "groundtruth-perturbed":
        rows = np.sort(rng.choice(len(truth), size=m, replace=False))
        positions = truth.positions[rows] + rng.normal(0.0, spec.init_noise, size=(m, 3))
        colors = np.clip(sh_dc_to_rgb(truth.sh[rows, 0, :]), 0.0, 1.0)
    else:
        positions = rng.uniform(-BOX_HALF_WIDTH, BOX_HALF_WIDTH, size=(m, 3))
        colors = rng.uniform(0.0, 1.0, size=(m, 3))
    return positions, colors


def generate_synthetic(spec: SyntheticSpec) -> Tuple[Dataset, GaussianCloud]:
    """内存中生成数据集与真值点云（同一 seed 逐位一致）"""
    rng = np.random.default_rng(spec.seed)
    truth = ground_truth_cloud(spec, rng)
    cameras = ring_cameras(spec)

    views = {}
    train_ids, test_ids = [], []
    for j, camera in enumerate(cameras):
        view_id = f"view_{j:03d}"
        image = render(camera, truth, sh_degree=0).image
        views[view_id] = View(id=view_id, camera=camera, image=image)
        held_out = spec.holdout_every > 0 and spec.n_views > 1 and (j + 1) % spec.holdout_every == 0
        (test_ids if held_out else train_ids).append(view_id)

    points = initial_points(spec, truth, rng)
    logger.info(
        "Generated synthetic scene: %d Gaussians, %d train / %d test views at %dx%d",
        len(truth),
        len(train_ids),
        len(test_ids),
        spec.resolution,
        spec.resolution,
    )
    return Dataset(views=views, train_ids=train_ids, test_ids=test_ids, points=points), truth


def make_synthetic(spec: SyntheticSpec, output_dir: Path) -> Tuple[DatasetManifest, GaussianCloud]:
    """
    生成合成场景并写出 manifest.json、图像、
    ground_truth.ply 以及 synthetic.json（生成参数）
    """
    dataset, truth = generate_synthetic(spec)
    output_dir = Path(output_dir)
    manifest_path = save_dataset(dataset, output_dir, image_format=spec.image_format)
    save_checkpoint(truth, output_dir / "ground_truth.ply", final=True)
    (output_dir / "synthetic.json").write_text(
        json.dumps(spec.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    manifest = DatasetManifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
    return manifest, truth
