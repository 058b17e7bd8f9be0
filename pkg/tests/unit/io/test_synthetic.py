import json

import numpy as np
import pytest

from src.core.errors import ConfigError
from src.io.checkpoint import load_checkpoint
from src.io.dataset import load_dataset
from src.io.synthetic import box_corners, generate_synthetic, make_synthetic, ring_cameras
from src.schemas.dataset import SyntheticSpec


class TestSynthetic:
    """合成场景生成"""

    def test_deterministic(self):
        spec = SyntheticSpec(n_gaussians=8, n_views=3, resolution=16, seed=11)
        first, truth_a = generate_synthetic(spec)
        second, truth_b = generate_synthetic(spec)
        np.testing.assert_array_equal(truth_a.positions, truth_b.positions)
        for view_id in first.views:
            np.testing.assert_array_equal(first.views[view_id].image, second.views[view_id].image)
        np.testing.assert_array_equal(first.points[0], second.points[0])

    def test_holdout_split(self):
        spec = SyntheticSpec(n_gaussians=4, n_views=10, resolution=8, holdout_every=5)
        dataset, _ = generate_synthetic(spec)
        assert dataset.test_ids == ["view_004", "view_009"]
        assert len(dataset.train_ids) == 8

    def test_no_holdout(self):
        dataset, _ = generate_synthetic(SyntheticSpec(n_gaussians=4, n_views=3, resolution=8, holdout_every=0))
        assert dataset.test_ids == []

    def test_box_projects_inside_every_view(self):
        """单位立方体的角点落在每个视图内"""
        spec = SyntheticSpec()
        corners = box_corners()
        assert corners.shape == (8, 3)
        for camera in ring_cameras(spec):
            uv = camera.project(corners)
            assert np.all(uv >= 0.0) and np.all(uv <= spec.resolution - 1)
            assert np.all(camera.world_to_camera(corners)[:, 2] > 0.0)

    def test_focal_fitted_to_box(self):
        """最远的角点恰好落在半幅宽度的 box_fill 处"""
        spec = SyntheticSpec(n_views=6, resolution=64, box_fill=0.8)
        cameras = ring_cameras(spec)
        assert len({c.fx for c in cameras}) == 1
        half = (spec.resolution - 1) / 2.0
        reach = max(float(np.max(np.abs(c.project(box_corners()) - half))) for c in cameras)
        assert reach == pytest.approx(0.8 * half, rel=1e-12)

    def test_explicit_fov(self):
        spec = SyntheticSpec(n_views=2, resolution=32, fov_deg=60.0)
        camera = ring_cameras(spec)[0]
        assert camera.fx == pytest.approx(16.0 / np.tan(np.deg2rad(30.0)), rel=1e-12)

    def test_ring_inside_box(self):
        with pytest.raises(ConfigError, match="camera_distance"):
            ring_cameras(SyntheticSpec(n_views=2, camera_distance=0.4))

    @pytest.mark.parametrize("mode", ["groundtruth-perturbed", "random"])
    def test_initial_points(self, mode):
        spec = SyntheticSpec(n_gaussians=20, n_views=2, resolution=8, init_mode=mode, init_fraction=0.25)
        dataset, _ = generate_synthetic(spec)
        positions, colors = dataset.points
        assert positions.shape == (5, 3)
        assert np.all((colors >= 0.0) & (colors <= 1.0))

    def test_written_scene(self, tmp_path):
        spec = SyntheticSpec(n_gaussians=6, n_views=3, resolution=12, image_format="png", seed=2)
        manifest, truth = make_synthetic(spec, tmp_path)
        assert [v.id for v in manifest.views] == ["view_000", "view_001", "view_002"]
        loaded = load_dataset(tmp_path / "manifest.json")
        assert loaded.views["view_001"].image.shape == (12, 12, 3)
        restored = load_checkpoint(tmp_path / "ground_truth.ply")
        np.testing.assert_array_equal(restored.positions, truth.positions)
        assert SyntheticSpec.model_validate(json.loads((tmp_path / "synthetic.json").read_text())) == spec
