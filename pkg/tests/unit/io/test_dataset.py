import json

import numpy as np
import pytest

from src.core.errors import DatasetError
from src.io.dataset import (
    Dataset,
    View,
    init_cloud_from_points,
    load_dataset,
    save_dataset,
    scene_extent,
)
from src.io.images import read_image, write_image
from src.model.camera import Camera
from tests.helpers import make_camera


def tiny_dataset(rng) -> Dataset:
    views = {}
    for j in range(3):
        camera = make_camera(8, 6)
        views[f"v{j}"] = View(id=f"v{j}", camera=camera, image=rng.uniform(size=(6, 8, 3)))
    points = (rng.normal(size=(5, 3)), rng.uniform(size=(5, 3)))
    return Dataset(views=views, train_ids=["v0", "v1"], test_ids=["v2"], points=points)


class TestImages:
    def test_npy_is_lossless(self, tmp_path, rng):
        image = rng.uniform(size=(5, 7, 3))
        write_image(tmp_path / "a.npy", image)
        np.testing.assert_array_equal(read_image(tmp_path / "a.npy"), image)

    def test_png_quantizes(self, tmp_path, rng):
        image = rng.uniform(size=(5, 7, 3))
        write_image(tmp_path / "a.png", image)
        assert np.max(np.abs(read_image(tmp_path / "a.png") - image)) <= 0.5 / 255 + 1e-12

    def test_missing_and_unsupported(self, tmp_path):
        with pytest.raises(DatasetError):
            read_image(tmp_path / "nope.png")
        (tmp_path / "x.bmp").write_bytes(b"")
        with pytest.raises(DatasetError):
            read_image(tmp_path / "x.bmp")

    def test_wrong_channel_count(self, tmp_path):
        np.save(tmp_path / "gray.npy", np.zeros((4, 4)))
        with pytest.raises(DatasetError):
            read_image(tmp_path / "gray.npy")


class TestDataset:
    """清单读写"""

    def test_save_and_load(self, tmp_path, rng):
        dataset = tiny_dataset(rng)
        manifest = save_dataset(dataset, tmp_path)
        loaded = load_dataset(manifest)
        assert loaded.train_ids == ["v0", "v1"] and loaded.test_ids == ["v2"]
        np.testing.assert_array_equal(loaded.views["v1"].image, dataset.views["v1"].image)
        np.testing.assert_array_equal(loaded.points[0], dataset.points[0])
        assert loaded.views["v0"].camera.fx == dataset.views["v0"].camera.fx

    def test_missing_split_means_all_train(self, tmp_path, rng):
        dataset = tiny_dataset(rng)
        path = save_dataset(dataset, tmp_path)
        data = json.loads(path.read_text())
        data["train"], data["test"] = [], []
        path.write_text(json.dumps(data))
        assert load_dataset(path).train_ids == ["v0", "v1", "v2"]

    def test_overlapping_splits_rejected(self, tmp_path, rng):
        path = save_dataset(tiny_dataset(rng), tmp_path)
        data = json.loads(path.read_text())
        data["train"], data["test"] = ["v0", "v1"], ["v1", "v2"]
        path.write_text(json.dumps(data))
        with pytest.raises(DatasetError, match="overlap"):
            load_dataset(path)

    def test_image_size_mismatch(self, tmp_path, rng):
        path = save_dataset(tiny_dataset(rng), tmp_path)
        np.save(tmp_path / "images" / "v0.npy", np.zeros((3, 3, 3)))
        with pytest.raises(DatasetError, match="v0"):
            load_dataset(path)

    def test_missing_image(self, tmp_path, rng):
        path = save_dataset(tiny_dataset(rng), tmp_path)
        (tmp_path / "images" / "v2.npy").unlink()
        with pytest.raises(DatasetError):
            load_dataset(path)

    def test_malformed_manifest(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text('{"views": [], "train": ["ghost"]}')
        with pytest.raises(DatasetError):
            load_dataset(path)
        with pytest.raises(DatasetError):
            load_dataset(tmp_path / "absent.json")


class TestInitialization:
    def test_scene_extent(self):
        cameras = [
            Camera(fx=1, fy=1, cx=0, cy=0, width=1, height=1, rotation=np.eye(3), translation=-c)
            for c in np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 0]])
        ]
        assert scene_extent(cameras) == pytest.approx(1.1)
        assert scene_extent(cameras[:1]) == pytest.approx(1.1)

    def test_init_cloud_from_points(self):
        positions = np.array([[0, 0, 0], [1, 0, 0], [0, 2, 0], [0, 0, 3.0]])
        colors = np.full((4, 3), 0.5)
        cloud = init_cloud_from_points(positions, colors, sh_degree=1)
        assert cloud.sh.shape == (4, 4, 3)
        np.testing.assert_allclose(cloud.sh[:, 0, :], 0.0, atol=1e-15)
        np.testing.assert_allclose(cloud.opacities, 0.1)
        # 原点到三个最近邻的平均距离 (1 + 2 + 3) / 3
        np.testing.assert_allclose(cloud.scales[0], 2.0)

    def test_init_from_empty(self):
        cloud = init_cloud_from_points(np.zeros((0, 3)), np.zeros((0, 3)), 0)
        assert len(cloud) == 0
