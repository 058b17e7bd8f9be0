import numpy as np
import pytest

from src.core.errors import CheckpointError
from src.io.checkpoint import load_checkpoint, read_checkpoint_header, save_checkpoint
from src.model.gaussians import GaussianCloud
from tests.helpers import make_cloud


def mixed_cloud(rng) -> GaussianCloud:
    cloud = make_cloud(rng.normal(size=(6, 3)), sh_degree=2)
    cloud.sh[:, 1:, :] = rng.normal(scale=0.1, size=(6, 8, 3))
    cloud.log_scales[:] = rng.normal(size=(6, 3))
    cloud.remove([1, 4])
    cloud.levels[:] = [0, 2, 1, 3]
    cloud.touch()
    return cloud


class TestCheckpoint:
    """PLY checkpoint"""

    def test_midrun_round_trip(self, tmp_path, rng):
        cloud = mixed_cloud(rng)
        path = save_checkpoint(cloud, tmp_path / "mid.ply", final=False, config_hash="abc123")
        restored = load_checkpoint(path)
        for name in ("positions", "log_scales", "rotations", "opacity_logits", "sh"):
            np.testing.assert_array_equal(getattr(restored, name), getattr(cloud, name))
        assert restored.ids.tolist() == [0, 2, 3, 5]
        assert restored.levels.tolist() == [0, 2, 1, 3]
        assert restored.next_id == cloud.next_id
        assert read_checkpoint_header(path)["config_hash"] == "abc123"

    def test_final_has_no_levels(self, tmp_path, rng):
        cloud = mixed_cloud(rng)
        path = save_checkpoint(cloud, tmp_path / "final.ply", final=True)
        restored = load_checkpoint(path)
        assert restored.levels.tolist() == [0, 0, 0, 0]
        assert restored.ids.tolist() == cloud.ids.tolist()

    @pytest.mark.parametrize("sh_degree", [0, 1, 3])
    def test_empty_cloud(self, tmp_path, sh_degree):
        path = save_checkpoint(GaussianCloud.empty(sh_degree), tmp_path / "empty.ply", final=True)
        restored = load_checkpoint(path)
        assert len(restored) == 0
        assert restored.sh.shape == (0, (sh_degree + 1) ** 2, 3)

    def test_single_precision_is_close(self, tmp_path, rng):
        cloud = mixed_cloud(rng)
        path = save_checkpoint(cloud, tmp_path / "f4.ply", final=False, dtype="f4")
        np.testing.assert_allclose(load_checkpoint(path).positions, cloud.positions, rtol=1e-6)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="missing.ply"):
            load_checkpoint(tmp_path / "missing.ply")

    def test_truncated_file(self, tmp_path, rng):
        path = save_checkpoint(mixed_cloud(rng), tmp_path / "cut.ply", final=False)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 40])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_wrong_version(self, tmp_path, rng):
        path = save_checkpoint(mixed_cloud(rng), tmp_path / "v.ply", final=True)
        data = path.read_bytes().replace(b"format_version 1", b"format_version 9", 1)
        path.write_bytes(data)
        with pytest.raises(CheckpointError, match="format_version"):
            load_checkpoint(path)
