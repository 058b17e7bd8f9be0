import csv
import json

import numpy as np
import pytest

from src.cli import main
from src.io.checkpoint import load_checkpoint
from src.io.images import read_image
from src.services.experiment_service import COMPARE_HEADER
from src.training.trainer import METRICS_HEADER


@pytest.fixture
def scene_dir(tmp_path, capsys):
    out = tmp_path / "scene"
    code = main(
        ["make-synthetic", "--out", str(out), "--n-gaussians", "8", "--n-views", "3", "--resolution", "16"]
    )
    assert code == 0
    capsys.readouterr()
    return out


class TestCli:
    """命令行"""

    def test_make_synthetic_reports_json(self, tmp_path, capsys):
        out = tmp_path / "synthetic"
        assert main(["make-synthetic", "--out", str(out), "--n-gaussians", "5", "--n-views", "2",
                     "--resolution", "8"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["views"] == 2 and payload["gaussians"] == 5
        assert (out / "manifest.json").exists() and (out / "ground_truth.ply").exists()

    def test_gradcheck(self, capsys):
        code = main(["gradcheck", "--seed", "7", "--scenes", "20", "--tolerance", "1e-5"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("max relative error: ")
        assert "positions:" in out

    def test_train_and_eval(self, scene_dir, tmp_path, capsys):
        run_dir = tmp_path / "run"
        code = main(["train", "--data", str(scene_dir / "manifest.json"), "--iterations", "12",
                     "--set", "eval_interval=6", "--out", str(run_dir)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["iterations"] == 12
        with open(run_dir / "metrics.csv", newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == METRICS_HEADER and [r[0] for r in rows[1:]] == ["6", "12"]
        assert (run_dir / "train.log").exists()

        code = main(["eval", "--checkpoint", str(run_dir / "final.ply"),
                     "--data", str(scene_dir / "manifest.json"), "--split", "all"])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["views"] == 3
        assert result["count"] == len(load_checkpoint(run_dir / "final.ply"))

    def test_render_view(self, scene_dir, tmp_path, capsys):
        image_path = tmp_path / "view.npy"
        code = main(["render", "--checkpoint", str(scene_dir / "ground_truth.ply"),
                     "--data", str(scene_dir / "manifest.json"), "--view", "view_000",
                     "--out", str(image_path), "--sh-degree", "0"])
        assert code == 0
        rendered = read_image(image_path)
        expected = np.load(scene_dir / "images" / "view_000.npy")
        np.testing.assert_array_equal(rendered, expected)
        assert json.loads(capsys.readouterr().out)["width"] == 16

    def test_missing_checkpoint(self, tmp_path, capsys):
        missing = tmp_path / "nowhere.ply"
        code = main(["eval", "--checkpoint", str(missing), "--data", str(tmp_path / "m.json")])
        assert code == 1
        assert str(missing) in capsys.readouterr().err

    def test_render_without_camera(self, scene_dir, tmp_path, capsys):
        code = main(["render", "--checkpoint", str(scene_dir / "ground_truth.ply"),
                     "--out", str(tmp_path / "x.npy")])
        assert code == 2
        assert "--camera" in capsys.readouterr().err

    def test_bad_override(self, scene_dir):
        assert main(["train", "--data", str(scene_dir / "manifest.json"), "--set", "nope=1"]) == 2

    def test_usage_error(self):
        assert main(["train"]) == 2
        assert main(["no-such-command"]) == 2

    def test_compare_writes_csv(self, scene_dir, tmp_path, capsys):
        out = tmp_path / "compare.csv"
        code = main(["compare", "--data", str(scene_dir / "manifest.json"), "--iterations", "10",
                     "--seeds", "0", "--set", "eval_interval=5", "--out", str(out)])
        assert code == 0
        with open(out, newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == COMPARE_HEADER
        assert {r[0] for r in rows[1:]} == {"residual-split", "baseline-split-clone"}
        assert len(rows) == 1 + 2 * 2
        assert json.loads(capsys.readouterr().out)["rows"] == 4
