"""
PLY checkpoint

二进制小端 PLY，每个 Gaussian 一个 vertex，字段顺序：
    x y z nx ny nz f_dc_0..2 f_rest_* opacity scale_0..2 rot_0..3 id [level]
f_rest 按通道优先展开（先 R 的全部高阶系数，再 G、B）；
opacity 为 logit，scale 为 log。法向量恒为 0，只为兼容常见查看器。
level 只在中间 checkpoint（final=False）中写出。

文件头注释记录 format_version、config_hash、sh_degree、next_id。
"""

import logging
from pathlib import Path
from typing import Dict, Literal, Optional

import numpy as np
from plyfile import PlyData, PlyElement

from src.core.errors import CheckpointError
from src.model.gaussians import GaussianCloud, flatten_rows
from src.model.sh import num_coeffs

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def _attribute_names(sh_degree: int) -> list[str]:
    names = ["x", "y", "z", "nx", "ny", "nz"]
    names += [f"f_dc_{i}" for i in range(3)]
    names += [f"f_rest_{i}" for i in range(3 * (num_coeffs(sh_degree) - 1))]
    names.append("opacity")
    names += [f"scale_{i}" for i in range(3)]
    names += [f"rot_{i}" for i in range(4)]
    return names


def save_checkpoint(
    cloud: GaussianCloud,
    path: Path,
    final: bool,
    config_hash: str = "",
    dtype: Literal["f8", "f4"] = "f8",
) -> Path:
    """
    写出 checkpoint

    Args:
        final: True 时不写 level 字段
        config_hash: 训练配置的哈希，记录在文件头
        dtype: 浮点字段精度；f8 可无损往返
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(cloud)
    degree = cloud.sh_degree
    float_names = _attribute_names(degree)

    fields = [(name, dtype) for name in float_names] + [("id", "i4")]
    if not final:
        fields.append(("level", "i4"))

    f_rest = flatten_rows(np.transpose(cloud.sh[:, 1:, :], (0, 2, 1)))
    values = np.concatenate(
        [
            cloud.positions,
            np.zeros((n, 3)),
            cloud.sh[:, 0, :],
            f_rest,
            cloud.opacity_logits[:, None],
            cloud.log_scales,
            cloud.rotations,
        ],
        axis=1,
    )
    vertices = np.empty(n, dtype=fields)
    for column, name in enumerate(float_names):
        vertices[name] = values[:, column]
    vertices["id"] = cloud.ids
    if not final:
        vertices["level"] = cloud.levels

    comments = [
        f"format_version {FORMAT_VERSION}",
        f"config_hash {config_hash or '-'}",
        f"sh_degree {degree}",
        f"next_id {cloud.next_id}",
    ]
    element = PlyElement.describe(vertices, "vertex")
    PlyData([element], text=False, byte_order="<", comments=comments).write(str(path))
    logger.info("Saved %s checkpoint with %d Gaussians: %s", "final" if final else "mid-run", n, path)
    return path


def _read_comments(ply: PlyData) -> Dict[str, str]:
    header: Dict[str, str] = {}
    for comment in ply.comments:
        key, _, value = comment.partition(" ")
        header[key] = value.strip()
    return header


def read_checkpoint_header(path: Path) -> Dict[str, str]:
    try:
        return _read_comments(PlyData.read(str(path)))
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc


def load_checkpoint(path: Path, expected_hash: Optional[str] = None) -> GaussianCloud:
    """
    读取 checkpoint

    final checkpoint 没有 level 字段，读入后 level 全为 0。

    Raises:
        CheckpointError: 文件缺失、截断、版本不符或字段缺失
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        ply = PlyData.read(str(path))
        vertex = ply["vertex"]
        data = vertex.data
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc

    header = _read_comments(ply)
    version = header.get("format_version")
    if version != str(FORMAT_VERSION):
        raise CheckpointError(
            f"checkpoint {path} has format_version {version}, expected {FORMAT_VERSION}"
        )
    if expected_hash is not None and header.get("config_hash") != expected_hash:
        logger.warning(
            "Checkpoint %s was written with config %s, current config is %s",
            path,
            header.get("config_hash"),
            expected_hash,
        )

    try:
        degree = int(header["sh_degree"])
        names = set(data.dtype.names or ())
        missing = [n for n in _attribute_names(degree) + ["id"] if n not in names]
        if missing:
            raise CheckpointError(f"checkpoint {path} lacks properties {missing}")

        n = len(data)
        m = num_coeffs(degree)
        sh = np.zeros((n, m, 3))
        sh[:, 0, :] = np.stack([data[f"f_dc_{i}"] for i in range(3)], axis=1)
        if m > 1:
            rest = np.stack([data[f"f_rest_{i}"] for i in range(3 * (m - 1))], axis=1)
            sh[:, 1:, :] = np.transpose(rest.reshape(n, 3, m - 1), (0, 2, 1))

        cloud = GaussianCloud.from_arrays(
            positions=np.stack([data["x"], data["y"], data["z"]], axis=1),
            log_scales=np.stack([data[f"scale_{i}"] for i in range(3)], axis=1),
            rotations=np.stack([data[f"rot_{i}"] for i in range(4)], axis=1),
            opacity_logits=np.asarray(data["opacity"]),
            sh=sh,
            levels=np.asarray(data["level"]) if "level" in names else None,
            ids=np.asarray(data["id"]),
            next_id=int(header["next_id"]),
        )
    except CheckpointError:
        raise
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint {path}: {exc}") from exc

    logger.info("Loaded checkpoint with %d Gaussians: %s", len(cloud), path)
    return cloud
