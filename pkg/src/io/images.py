"""
图像读写

- .png：8 位 RGB（Pillow），读入后归一化到 [0, 1]
- .npy：float64 原样保存，无损
"""

from pathlib import Path

import numpy as np
from PIL import Image

from src.core.errors import DatasetError

IMAGE_SUFFIXES = (".png", ".npy")


def read_image(path: Path) -> np.ndarray:
    """读取为 H×W×3 float64"""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"image not found: {path}")
    try:
        if path.suffix == ".npy":
            image = np.load(path, allow_pickle=False).astype(np.float64)
        elif path.suffix == ".png":
            with Image.open(path) as handle:
                image = np.asarray(handle.convert("RGB"), dtype=np.float64) / 255.0
        else:
            raise DatasetError(f"unsupported image format {path.suffix!r} for {path}")
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot decode image {path}: {exc}") from exc

    if image.ndim != 3 or image.shape[2] != 3:
        raise DatasetError(f"image {path} has shape {image.shape}, expected H×W×3")
    return image


def write_image(path: Path, image: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image = np.asarray(image, dtype=np.float64)
    if path.suffix == ".npy":
        np.save(path, image, allow_pickle=False)
    elif path.suffix == ".png":
        data = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
        Image.fromarray(data).save(path)
    else:
        raise DatasetError(f"unsupported image format {path.suffix!r} for {path}")
