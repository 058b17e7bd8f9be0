"""
逐像素精确光栅化（前向）

每个像素按深度从前到后合成：
    C = Σ_i c_i α_i T_i + T_final · background，T_i = Π_{j<i} (1 − α_j)
其中 α_i = min(o_i · G′_i(x), alpha_max)，G′ 只在 cutoff_sigma 椭圆内求值。
透射率降到 transmittance_min 以下时，该像素在计入当前 splat 之后终止，
之后的 splat 对该像素最多还能贡献 transmittance_min 量级的颜色。

图像按固定高度的行带切分，行带之间互不依赖；每个行带记录反向传播
所需的 footprint（alpha、T_before、G′、是否截断），结果按行带顺序拼接。
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core.parallel import Band, map_bands, row_bands
from src.model.camera import Camera
from src.model.gaussians import GaussianCloud
from src.render.projection import ProjectedSplats, project_cloud
from src.render.settings import DEFAULT_RENDER_SETTINGS, RenderSettings

logger = logging.getLogger(__name__)


@dataclass
class Footprint:
    """一个 splat 在一个行带内的覆盖区域（行带局部坐标）"""

    index: int
    rows: slice
    cols: slice
    contributes: np.ndarray
    alpha: np.ndarray
    t_before: np.ndarray
    gauss: np.ndarray
    clamped: np.ndarray
    dx: np.ndarray
    dy: np.ndarray


@dataclass
class BandRecord:
    band: Band
    footprints: List[Footprint] = field(default_factory=list)


@dataclass
class RenderOutput:
    image: np.ndarray
    final_transmittance: np.ndarray
    background: np.ndarray
    camera: Camera
    splats: ProjectedSplats
    bands: List[BandRecord]
    settings: RenderSettings
    sh_degree: int
    generation: int
    cloud_size: int

    @property
    def height(self) -> int:
        return int(self.image.shape[0])

    @property
    def width(self) -> int:
        return int(self.image.shape[1])

    def contributors(self, y: int, x: int) -> List[Tuple[int, float]]:
        """像素 (y, x) 的合成序列：[(Gaussian id, α), ...]，按合成顺序"""
        result: List[Tuple[int, float]] = []
        for record in self.bands:
            y0, y1 = record.band
            if not y0 <= y < y1:
                continue
            ly = y - y0
            for fp in record.footprints:
                if not (fp.rows.start <= ly < fp.rows.stop and fp.cols.start <= x < fp.cols.stop):
                    continue
                r, c = ly - fp.rows.start, x - fp.cols.start
                if fp.contributes[r, c]:
                    result.append((int(self.splats.ids[fp.index]), float(fp.alpha[r, c])))
        return result


def _render_band(
    band: Band,
    splats: ProjectedSplats,
    width: int,
    settings: RenderSettings,
) -> Tuple[np.ndarray, np.ndarray, BandRecord]:
    y0, y1 = band
    height = y1 - y0
    color = np.zeros((height, width, 3))
    trans = np.ones((height, width))
    done = np.zeros((height, width), dtype=bool)
    record = BandRecord(band=band)
    cutoff_sq = settings.cutoff_sigma * settings.cutoff_sigma

    for index in splats.order:
        bx0, bx1, by0, by1 = splats.bboxes[index]
        ya, yb = max(int(by0), y0), min(int(by1), y1 - 1)
        if ya > yb:
            continue

        u, v = splats.means2d[index]
        ca, cb, cc = splats.conics[index]
        dx = np.arange(bx0, bx1 + 1, dtype=np.float64) - u
        dy = np.arange(ya, yb + 1, dtype=np.float64) - v
        q = (
            ca * dx[None, :] * dx[None, :]
            + 2.0 * cb * dy[:, None] * dx[None, :]
            + cc * dy[:, None] * dy[:, None]
        )
        rows = slice(ya - y0, yb - y0 + 1)
        cols = slice(int(bx0), int(bx1) + 1)

        active = (q <= cutoff_sq) & ~done[rows, cols]
        if not np.any(active):
            continue

        gauss = np.exp(-0.5 * q)
        raw = splats.opacities[index] * gauss
        clamped = raw > settings.alpha_max
        alpha = np.where(clamped, settings.alpha_max, raw)
        t_before = trans[rows, cols].copy()
        t_after = t_before * (1.0 - alpha)

        contributes = active
        if settings.transmittance_min > 0.0:
            done[rows, cols] |= active & (t_after < settings.transmittance_min)

        weight = np.where(contributes, alpha * t_before, 0.0)
        color[rows, cols] += weight[..., None] * splats.colors[index]
        trans[rows, cols] = np.where(contributes, t_after, t_before)
        record.footprints.append(
            Footprint(
                index=int(index),
                rows=rows,
                cols=cols,
                contributes=contributes,
                alpha=alpha,
                t_before=t_before,
                gauss=gauss,
                clamped=clamped,
                dx=dx,
                dy=dy,
            )
        )

    return color, trans, record


def render(
    camera: Camera,
    cloud: GaussianCloud,
    background: Sequence[float] = (0.0, 0.0, 0.0),
    sh_degree: Optional[int] = None,
    settings: RenderSettings = DEFAULT_RENDER_SETTINGS,
) -> RenderOutput:
    """
    渲染点云

    Args:
        camera: 相机
        cloud: 点云
        background: 背景 RGB
        sh_degree: 使用的 SH 阶数，默认取点云存储的阶数
        settings: 渲染参数

    Raises:
        NonFiniteParameterError: 参数中有 NaN / Inf，信息中带 Gaussian id
    """
    cloud.validate_finite()
    degree = cloud.sh_degree if sh_degree is None else min(sh_degree, cloud.sh_degree)
    bg = np.asarray(background, dtype=np.float64)

    splats = project_cloud(camera, cloud, degree, settings)
    bands = row_bands(camera.height, settings.band_height)

    def run(band: Band) -> Tuple[np.ndarray, np.ndarray, BandRecord]:
        return _render_band(band, splats, camera.width, settings)

    results = map_bands(run, bands, settings.workers)

    accumulated = np.concatenate([r[0] for r in results], axis=0)
    transmittance = np.concatenate([r[1] for r in results], axis=0)
    image = accumulated + transmittance[..., None] * bg

    logger.debug(
        "Rendered %dx%d: %d/%d splats visible", camera.width, camera.height, len(splats), len(cloud)
    )
    return RenderOutput(
        image=image,
        final_transmittance=transmittance,
        background=bg,
        camera=camera,
        splats=splats,
        bands=[r[2] for r in results],
        settings=settings,
        sh_degree=degree,
        generation=cloud.generation,
        cloud_size=len(cloud),
    )
