"""
GaussianCloud：可训练场景

按行存储（结构数组的列式形式），每行一个 Gaussian：
- positions (N, 3)        世界坐标
- log_scales (N, 3)       log 尺度
- rotations (N, 4)        四元数 (w, x, y, z)
- opacity_logits (N,)     o = sigmoid(logit)
- sh (N, M, 3)            M = (sh_degree + 1)²
- levels (N,)             精细度层级，初始化时为 0
- ids (N,)                稳定 id，剪枝后不复用

generation 在每次修改后递增，渲染结果据此判断是否过期。
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import numpy as np
from scipy.special import expit, logit

from src.core.errors import InvalidParameterError, NonFiniteParameterError, NotFoundError
from src.model.geometry import normalize_quaternions
from src.model.sh import MAX_SH_DEGREE, num_coeffs

logger = logging.getLogger(__name__)

PARAMETER_FIELDS = ("positions", "log_scales", "rotations", "opacity_logits", "sh")


def flatten_rows(values: np.ndarray) -> np.ndarray:
    """按第一维展平为 (N, D)；N = 0 时同样成立"""
    values = np.asarray(values)
    return values.reshape(values.shape[0], int(np.prod(values.shape[1:], dtype=np.int64)))


def opacity_to_logit(opacity: np.ndarray) -> np.ndarray:
    opacity = np.asarray(opacity, dtype=np.float64)
    if np.any(opacity <= 0.0) or np.any(opacity >= 1.0):
        raise InvalidParameterError("opacity must lie strictly inside (0, 1)")
    return logit(opacity)


@dataclass
class Gaussian:
    """单个 Gaussian 的参数副本"""

    position: np.ndarray
    log_scale: np.ndarray
    rotation: np.ndarray
    opacity_logit: float
    sh: np.ndarray
    level: int = 0
    id: int = 0

    @property
    def opacity(self) -> float:
        return float(expit(self.opacity_logit))


@dataclass
class GaussianCloud:
    positions: np.ndarray
    log_scales: np.ndarray
    rotations: np.ndarray
    opacity_logits: np.ndarray
    sh: np.ndarray
    levels: np.ndarray
    ids: np.ndarray
    next_id: int = 0
    generation: int = 0
    _row_cache: Optional[Dict[int, int]] = field(default=None, repr=False, compare=False)

    # ==================== 构造 ====================

    @classmethod
    def empty(cls, sh_degree: int = 0) -> "GaussianCloud":
        m = num_coeffs(sh_degree)
        return cls(
            positions=np.zeros((0, 3)),
            log_scales=np.zeros((0, 3)),
            rotations=np.zeros((0, 4)),
            opacity_logits=np.zeros(0),
            sh=np.zeros((0, m, 3)),
            levels=np.zeros(0, dtype=np.int64),
            ids=np.zeros(0, dtype=np.int64),
        )

    @classmethod
    def from_arrays(
        cls,
        positions: np.ndarray,
        log_scales: np.ndarray,
        rotations: np.ndarray,
        opacity_logits: np.ndarray,
        sh: np.ndarray,
        levels: Optional[np.ndarray] = None,
        ids: Optional[np.ndarray] = None,
        next_id: Optional[int] = None,
    ) -> "GaussianCloud":
        """
        从数组构造点云并校验形状

        ids 缺省为 0..N-1；levels 缺省为 0。
        """
        positions = np.array(positions, dtype=np.float64).reshape(-1, 3)
        n = positions.shape[0]
        sh = np.array(sh, dtype=np.float64)
        if sh.ndim != 3 or sh.shape[0] != n or sh.shape[2] != 3:
            raise InvalidParameterError(f"sh must have shape (N, M, 3), got {sh.shape}")
        degree = int(round(np.sqrt(sh.shape[1]))) - 1
        if num_coeffs(degree) != sh.shape[1] or degree > MAX_SH_DEGREE:
            raise InvalidParameterError(f"{sh.shape[1]} SH coefficients is not (D+1)² for D <= 3")

        ids_arr = np.arange(n, dtype=np.int64) if ids is None else np.array(ids, dtype=np.int64)
        if len(np.unique(ids_arr)) != n:
            raise InvalidParameterError("Gaussian ids must be unique")
        cloud = cls(
            positions=positions,
            log_scales=np.array(log_scales, dtype=np.float64).reshape(n, 3),
            rotations=np.array(rotations, dtype=np.float64).reshape(n, 4),
            opacity_logits=np.array(opacity_logits, dtype=np.float64).reshape(n),
            sh=sh,
            levels=(
                np.zeros(n, dtype=np.int64)
                if levels is None
                else np.array(levels, dtype=np.int64).reshape(n)
            ),
            ids=ids_arr,
            next_id=(int(ids_arr.max()) + 1 if n else 0) if next_id is None else int(next_id),
        )
        if n and cloud.next_id <= int(ids_arr.max()):
            raise InvalidParameterError("next_id must exceed every existing id")
        return cloud

    @classmethod
    def from_gaussians(cls, gaussians: Iterable[Gaussian], sh_degree: int = 0) -> "GaussianCloud":
        items = list(gaussians)
        if not items:
            return cls.empty(sh_degree)
        return cls.from_arrays(
            positions=np.stack([g.position for g in items]),
            log_scales=np.stack([g.log_scale for g in items]),
            rotations=np.stack([g.rotation for g in items]),
            opacity_logits=np.array([g.opacity_logit for g in items]),
            sh=np.stack([g.sh for g in items]),
            levels=np.array([g.level for g in items]),
            ids=np.array([g.id for g in items]),
        )

    def copy(self) -> "GaussianCloud":
        return GaussianCloud(
            positions=self.positions.copy(),
            log_scales=self.log_scales.copy(),
            rotations=self.rotations.copy(),
            opacity_logits=self.opacity_logits.copy(),
            sh=self.sh.copy(),
            levels=self.levels.copy(),
            ids=self.ids.copy(),
            next_id=self.next_id,
            generation=self.generation,
        )

    # ==================== 访问 ====================

    def __len__(self) -> int:
        return int(self.positions.shape[0])

    @property
    def sh_degree(self) -> int:
        return int(round(np.sqrt(self.sh.shape[1]))) - 1

    @property
    def opacities(self) -> np.ndarray:
        return expit(self.opacity_logits)

    @property
    def scales(self) -> np.ndarray:
        return np.exp(self.log_scales)

    @property
    def max_level(self) -> int:
        return int(self.levels.max()) if len(self) else 0

    def level_histogram(self) -> Dict[int, int]:
        values, counts = np.unique(self.levels, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def row_of(self, gaussian_id: int) -> int:
        """按 id 查行号"""
        if self._row_cache is None:
            self._row_cache = {int(i): row for row, i in enumerate(self.ids)}
        try:
            return self._row_cache[int(gaussian_id)]
        except KeyError:
            raise NotFoundError(f"no Gaussian with id={gaussian_id}") from None

    def gaussian(self, gaussian_id: int) -> Gaussian:
        row = self.row_of(gaussian_id)
        return Gaussian(
            position=self.positions[row].copy(),
            log_scale=self.log_scales[row].copy(),
            rotation=self.rotations[row].copy(),
            opacity_logit=float(self.opacity_logits[row]),
            sh=self.sh[row].copy(),
            level=int(self.levels[row]),
            id=int(self.ids[row]),
        )

    def parameters(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAMETER_FIELDS}

    # ==================== 修改 ====================

    def touch(self) -> None:
        """标记参数已被修改（原地更新后调用）"""
        self.generation += 1
        self._row_cache = None

    def append(
        self,
        positions: np.ndarray,
        log_scales: np.ndarray,
        rotations: np.ndarray,
        opacity_logits: np.ndarray,
        sh: np.ndarray,
        levels: np.ndarray,
    ) -> List[int]:
        """追加若干 Gaussian，返回分配的新 id"""
        k = int(np.asarray(positions).shape[0])
        new_ids = np.arange(self.next_id, self.next_id + k, dtype=np.int64)
        self.positions = np.concatenate([self.positions, np.asarray(positions).reshape(k, 3)])
        self.log_scales = np.concatenate([self.log_scales, np.asarray(log_scales).reshape(k, 3)])
        self.rotations = np.concatenate([self.rotations, np.asarray(rotations).reshape(k, 4)])
        self.opacity_logits = np.concatenate(
            [self.opacity_logits, np.asarray(opacity_logits, dtype=np.float64).reshape(k)]
        )
        self.sh = np.concatenate([self.sh, np.asarray(sh).reshape((k,) + self.sh.shape[1:])])
        self.levels = np.concatenate(
            [self.levels, np.asarray(levels, dtype=np.int64).reshape(k)]
        )
        self.ids = np.concatenate([self.ids, new_ids])
        self.next_id += k
        self.touch()
        return [int(i) for i in new_ids]

    def keep(self, mask: np.ndarray) -> List[int]:
        """只保留 mask 为 True 的行，返回被删除的 id"""
        mask = np.asarray(mask, dtype=bool)
        removed = [int(i) for i in self.ids[~mask]]
        for name in PARAMETER_FIELDS + ("levels", "ids"):
            setattr(self, name, getattr(self, name)[mask])
        self.touch()
        return removed

    def remove(self, gaussian_ids: Iterable[int]) -> List[int]:
        rows = [self.row_of(i) for i in gaussian_ids]
        mask = np.ones(len(self), dtype=bool)
        mask[rows] = False
        return self.keep(mask)

    def set_opacities(self, rows: np.ndarray, opacities: np.ndarray) -> None:
        """在激活空间设置不透明度，重新编码为 logit"""
        self.opacity_logits[rows] = opacity_to_logit(opacities)
        self.touch()

    def normalize_rotations(self) -> None:
        if len(self):
            self.rotations = normalize_quaternions(self.rotations)
        self.touch()

    def resize_sh(self, sh_degree: int) -> None:
        """调整 SH 阶数；新增系数置零，多余系数截去"""
        m = num_coeffs(sh_degree)
        current = self.sh.shape[1]
        if m > current:
            pad = np.zeros((len(self), m - current, 3))
            self.sh = np.concatenate([self.sh, pad], axis=1)
        else:
            self.sh = self.sh[:, :m, :].copy()
        self.touch()

    def validate_finite(self) -> None:
        """任一参数非有限时抛出 NonFiniteParameterError（带 Gaussian id）"""
        for name in PARAMETER_FIELDS:
            values = flatten_rows(getattr(self, name))
            bad = ~np.all(np.isfinite(values), axis=1)
            if np.any(bad):
                row = int(np.argmax(bad))
                raise NonFiniteParameterError(int(self.ids[row]), name)
