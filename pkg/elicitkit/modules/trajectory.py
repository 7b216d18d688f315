"""
Предобработка траекторий скелета и мера несходства DTW
"""

import logging
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numba as nb
import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    field_serializer,
    field_validator,
    model_validator,
)
from scipy.interpolate import interp1d
from tqdm import tqdm

from elicitkit.core.exceptions import (
    DegenerateSkeletonError,
    JointCountMismatchError,
    TrajectoryError,
)
from elicitkit.core.models import EntryKey, Trajectory

logger = logging.getLogger(__name__)

HEIGHT_EPSILON = 1e-12


class PreprocessConfig(BaseModel):
    """Параметры предобработки: частота кадров, перенос в начало координат, нормализация роста"""

    model_config = ConfigDict(frozen=True)

    target_fps: PositiveFloat = 25.0
    normalize_height: bool = True
    translate_to_origin: bool = True
    reference_joint: int = Field(default=0, ge=0)
    vertical_axis: int = Field(default=1, ge=0, le=2)


class DissimilarityMatrix(BaseModel):
    """Попарные значения несходства Δ между траекториями одного референта"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    referent: str
    order: Tuple[EntryKey, ...]
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_array(cls, value):
        array = np.array(value, dtype=float)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise ValueError(f"Матрица несходства должна быть квадратной, получено {array.shape}")
        if not np.isfinite(array).all() or (array < 0).any():
            raise ValueError("Значения несходства должны быть конечными и неотрицательными")
        if not np.array_equal(array, array.T):
            raise ValueError("Матрица несходства должна быть симметричной")
        if np.any(np.diag(array) != 0):
            raise ValueError("Диагональ матрицы несходства должна быть нулевой")
        array.setflags(write=False)
        return array

    @field_serializer("values")
    def _values_to_list(self, values: np.ndarray):
        return values.tolist()

    @field_validator("order", mode="after")
    @classmethod
    def _unique_keys(cls, value):
        if len(set(value)) != len(value):
            raise ValueError("Ключи (участник, попытка) должны быть уникальными")
        return value

    @model_validator(mode="after")
    def _shape_matches_order(self) -> "DissimilarityMatrix":
        if self.values.shape[0] != len(self.order):
            raise ValueError(
                f"Размер матрицы {self.values.shape[0]} не совпадает с числом ключей {len(self.order)}"
            )
        return self

    @property
    def size(self) -> int:
        return len(self.order)

    @property
    def participants(self) -> List[str]:
        """Участники в порядке первого появления"""
        return list(dict.fromkeys(p for p, _ in self.order))

    @property
    def is_classic(self) -> bool:
        return len(self.participants) == self.size

    def max_value(self) -> float:
        return float(self.values.max()) if self.size else 0.0


def resample(traj: Trajectory, target_fps: float) -> Trajectory:
    """
    Линейная передискретизация по времени с сохранением первого и последнего кадра

    Число кадров: round(F * target_fps / frame_rate), не меньше 2.
    """
    if np.isclose(traj.frame_rate, target_fps, rtol=0.0, atol=1e-12):
        return traj.with_frames(traj.frames.copy(), target_fps)

    count = max(2, int(round(traj.frame_count * target_fps / traj.frame_rate)))
    source_times = np.arange(traj.frame_count) / traj.frame_rate
    target_times = np.linspace(0.0, traj.duration, count)
    frames = interp1d(source_times, traj.frames, axis=0, kind="linear")(target_times)
    return traj.with_frames(frames, target_fps)


def preprocess(traj: Trajectory, cfg: Optional[PreprocessConfig] = None) -> Trajectory:
    """
    Предобработка траектории перед сравнением

    1. Передискретизация до cfg.target_fps
    2. Перенос: опорный сустав каждого кадра помещается в начало координат
    3. Масштабирование: вертикальный размах по всей траектории становится равен 1

    Args:
        traj: Исходная траектория
        cfg: Параметры предобработки

    Returns:
        Новая траектория

    Raises:
        TrajectoryError: Если опорный сустав вне диапазона
        DegenerateSkeletonError: Если вертикальный размах равен нулю
    """
    cfg = cfg or PreprocessConfig()
    result = resample(traj, cfg.target_fps)
    frames = np.array(result.frames)

    if cfg.translate_to_origin:
        if cfg.reference_joint >= traj.joint_count:
            raise TrajectoryError(
                f"Опорный сустав {cfg.reference_joint} вне диапазона 0..{traj.joint_count - 1}"
            )
        frames = frames - frames[:, cfg.reference_joint:cfg.reference_joint + 1, :]

    if cfg.normalize_height:
        extent = float(np.ptp(frames[..., cfg.vertical_axis]))
        if extent <= HEIGHT_EPSILON:
            raise DegenerateSkeletonError(
                f"degenerate skeleton: нулевой вертикальный размах у {traj.participant}/"
                f"{traj.referent}/{traj.trial}"
            )
        frames = frames / extent

    return result.with_frames(frames, cfg.target_fps)


@nb.jit(nopython=True, nogil=True, cache=False)
def _accumulate(local):
    """Накопленная стоимость DTW с шагами (1,0), (0,1), (1,1) и длина оптимального пути"""
    n, m = local.shape
    acc = np.full((n + 1, m + 1), np.inf)
    steps = np.zeros((n + 1, m + 1), dtype=np.int64)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            best = acc[i - 1, j - 1]
            length = steps[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
                length = steps[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
                length = steps[i, j - 1]
            acc[i, j] = local[i - 1, j - 1] + best
            steps[i, j] = length + 1
    return acc[n, m], steps[n, m]


def local_cost(a: Trajectory, b: Trajectory) -> np.ndarray:
    """Стоимость пары кадров: сумма евклидовых расстояний по суставам"""
    if a.joint_count != b.joint_count:
        raise JointCountMismatchError(
            f"Разное число суставов: {a.joint_count} и {b.joint_count}"
        )
    diff = a.frames[:, None, :, :] - b.frames[None, :, :, :]
    return np.linalg.norm(diff, axis=-1).sum(axis=-1)


def dtw_distance(a: Trajectory, b: Trajectory, normalize: bool = False) -> float:
    """
    Несходство двух траекторий по DTW

    Args:
        a: Первая траектория
        b: Вторая траектория
        normalize: Делить накопленную стоимость на длину оптимального пути

    Returns:
        Накопленная стоимость выравнивания

    Raises:
        JointCountMismatchError: Если число суставов различается
    """
    cost, length = _accumulate(np.ascontiguousarray(local_cost(a, b)))
    if normalize:
        return float(cost) / int(length)
    return float(cost)


def build_dissimilarity_matrix(
    trajectories: Sequence[Trajectory],
    referent: Optional[str] = None,
    normalize: bool = False,
    progress: bool = False,
) -> DissimilarityMatrix:
    """
    Матрица Δ для всех пар траекторий референта

    Траектории упорядочиваются по (участник, попытка), поэтому результат
    не зависит от порядка входа.

    Raises:
        TrajectoryError: Если траектории относятся к разным референтам
        JointCountMismatchError: Если число суставов различается
    """
    ordered = sorted(trajectories, key=lambda t: t.key)
    referents = {t.referent for t in ordered}
    if referent is None and len(referents) == 1:
        referent = next(iter(referents))
    if referent is None or referents - {referent}:
        raise TrajectoryError(f"Траектории должны относиться к одному референту: {sorted(referents)}")

    size = len(ordered)
    values = np.zeros((size, size))
    pairs = list(combinations(range(size), 2))
    for i, j in tqdm(pairs, desc=f"DTW {referent}", disable=not progress, leave=False):
        values[i, j] = values[j, i] = dtw_distance(ordered[i], ordered[j], normalize=normalize)

    logger.debug(f"Референт {referent}: матрица несходства {size}x{size}")
    return DissimilarityMatrix(
        referent=referent,
        order=tuple(t.key for t in ordered),
        values=values,
    )
