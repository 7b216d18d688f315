"""
Консенсус по несходству: C_R(tau), производственный вариант C*_R(tau) и развёртка по tau
"""

import logging
from collections import defaultdict
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from elicitkit.core.exceptions import InsufficientParticipantsError, MetricError
from elicitkit.core.models import Trajectory
from elicitkit.modules.logistic import LogisticFit, fit_logistic
from elicitkit.modules.trajectory import DissimilarityMatrix, build_dissimilarity_matrix

logger = logging.getLogger(__name__)

ZETA_FUNCTIONS = {
    "min": np.min,
    "max": np.max,
    "avg": np.mean,
}

DEFAULT_TAU_POINTS = 50

TrajectoryGroups = Mapping[str, Sequence[Trajectory]]
Source = Union[DissimilarityMatrix, TrajectoryGroups]


class CurvePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    tau: float
    consensus: float


class ConsensusCurve(BaseModel):
    """Кривая консенсуса C_R(tau) и её логистическая аппроксимация"""

    model_config = ConfigDict(frozen=True)

    referent: str
    participant_count: int
    samples: Tuple[CurvePoint, ...]
    zeta: Optional[str] = None
    fit: Optional[LogisticFit] = None

    @property
    def taus(self) -> List[float]:
        return [p.tau for p in self.samples]

    @property
    def values(self) -> List[float]:
        return [p.consensus for p in self.samples]


def _zeta(name: str):
    try:
        return ZETA_FUNCTIONS[name]
    except KeyError:
        raise MetricError(f"Неизвестная функция zeta '{name}', ожидается min, max или avg")


def _as_matrix(source: Source, normalize: bool = False) -> DissimilarityMatrix:
    if isinstance(source, DissimilarityMatrix):
        return source
    trajectories: List[Trajectory] = []
    for participant, group in source.items():
        if not group:
            raise MetricError(f"Пустая группа траекторий у участника {participant}")
        trajectories.extend(group)
    return build_dissimilarity_matrix(trajectories, normalize=normalize)


def aggregate_participants(matrix: DissimilarityMatrix, zeta: str) -> DissimilarityMatrix:
    """
    Сведение матрицы по попыткам к матрице по участникам

    Для пары участников (i, j) zeta сводит все Δ(g_it, g_ju) в одно значение.
    """
    reduce = _zeta(zeta)
    rows: Dict[str, List[int]] = defaultdict(list)
    for index, (participant, _) in enumerate(matrix.order):
        rows[participant].append(index)
    participants = matrix.participants

    size = len(participants)
    values = np.zeros((size, size))
    for a in range(size):
        for b in range(a + 1, size):
            block = matrix.values[np.ix_(rows[participants[a]], rows[participants[b]])]
            values[a, b] = values[b, a] = float(reduce(block))

    return DissimilarityMatrix(
        referent=matrix.referent,
        order=tuple((p, 0) for p in participants),
        values=values,
    )


def consensus_at(matrix: DissimilarityMatrix, tau: float, classic: bool = True) -> float:
    """
    C_R(tau): процент пар с Δ <= tau

    Args:
        matrix: Матрица несходства
        tau: Порог сходства (>= 0)
        classic: Требовать одну траекторию на участника; при False каждая
            траектория считается отдельным элементом

    Returns:
        Процент пар в [0, 100]

    Raises:
        InsufficientParticipantsError: Если элементов меньше двух
        MetricError: При tau < 0 или нескольких попытках в классическом режиме
    """
    if tau < 0:
        raise MetricError(f"tau должно быть неотрицательным, получено {tau}")
    if classic and not matrix.is_classic:
        raise MetricError(
            f"Референт {matrix.referent}: несколько попыток у участника, используйте production_consensus_at"
        )
    n = matrix.size
    if n < 2:
        raise InsufficientParticipantsError(
            f"insufficient participants: для референта {matrix.referent} нужно N >= 2"
        )
    upper = matrix.values[np.triu_indices(n, k=1)]
    similar = int(np.count_nonzero(upper <= tau))
    return 100.0 * similar / (n * (n - 1) / 2)


def production_consensus_at(
    source: Source,
    tau: float,
    zeta: str,
    normalize: bool = False,
) -> float:
    """
    C*_R(tau) для производственных исследований

    Args:
        source: Матрица по попыткам или траектории, сгруппированные по участникам
        tau: Порог сходства
        zeta: Агрегатор min, max или avg
        normalize: Нормализация DTW по длине пути (если передаются траектории)

    Raises:
        MetricError: При пустой группе траекторий
    """
    matrix = _as_matrix(source, normalize=normalize)
    return consensus_at(aggregate_participants(matrix, zeta), tau)


def participant_matrix(source: Source, zeta: Optional[str] = None) -> DissimilarityMatrix:
    """Матрица по участникам: классическая как есть, производственная через zeta"""
    matrix = _as_matrix(source)
    if zeta is None:
        if not matrix.is_classic:
            raise MetricError(
                f"Референт {matrix.referent}: несколько попыток у участника, требуется zeta"
            )
        return matrix
    return aggregate_participants(matrix, zeta)


def default_tau_grid(matrix: DissimilarityMatrix, points: int = DEFAULT_TAU_POINTS) -> List[float]:
    """Равномерная сетка от 0 до наибольшего Δ"""
    top = matrix.max_value()
    return np.linspace(0.0, top if top > 0 else 1.0, points).tolist()


def sweep_tau(
    source: Source,
    tau_grid: Optional[Sequence[float]] = None,
    zeta: Optional[str] = None,
    points: int = DEFAULT_TAU_POINTS,
    fit: bool = True,
    alpha: float = 0.05,
) -> ConsensusCurve:
    """
    Развёртка консенсуса по сетке tau с логистической аппроксимацией

    Args:
        source: Матрица несходства или траектории по участникам
        tau_grid: Строго возрастающая сетка из >= 3 точек (None - сетка по умолчанию)
        zeta: Агрегатор для производственных данных (None - классический режим)
        points: Число точек сетки по умолчанию
        fit: Подгонять ли логистическую кривую (нужно >= 4 точек)
        alpha: Уровень F-теста несоответствия

    Returns:
        Кривая консенсуса

    Raises:
        MetricError: При некорректной сетке
    """
    matrix = participant_matrix(source, zeta)
    grid = list(tau_grid) if tau_grid is not None else default_tau_grid(matrix, points)
    if len(grid) < 3:
        raise MetricError("Сетка tau должна содержать не менее 3 точек")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise MetricError("Сетка tau должна строго возрастать")

    values = [consensus_at(matrix, tau) for tau in grid]
    if any(b < a for a, b in zip(values, values[1:])):
        raise MetricError(f"Референт {matrix.referent}: кривая консенсуса не монотонна")

    logistic = fit_logistic(grid, values, alpha=alpha) if fit and len(grid) >= 4 else None
    return ConsensusCurve(
        referent=matrix.referent,
        participant_count=matrix.size,
        samples=tuple(CurvePoint(tau=float(t), consensus=v) for t, v in zip(grid, values)),
        zeta=zeta,
        fit=logistic,
    )
