"""
Извлечение кластера консенсуса из бинарной матрицы сходства [Δ <= tau]
"""

import logging
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from elicitkit.core.exceptions import MetricError
from elicitkit.core.models import EntryKey
from elicitkit.modules.dissimilarity import aggregate_participants
from elicitkit.modules.trajectory import DissimilarityMatrix

logger = logging.getLogger(__name__)

MAX_EXHAUSTIVE = 10
RATIO_TOLERANCE = 1e-12


class ConsensusCluster(BaseModel):
    """Наибольший найденный кластер взаимно похожих предложений"""

    model_config = ConfigDict(frozen=True)

    referent: str
    tau: float
    taus: Tuple[float, ...] = ()
    members: Tuple[EntryKey, ...]
    coverage: float
    agreement_ratio: float
    acceptance_ratio: float

    @property
    def size(self) -> int:
        return len(self.members)


def similarity_matrix(matrix: DissimilarityMatrix, tau: float) -> np.ndarray:
    """Бинарная матрица [Δ(g_i, g_j) <= tau] с нулевой диагональю"""
    if tau < 0:
        raise MetricError(f"tau должно быть неотрицательным, получено {tau}")
    similar = (matrix.values <= tau).astype(float)
    np.fill_diagonal(similar, 0.0)
    return similar


def _internal_ratio(weights: np.ndarray, members: Sequence[int]) -> float:
    size = len(members)
    if size < 2:
        return 0.0
    block = weights[np.ix_(members, members)]
    return float(block.sum() / 2.0) / (size * (size - 1) / 2.0)


def _grow(weights: np.ndarray, seed: Tuple[int, int], acceptance: float, degree: np.ndarray) -> List[int]:
    """Жадное наращивание кластера от пары-затравки (hill climbing)"""
    members = list(seed)
    inside = np.zeros(len(weights), dtype=bool)
    inside[members] = True
    internal = float(weights[seed[0], seed[1]])

    while not inside.all():
        size = len(members) + 1
        gains = weights[:, inside].sum(axis=1)
        ratios = (internal + gains) / (size * (size - 1) / 2.0)
        ratios[inside] = -np.inf
        best_ratio = ratios.max()
        if best_ratio < acceptance - RATIO_TOLERANCE:
            break
        candidates = np.flatnonzero(ratios == best_ratio)
        # Ничья: наибольшая степень, затем наименьший индекс
        chosen = int(candidates[np.argmax(degree[candidates])])
        members.append(chosen)
        inside[chosen] = True
        internal += float(gains[chosen])
    return sorted(members)


def greedy_cluster(weights: np.ndarray, acceptance: float = 1.0) -> List[int]:
    """
    Наибольший кластер по всем затравкам

    Затравки - пары с весом >= acceptance, упорядоченные по весу и сумме
    степеней. Кластер растёт, пока доля похожих пар внутри не ниже acceptance.

    Args:
        weights: Симметричная матрица весов в [0, 1] с нулевой диагональю
        acceptance: Минимальная доля похожих пар внутри кластера

    Returns:
        Индексы элементов кластера (пустой список, если похожих пар нет)
    """
    n = len(weights)
    degree = weights.sum(axis=1)
    seeds = [
        (i, j) for i, j in combinations(range(n), 2)
        if weights[i, j] >= acceptance - RATIO_TOLERANCE and weights[i, j] > 0
    ]
    seeds.sort(key=lambda p: (-weights[p], -(degree[p[0]] + degree[p[1]]), p))

    best: List[int] = []
    best_ratio = 0.0
    for seed in seeds:
        members = _grow(weights, seed, acceptance, degree)
        ratio = _internal_ratio(weights, members)
        if len(members) > len(best) or (len(members) == len(best) and ratio > best_ratio):
            best, best_ratio = members, ratio
        if len(best) == n:
            break
    return best


def _prepare(matrix: DissimilarityMatrix, zeta: Optional[str]) -> DissimilarityMatrix:
    return aggregate_participants(matrix, zeta) if zeta else matrix


def _make_cluster(
    matrix: DissimilarityMatrix,
    weights: np.ndarray,
    members: List[int],
    tau: float,
    taus: Sequence[float],
    acceptance: float,
) -> ConsensusCluster:
    keys = tuple(matrix.order[i] for i in members)
    participants = matrix.participants
    covered = len({p for p, _ in keys})
    coverage = 100.0 * covered / len(participants) if participants else 0.0
    logger.debug(
        f"Референт {matrix.referent}: кластер из {len(keys)} элементов, покрытие {coverage:.1f}%"
    )
    return ConsensusCluster(
        referent=matrix.referent,
        tau=tau,
        taus=tuple(taus),
        members=keys,
        coverage=coverage,
        agreement_ratio=_internal_ratio(weights, members),
        acceptance_ratio=acceptance,
    )


def _check_acceptance(acceptance: float) -> None:
    if not 0.5 <= acceptance <= 1.0:
        raise MetricError(f"Доля принятия должна лежать в [0.5, 1.0], получено {acceptance}")


def extract_cluster(
    matrix: DissimilarityMatrix,
    tau: float,
    acceptance_ratio: float = 1.0,
    zeta: Optional[str] = None,
) -> ConsensusCluster:
    """
    Кластер консенсуса при заданном tau

    Args:
        matrix: Матрица несходства
        tau: Порог сходства
        acceptance_ratio: Доля похожих пар внутри кластера (1.0 - клика)
        zeta: Свести попытки к участникам перед кластеризацией

    Returns:
        Наибольший найденный кластер (может быть пустым)
    """
    _check_acceptance(acceptance_ratio)
    matrix = _prepare(matrix, zeta)
    weights = similarity_matrix(matrix, tau)
    members = greedy_cluster(weights, acceptance_ratio)
    return _make_cluster(matrix, weights, members, tau, (), acceptance_ratio)


def extract_cluster_combined(
    matrix: DissimilarityMatrix,
    taus: Sequence[float],
    acceptance_ratio: float = 1.0,
    zeta: Optional[str] = None,
) -> ConsensusCluster:
    """
    Кластер по нескольким значениям tau, объединённым в одну матрицу

    Бинарные матрицы для каждого tau усредняются; кластеризация ведётся по
    средним весам.
    """
    _check_acceptance(acceptance_ratio)
    if not taus:
        raise MetricError("Нужно хотя бы одно значение tau")
    matrix = _prepare(matrix, zeta)
    weights = np.mean([similarity_matrix(matrix, t) for t in taus], axis=0)
    members = greedy_cluster(weights, acceptance_ratio)
    return _make_cluster(matrix, weights, members, float(np.median(taus)), taus, acceptance_ratio)


def maximum_clique(matrix: DissimilarityMatrix, tau: float) -> List[EntryKey]:
    """
    Наибольшая клика в графе [Δ <= tau] полным перебором

    Используется как эталон для жадного алгоритма на малых матрицах.

    Raises:
        MetricError: Если элементов больше MAX_EXHAUSTIVE
    """
    n = matrix.size
    if n > MAX_EXHAUSTIVE:
        raise MetricError(f"Полный перебор доступен для не более {MAX_EXHAUSTIVE} элементов")
    similar = similarity_matrix(matrix, tau).astype(bool)
    for size in range(n, 1, -1):
        for subset in combinations(range(n), size):
            if all(similar[i, j] for i, j in combinations(subset, 2)):
                return [matrix.order[i] for i in subset]
    return []
