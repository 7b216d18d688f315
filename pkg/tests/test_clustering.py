"""
Тесты извлечения кластера консенсуса
"""

from itertools import combinations

import numpy as np
import pytest

from elicitkit.core.exceptions import MetricError
from elicitkit.modules.clustering import (
    extract_cluster,
    extract_cluster_combined,
    greedy_cluster,
    maximum_clique,
    similarity_matrix,
)
from elicitkit.modules.trajectory import DissimilarityMatrix


def _matrix(values, order=None):
    values = np.asarray(values, dtype=float)
    order = order or tuple((f"p{i}", 0) for i in range(len(values)))
    return DissimilarityMatrix(referent="r", order=order, values=values)


def _blocks(*sizes, inside=0.5, outside=5.0):
    n = sum(sizes)
    values = np.full((n, n), outside)
    start = 0
    for size in sizes:
        values[start:start + size, start:start + size] = inside
        start += size
    np.fill_diagonal(values, 0.0)
    return _matrix(values)


def test_complete_graph():
    cluster = extract_cluster(_blocks(5), tau=1.0)
    assert cluster.size == 5
    assert cluster.coverage == 100.0
    assert cluster.agreement_ratio == 1.0


def test_largest_block_wins():
    cluster = extract_cluster(_blocks(6, 4), tau=1.0)
    assert [p for p, _ in cluster.members] == [f"p{i}" for i in range(6)]
    assert cluster.coverage == pytest.approx(60.0)


def test_smaller_block_first_in_order():
    cluster = extract_cluster(_blocks(4, 6), tau=1.0)
    assert [p for p, _ in cluster.members] == [f"p{i}" for i in range(4, 10)]


def test_edgeless_graph():
    cluster = extract_cluster(_blocks(1, 1, 1, 1), tau=1.0)
    assert cluster.members == ()
    assert cluster.coverage == 0.0


def test_relaxed_acceptance_absorbs_near_member():
    values = _blocks(4).values.copy()
    values = np.pad(values, ((0, 1), (0, 1)), constant_values=0.5)
    values[4, 0] = values[0, 4] = 5.0
    values[4, 4] = 0.0
    matrix = _matrix(values)
    strict = extract_cluster(matrix, tau=1.0)
    relaxed = extract_cluster(matrix, tau=1.0, acceptance_ratio=0.8)
    assert strict.size == 4
    assert relaxed.size == 5
    assert relaxed.agreement_ratio == pytest.approx(0.9)


def test_acceptance_ratio_range():
    with pytest.raises(MetricError):
        extract_cluster(_blocks(3), tau=1.0, acceptance_ratio=0.4)


def test_greedy_never_exceeds_clique():
    rng = np.random.default_rng(9)
    for _ in range(60):
        n = int(rng.integers(3, 9))
        upper = np.triu(rng.uniform(0.0, 1.0, size=(n, n)), k=1)
        matrix = _matrix(upper + upper.T)
        tau = float(rng.uniform(0.2, 0.8))
        similar = similarity_matrix(matrix, tau)
        members = greedy_cluster(similar, 1.0)
        assert all(similar[i, j] == 1.0 for i, j in combinations(members, 2))
        oracle = maximum_clique(matrix, tau)
        assert len(members) <= len(oracle)
        assert len(members) >= min(2, len(oracle))


def test_clique_oracle_on_blocks():
    assert len(maximum_clique(_blocks(3, 5), tau=1.0)) == 5
    with pytest.raises(MetricError):
        maximum_clique(_blocks(11), tau=1.0)


def test_combined_taus():
    matrix = _blocks(6, 4, inside=0.5)
    cluster = extract_cluster_combined(matrix, [0.25, 1.0, 2.0])
    assert cluster.size == 0

    cluster = extract_cluster_combined(matrix, [0.25, 1.0, 2.0], acceptance_ratio=0.6)
    assert cluster.size == 6
    assert cluster.taus == (0.25, 1.0, 2.0)
    assert cluster.tau == 1.0


def test_production_cluster_with_zeta():
    order = (("a", 0), ("a", 1), ("b", 0), ("c", 0))
    values = np.array([
        [0.0, 1.0, 0.5, 9.0],
        [1.0, 0.0, 2.5, 9.0],
        [0.5, 2.5, 0.0, 9.0],
        [9.0, 9.0, 9.0, 0.0],
    ])
    cluster = extract_cluster(_matrix(values, order=order), tau=1.0, zeta="min")
    assert cluster.members == (("a", 0), ("b", 0))
    assert cluster.coverage == pytest.approx(100 * 2 / 3)
