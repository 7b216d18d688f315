import numpy as np
import pytest
from pydantic import ValidationError

from elicitkit.core.exceptions import SimulationError
from elicitkit.modules.simulation import NullModel, p_value, simulate_null, threshold_for


def test_single_category_always_agrees():
    dist = simulate_null(NullModel(participant_count=5, category_count=1), 200)
    assert np.all(dist.samples == 1.0)
    assert dist.mean == 1.0
    assert dist.variance == 0.0


def test_uniform_mean_matches_inverse_categories():
    dist = simulate_null(NullModel(participant_count=20, category_count=4, seed=7), 10000)
    assert dist.samples.shape == (10000,)
    assert dist.mean == pytest.approx(0.25, abs=0.01)
    assert np.all((dist.samples >= 0.0) & (dist.samples <= 1.0))


def test_same_seed_same_samples():
    model = NullModel(participant_count=12, category_count=6, seed=3)
    first = simulate_null(model, 3000)
    second = simulate_null(model, 3000)
    np.testing.assert_array_equal(first.samples, second.samples)
    assert first.quantiles == second.quantiles


def test_prefix_stability_across_draw_counts():
    model = NullModel(participant_count=8, category_count=3, seed=11)
    short = simulate_null(model, 1500)
    long = simulate_null(model, 4000)
    np.testing.assert_array_equal(long.samples[:1500], short.samples)


def test_p_value_bounds():
    dist = simulate_null(NullModel(participant_count=10, category_count=5), 999)
    assert p_value(0.0, dist) == 1.0
    assert p_value(1.0, dist) >= 1 / 1000
    assert p_value(1.0, dist) <= p_value(0.5, dist) <= p_value(0.1, dist)


def test_high_agreement_is_significant():
    dist = simulate_null(NullModel(participant_count=20, category_count=10), 10000)
    assert p_value(0.30, dist) < 0.05


def test_threshold_for():
    dist = simulate_null(NullModel(participant_count=20, category_count=10), 5000)
    assert set(dist.quantiles) == {"0.90", "0.95", "0.99"}
    assert threshold_for(dist) == dist.quantiles["0.95"]
    assert threshold_for(dist, 0.90) <= threshold_for(dist, 0.99)
    with pytest.raises(SimulationError):
        threshold_for(dist, 0.5)


def test_zipf_agrees_more_than_uniform():
    uniform = simulate_null(NullModel(participant_count=15, category_count=8), 4000)
    skewed = simulate_null(
        NullModel(participant_count=15, category_count=8, distribution="zipf", zipf_s=1.5), 4000
    )
    assert skewed.mean > uniform.mean


def test_empirical_weights():
    model = NullModel(
        participant_count=10, category_count=3, distribution="empirical", weights=(0.5, 0.3, 0.2)
    )
    np.testing.assert_allclose(model.probabilities(), [0.5, 0.3, 0.2])
    expected = 0.5 ** 2 + 0.3 ** 2 + 0.2 ** 2
    assert simulate_null(model, 8000).mean == pytest.approx(expected, abs=0.01)


@pytest.mark.parametrize("weights", [None, (0.5, 0.5), (0.5, 0.3, 0.3), (1.2, -0.1, -0.1)])
def test_empirical_weights_rejected(weights):
    with pytest.raises(ValidationError):
        NullModel(participant_count=10, category_count=3, distribution="empirical", weights=weights)


def test_invalid_draws():
    with pytest.raises(SimulationError):
        simulate_null(NullModel(participant_count=4, category_count=2), 0)


def test_summary_serializes_samples():
    dist = simulate_null(NullModel(participant_count=4, category_count=2), 10)
    dumped = dist.model_dump(mode="json")
    assert len(dumped["samples"]) == 10
    assert dumped["null_model"]["distribution"] == "uniform"
