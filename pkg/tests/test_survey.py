"""
Тесты NASA TLX, сводки Likert и t-критерия Уэлча
"""

import random

import pytest
from pydantic import ValidationError

from elicitkit.core.exceptions import SurveyError
from elicitkit.modules.survey import (
    TLX_CATEGORIES,
    PairwiseChoice,
    TlxCategory,
    TlxResponse,
    compare_tlx,
    score_tlx,
    summarize_likert,
    summarize_tlx,
    welch_t_test,
)
from tests.conftest import full_tlx


def _with_ratings(response, ratings):
    return response.model_copy(update={"ratings": {TlxCategory(k): v for k, v in ratings.items()}})


@pytest.mark.parametrize("rating, expected", [(0, 0.0), (20, 100.0)])
def test_uniform_ratings(rating, expected):
    score = score_tlx(full_tlx("p", rating=rating))
    assert score.overall == expected
    assert score.weighted
    assert sum(score.weights.values()) == 15


def test_single_dominant_category():
    response = _with_ratings(full_tlx("p"), {c.value: 0 for c in TLX_CATEGORIES} | {"mental": 20})
    score = score_tlx(response)
    assert score.weights[TlxCategory.MENTAL] == 5
    assert score.weights[TlxCategory.FRUSTRATION] == 0
    assert score.overall == pytest.approx(100 * 5 / 15)


def test_overall_between_extremes():
    rng = random.Random(4)
    for _ in range(50):
        order = [c.value for c in TLX_CATEGORIES]
        rng.shuffle(order)
        ratings = {c.value: rng.randint(0, 20) for c in TLX_CATEGORIES}
        score = score_tlx(_with_ratings(full_tlx("p", winner_order=order), ratings))
        raws = score.per_category.values()
        assert min(raws) <= score.overall <= max(raws)


def test_choice_order_does_not_matter():
    response = _with_ratings(full_tlx("p", winner_order=["effort", "mental", "temporal",
                                                         "physical", "frustration", "performance"]),
                             {"mental": 3, "physical": 17, "temporal": 9,
                              "performance": 12, "effort": 20, "frustration": 1})
    shuffled = list(response.pairwise_choices)
    random.Random(1).shuffle(shuffled)
    reordered = response.model_copy(update={"pairwise_choices": tuple(shuffled)})
    assert score_tlx(reordered).overall == score_tlx(response).overall


def test_incomplete_pairwise_set():
    response = full_tlx("p")
    broken = response.model_copy(update={"pairwise_choices": response.pairwise_choices[1:]})
    with pytest.raises(SurveyError, match="пропущены"):
        score_tlx(broken)


def test_duplicate_pair_listed():
    response = full_tlx("p")
    choices = response.pairwise_choices[:-1] + (response.pairwise_choices[0],)
    broken = response.model_copy(update={"pairwise_choices": choices})
    with pytest.raises(SurveyError, match="повторяются"):
        score_tlx(broken)


def test_raw_tlx_ignores_pairs():
    response = TlxResponse(ratings={c: i * 4 for i, c in enumerate(TLX_CATEGORIES)})
    score = score_tlx(response, weighted=False)
    assert score.weights is None
    assert score.overall == pytest.approx(sum(i * 20 for i in range(6)) / 6)


def test_response_validation():
    with pytest.raises(ValidationError):
        TlxResponse(ratings={c: 21 for c in TLX_CATEGORIES})
    with pytest.raises(ValidationError):
        TlxResponse(ratings={TlxCategory.MENTAL: 3})
    with pytest.raises(ValidationError):
        PairwiseChoice(first="mental", second="effort", winner="physical")


def test_tlx_summary():
    scores = [score_tlx(full_tlx(p, rating=r)) for p, r in [("a", 4), ("b", 8)]]
    summary = summarize_tlx(scores)
    assert summary.respondents == 2
    assert summary.mean_overall == pytest.approx(30.0)
    assert summary.mean_per_category[TlxCategory.EFFORT] == pytest.approx(30.0)
    with pytest.raises(SurveyError):
        summarize_tlx([])


def test_likert_extremes():
    summary = summarize_likert([[1], [5]])
    question = summary.questions[0]
    assert question.mean == 3.0
    assert question.median == 3.0
    assert question.sd == pytest.approx(2.8284, abs=1e-4)
    assert question.modes == (1, 5)
    assert question.histogram == {1: 1, 2: 0, 3: 0, 4: 0, 5: 1}


def test_likert_tied_modes():
    summary = summarize_likert([[2], [4], [2], [4], [3]], questions=["ease"])
    assert summary.questions[0].modes == (2, 4)
    assert summary.questions[0].question == "ease"


def test_likert_single_respondent():
    summary = summarize_likert([[3, 4]], scale=(1, 7))
    first = summary.questions[0]
    assert (first.mean, first.median, first.modes, first.sd) == (3.0, 3.0, (3,), 0.0)
    assert all(sum(q.histogram.values()) == 1 for q in summary.questions)
    assert [q.sd for q in summary.questions] == [0.0, 0.0]
    assert summary.scale == (1, 7)
    assert [q.question for q in summary.questions] == ["q1", "q2"]


@pytest.mark.parametrize("responses", [[], [[1, 2], [3]], [[6]]])
def test_likert_rejects_bad_input(responses):
    with pytest.raises(SurveyError):
        summarize_likert(responses)


def test_welch():
    result = welch_t_test([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert result.t == pytest.approx(-3.6742, abs=1e-4)
    assert result.df == pytest.approx(4.0)
    assert 0.0 < result.p_value < 0.05
    with pytest.raises(SurveyError):
        welch_t_test([1.0], [2.0, 3.0])


def test_welch_zero_variance():
    with pytest.raises(SurveyError, match="разброса"):
        welch_t_test([3.0, 3.0, 3.0], [3.0, 3.0])
    result = welch_t_test([3.0, 3.0, 3.0], [1.0, 2.0, 3.0])
    assert result.df == pytest.approx(2.0)


def test_compare_tlx_conditions():
    first = [score_tlx(full_tlx(f"a{i}", rating=5 + i), weighted=False) for i in range(6)]
    second = [score_tlx(full_tlx(f"b{i}", rating=10 + i), weighted=False) for i in range(6)]
    result = compare_tlx(first, second)
    assert result.t == pytest.approx(-4.6291, abs=1e-4)
    assert result.df == pytest.approx(10.0)
    assert result.p_value < 0.01

    with pytest.raises(SurveyError):
        compare_tlx(first, [score_tlx(full_tlx(f"b{i}", rating=10 + i)) for i in range(6)])
