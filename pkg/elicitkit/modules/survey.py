"""
Опросники: NASA TLX (взвешенный и «сырой»), сводка по шкалам Likert, t-критерий Уэлча
"""

import logging
from collections import Counter
from enum import Enum
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy import stats

from elicitkit.core.exceptions import SurveyError

logger = logging.getLogger(__name__)

TLX_MAX_RATING = 20
TLX_PAIR_COUNT = 15


class TlxCategory(str, Enum):
    MENTAL = "mental"
    PHYSICAL = "physical"
    TEMPORAL = "temporal"
    PERFORMANCE = "performance"
    EFFORT = "effort"
    FRUSTRATION = "frustration"


TLX_CATEGORIES: Tuple[TlxCategory, ...] = tuple(TlxCategory)
TLX_PAIRS: Tuple[FrozenSet[TlxCategory], ...] = tuple(
    frozenset(p) for p in combinations(TLX_CATEGORIES, 2)
)


class PairwiseChoice(BaseModel):
    """Ответ на вопрос попарного сравнения: какая из двух категорий важнее"""

    model_config = ConfigDict(frozen=True)

    first: TlxCategory
    second: TlxCategory
    winner: TlxCategory

    @model_validator(mode="after")
    def _winner_in_pair(self) -> "PairwiseChoice":
        if self.first == self.second:
            raise ValueError(f"Пара должна состоять из разных категорий: {self.first.value}")
        if self.winner not in (self.first, self.second):
            raise ValueError(
                f"Победитель {self.winner.value} не входит в пару "
                f"{self.first.value}/{self.second.value}"
            )
        return self

    @property
    def pair(self) -> FrozenSet[TlxCategory]:
        return frozenset((self.first, self.second))


class TlxResponse(BaseModel):
    """Ответы одного участника на NASA TLX: 21-делительная шкала и попарные сравнения"""

    model_config = ConfigDict(frozen=True)

    participant: Optional[str] = None
    ratings: Dict[TlxCategory, int]
    pairwise_choices: Tuple[PairwiseChoice, ...] = ()

    @field_validator("ratings")
    @classmethod
    def _complete_ratings(cls, value: Dict[TlxCategory, int]) -> Dict[TlxCategory, int]:
        missing = [c.value for c in TLX_CATEGORIES if c not in value]
        if missing:
            raise ValueError(f"Нет оценок для категорий: {missing}")
        for category, rating in value.items():
            if not 0 <= rating <= TLX_MAX_RATING:
                raise ValueError(f"Оценка {category.value}={rating} вне шкалы 0..{TLX_MAX_RATING}")
        return value


class TlxScore(BaseModel):
    """Баллы NASA TLX: по категориям (0..100), веса и общий балл"""

    model_config = ConfigDict(frozen=True)

    participant: Optional[str] = None
    per_category: Dict[TlxCategory, float]
    weights: Optional[Dict[TlxCategory, int]] = None
    overall: float
    weighted: bool = True


class TlxSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    respondents: int
    weighted: bool
    mean_per_category: Dict[TlxCategory, float]
    mean_overall: float
    sd_overall: float


class QuestionSummary(BaseModel):
    """Меры центральной тенденции для одного вопроса Likert"""

    model_config = ConfigDict(frozen=True)

    question: str
    mean: float
    median: float
    modes: Tuple[int, ...]
    sd: float
    histogram: Dict[int, int]


class LikertSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    scale: Tuple[int, int]
    respondents: int
    questions: Tuple[QuestionSummary, ...]


class WelchResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float
    df: float
    p_value: float


def check_pairwise(choices: Sequence[PairwiseChoice]) -> None:
    """
    Проверка набора попарных сравнений: ровно одно на каждую из 15 пар

    Raises:
        SurveyError: Со списком пропущенных и повторных пар
    """
    seen = Counter(c.pair for c in choices)
    missing = [p for p in TLX_PAIRS if p not in seen]
    duplicates = [p for p, n in seen.items() if n > 1]
    if missing or duplicates:
        def fmt(pairs):
            return ", ".join("/".join(sorted(c.value for c in p)) for p in pairs) or "-"
        raise SurveyError(
            f"Некорректный набор попарных сравнений: пропущены [{fmt(missing)}], "
            f"повторяются [{fmt(duplicates)}]"
        )


def score_tlx(resp: TlxResponse, weighted: bool = True) -> TlxScore:
    """
    Подсчёт баллов NASA TLX

    raw_c = rating_c * 5; вес категории - число её побед в попарных сравнениях;
    общий балл = sum(raw_c * weight_c) / 15. При weighted=False общий балл -
    среднее шести raw («сырой» TLX), попарные сравнения не требуются.

    Args:
        resp: Ответы участника
        weighted: Взвешенный подсчёт

    Returns:
        Баллы по категориям и общий балл

    Raises:
        SurveyError: Если набор попарных сравнений некорректен
    """
    raws = {c: resp.ratings[c] * 5.0 for c in TLX_CATEGORIES}
    if not weighted:
        return TlxScore(
            participant=resp.participant,
            per_category=raws,
            overall=float(np.mean(list(raws.values()))),
            weighted=False,
        )

    check_pairwise(resp.pairwise_choices)
    wins = Counter(c.winner for c in resp.pairwise_choices)
    weights = {c: wins.get(c, 0) for c in TLX_CATEGORIES}
    overall = sum(raws[c] * weights[c] for c in TLX_CATEGORIES) / TLX_PAIR_COUNT
    return TlxScore(
        participant=resp.participant,
        per_category=raws,
        weights=weights,
        overall=overall,
        weighted=True,
    )


def summarize_tlx(scores: Sequence[TlxScore]) -> TlxSummary:
    """Средние баллы TLX по участникам"""
    if not scores:
        raise SurveyError("Нет ответов NASA TLX")
    overall = np.array([s.overall for s in scores])
    return TlxSummary(
        respondents=len(scores),
        weighted=all(s.weighted for s in scores),
        mean_per_category={
            c: float(np.mean([s.per_category[c] for s in scores])) for c in TLX_CATEGORIES
        },
        mean_overall=float(overall.mean()),
        sd_overall=float(overall.std(ddof=1)) if len(scores) > 1 else 0.0,
    )


def summarize_likert(
    responses: Sequence[Sequence[int]],
    scale: Tuple[int, int] = (1, 5),
    questions: Optional[Sequence[str]] = None,
) -> LikertSummary:
    """
    Сводка по вопросам Likert: среднее, медиана, мода (все при ничьей),
    выборочное стандартное отклонение (N-1), гистограмма по всей шкале

    Args:
        responses: Матрица оценок (респонденты x вопросы)
        scale: Границы шкалы (min, max) включительно
        questions: Названия вопросов (по умолчанию q1, q2, ...)

    Raises:
        SurveyError: При пустых ответах, рваной матрице или оценках вне шкалы
    """
    if not responses:
        raise SurveyError("Нет ответов для сводки Likert")
    widths = {len(row) for row in responses}
    if len(widths) != 1 or 0 in widths:
        raise SurveyError("Все респонденты должны ответить на одинаковое число вопросов")
    data = np.asarray(responses, dtype=np.int64)
    low, high = scale
    if low >= high:
        raise SurveyError(f"Некорректная шкала {scale}")
    outside = np.argwhere((data < low) | (data > high))
    if outside.size:
        row, col = outside[0]
        raise SurveyError(f"Оценка {data[row, col]} (респондент {row + 1}, вопрос {col + 1}) вне шкалы {scale}")

    names: List[str] = list(questions) if questions else [f"q{i + 1}" for i in range(data.shape[1])]
    if len(names) != data.shape[1]:
        raise SurveyError("Число названий вопросов не совпадает с числом столбцов")

    summaries = []
    for index, name in enumerate(names):
        column = data[:, index]
        values, counts = np.unique(column, return_counts=True)
        histogram = {v: 0 for v in range(low, high + 1)}
        histogram.update({int(v): int(c) for v, c in zip(values, counts)})
        summaries.append(QuestionSummary(
            question=name,
            mean=float(column.mean()),
            median=float(np.median(column)),
            modes=tuple(int(v) for v in values[counts == counts.max()]),
            sd=float(column.std(ddof=1)) if len(column) > 1 else 0.0,
            histogram=histogram,
        ))
    return LikertSummary(scale=(low, high), respondents=len(data), questions=tuple(summaries))


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """
    Двухвыборочный t-критерий Уэлча (двусторонний)

    Raises:
        SurveyError: Если в какой-либо выборке меньше двух значений
            или обе выборки без разброса
    """
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if len(x) < 2 or len(y) < 2:
        raise SurveyError("Для t-критерия нужно не менее двух значений в каждой выборке")
    vx, vy = x.var(ddof=1) / len(x), y.var(ddof=1) / len(y)
    if vx + vy == 0:
        raise SurveyError("Обе выборки без разброса: t-критерий не определён")
    result = stats.ttest_ind(x, y, equal_var=False)
    df = (vx + vy) ** 2 / (vx ** 2 / (len(x) - 1) + vy ** 2 / (len(y) - 1))
    logger.debug(f"t-критерий Уэлча: t={result.statistic:.4f}, df={df:.2f}")
    return WelchResult(t=float(result.statistic), df=float(df), p_value=float(result.pvalue))


def compare_tlx(first: Sequence[TlxScore], second: Sequence[TlxScore]) -> WelchResult:
    """
    Сравнение общих баллов TLX двух условий t-критерием Уэлча

    Raises:
        SurveyError: Если баллы взвешены по-разному или t-критерий не определён
    """
    if {s.weighted for s in first} | {s.weighted for s in second} == {True, False}:
        raise SurveyError("Нельзя сравнивать взвешенные и «сырые» баллы TLX")
    return welch_t_test([s.overall for s in first], [s.overall for s in second])
