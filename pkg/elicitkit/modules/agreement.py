"""
Метрики согласованности по классам предложений: A(r), AR(r), случайное согласие P_e,
каппа Флейсса и извлечение набора консенсуса
"""

import logging
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from elicitkit.core.exceptions import (
    DegenerateDistributionError,
    InsufficientParticipantsError,
    MetricError,
    NoProposalsError,
)
from elicitkit.core.models import ProposalTable

logger = logging.getLogger(__name__)

PE_TOLERANCE = 1e-12


class AgreementScore(BaseModel):
    """Согласованность одного референта"""

    model_config = ConfigDict(frozen=True)

    referent: str
    participant_count: int
    agreement_index: float
    agreement_rate: float
    class_sizes: Tuple[int, ...]


class ChanceAgreement(BaseModel):
    """Случайное согласие P_e и каппа Флейсса по набору референтов"""

    model_config = ConfigDict(frozen=True)

    p_e: float
    categories: Tuple[str, ...]
    pi_k: Tuple[float, ...]
    kappa: float
    mean_agreement_rate: float
    m: int
    q: int
    counts: Tuple[Tuple[int, ...], ...]


class ConsensusEntry(BaseModel):
    """Лучшее предложение для референта"""

    model_config = ConfigDict(frozen=True)

    referent: str
    top_bin: str
    support_count: int
    agreement_rate: float
    accepted: bool
    tied_bins: Tuple[str, ...] = ()
    low_agreement: bool = False
    aliases: Tuple[str, ...] = ()

    @property
    def tie(self) -> bool:
        return bool(self.tied_bins)


class ConsensusSet(BaseModel):
    """Набор консенсуса: соответствие референт -> предложение"""

    model_config = ConfigDict(frozen=True)

    threshold: float
    entries: Tuple[ConsensusEntry, ...]

    def accepted(self) -> List[ConsensusEntry]:
        return [e for e in self.entries if e.accepted]


def _require_classic(table: ProposalTable) -> None:
    if not table.entries:
        raise NoProposalsError(f"no proposals: нет предложений для референта {table.referent}")
    if not table.is_classic:
        raise MetricError(
            f"Референт {table.referent}: ожидается одно предложение на участника (trial = 0)"
        )


def index_fraction(sizes: Sequence[int]) -> Fraction:
    """Точное значение A(r) = sum (|P_i| / |P|)^2"""
    total = sum(sizes)
    return Fraction(sum(s * s for s in sizes), total * total)


def rate_fraction(sizes: Sequence[int]) -> Fraction:
    """Точное значение AR(r) = sum C(|P_i|, 2) / C(|P|, 2)"""
    total = sum(sizes)
    return Fraction(sum(s * (s - 1) for s in sizes), total * (total - 1))


def agreement_index(table: ProposalTable) -> float:
    """
    Индекс согласованности A(r)

    Args:
        table: Классическая таблица предложений

    Returns:
        Сумма квадратов долей классов

    Raises:
        NoProposalsError: Если таблица пуста
    """
    _require_classic(table)
    return float(index_fraction(table.class_sizes()))


def agreement_rate(table: ProposalTable) -> float:
    """
    Коэффициент согласованности AR(r): доля совпадающих пар среди всех пар

    Args:
        table: Классическая таблица предложений

    Returns:
        Значение в [0, 1]

    Raises:
        NoProposalsError: Если таблица пуста
        InsufficientParticipantsError: Если участников меньше двух
    """
    _require_classic(table)
    sizes = table.class_sizes()
    if sum(sizes) < 2:
        raise InsufficientParticipantsError(
            f"insufficient participants: для референта {table.referent} нужно N >= 2"
        )
    return float(rate_fraction(sizes))


def rates_from_counts(counts: np.ndarray) -> np.ndarray:
    """
    AR(r) для набора строк счётчиков классов (строка - референт или розыгрыш)

    Raises:
        InsufficientParticipantsError: Если в строке меньше двух предложений
    """
    counts = np.asarray(counts, dtype=np.int64)
    totals = counts.sum(axis=-1)
    if np.any(totals < 2):
        raise InsufficientParticipantsError("insufficient participants: нужно N >= 2")
    return (counts * (counts - 1)).sum(axis=-1) / (totals * (totals - 1))


def score_referent(table: ProposalTable) -> AgreementScore:
    """A(r), AR(r) и размеры классов для одного референта"""
    rate = agreement_rate(table)
    sizes = table.class_sizes()
    return AgreementScore(
        referent=table.referent,
        participant_count=sum(sizes),
        agreement_index=float(index_fraction(sizes)),
        agreement_rate=rate,
        class_sizes=tuple(sizes),
    )


def score_study(tables: Sequence[ProposalTable]) -> List[AgreementScore]:
    """Оценки согласованности по всем референтам в порядке таблиц"""
    return [score_referent(t) for t in tables]


def chance_agreement(tables: Sequence[ProposalTable]) -> ChanceAgreement:
    """
    Случайное согласие P_e и каппа Флейсса

    pi_k = (1/m) sum_i n_ik / n_i, p_e = sum_k pi_k^2,
    kappa = (AR_mean - p_e) / (1 - p_e), где AR_mean - среднее AR(r) по референтам.

    Args:
        tables: Классические таблицы с общим набором участников

    Returns:
        Параметры случайного согласия

    Raises:
        NoProposalsError: Если таблиц нет
        MetricError: Если наборы участников различаются
        DegenerateDistributionError: Если p_e = 1 при AR_mean < 1
    """
    if not tables:
        raise NoProposalsError("no proposals: нет таблиц для расчёта случайного согласия")
    for table in tables:
        _require_classic(table)
    participant_sets = {tuple(t.participants) for t in tables}
    if len(participant_sets) > 1:
        raise MetricError("Таблицы должны иметь общий набор участников")

    categories = sorted({e.bin for t in tables for e in t.entries})
    column = {label: k for k, label in enumerate(categories)}
    counts = np.zeros((len(tables), len(categories)), dtype=np.int64)
    for i, table in enumerate(tables):
        for label, count in table.bin_counts().items():
            counts[i, column[label]] = count

    n_i = counts.sum(axis=1, keepdims=True)
    pi_k = (counts / n_i).mean(axis=0)
    p_e = float(np.sum(pi_k ** 2))
    mean_rate = float(np.mean([agreement_rate(t) for t in tables]))

    if abs(1.0 - p_e) <= PE_TOLERANCE:
        if abs(1.0 - mean_rate) <= PE_TOLERANCE:
            kappa = 1.0
        else:
            raise DegenerateDistributionError(
                "degenerate category distribution: p_e = 1, но среднее AR < 1"
            )
    else:
        kappa = (mean_rate - p_e) / (1.0 - p_e)

    logger.debug(f"P_e={p_e:.6f}, kappa={kappa:.6f}, m={len(tables)}, q={len(categories)}")
    return ChanceAgreement(
        p_e=p_e,
        categories=tuple(categories),
        pi_k=tuple(float(x) for x in pi_k),
        kappa=kappa,
        mean_agreement_rate=mean_rate,
        m=len(tables),
        q=len(categories),
        counts=tuple(tuple(int(c) for c in row) for row in counts),
    )


def _modal_bins(counts: Dict[str, int]) -> Tuple[str, int, List[str]]:
    top_count = max(counts.values())
    tied = sorted(label for label, c in counts.items() if c == top_count)
    return tied[0], top_count, tied if len(tied) > 1 else []


def extract_consensus_set(
    tables: Sequence[ProposalTable],
    threshold: float = 0.30,
    low_agreement: float = 0.10,
    alias_baseline: Optional[int] = 2,
) -> ConsensusSet:
    """
    Набор консенсуса: самое частое предложение для каждого референта

    Ничья между модальными классами разрешается лексикографически по метке,
    все участники ничьей записываются в tied_bins.

    Args:
        tables: Классические таблицы предложений
        threshold: Порог AR(r) для принятия предложения
        low_agreement: Ниже этого AR(r) предложение помечается как малоинтуитивное
        alias_baseline: Минимальная поддержка для альтернатив (None - не собирать)

    Returns:
        Набор консенсуса в порядке таблиц
    """
    entries = []
    for table in tables:
        rate = agreement_rate(table)
        counts = table.bin_counts()
        top_bin, support, tied = _modal_bins(counts)
        aliases: List[str] = []
        if alias_baseline is not None:
            aliases = [
                label for label, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
                if label != top_bin and c >= alias_baseline
            ]
        if tied:
            logger.info(f"Референт {table.referent}: ничья между классами {tied}, выбран {top_bin}")
        entries.append(ConsensusEntry(
            referent=table.referent,
            top_bin=top_bin,
            support_count=support,
            agreement_rate=rate,
            accepted=rate >= threshold,
            tied_bins=tuple(tied),
            low_agreement=rate < low_agreement,
            aliases=tuple(aliases),
        ))
    return ConsensusSet(threshold=threshold, entries=tuple(entries))


def bonferroni(alpha: float, test_count: int) -> float:
    """
    Поправка Бонферрони: alpha / число тестов

    Raises:
        MetricError: При alpha вне (0, 1) или числе тестов < 1
    """
    if not 0.0 < alpha < 1.0:
        raise MetricError(f"alpha должно лежать в (0, 1), получено {alpha}")
    if test_count < 1:
        raise MetricError(f"Число тестов должно быть >= 1, получено {test_count}")
    return alpha / test_count
