"""
Речевые метрики: максимальный консенсус (MC) и доля консенсусных вариантов (CDR)
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from elicitkit.core.exceptions import MetricError, NoProposalsError
from elicitkit.core.models import SpeechTable

logger = logging.getLogger(__name__)


class SpeechScore(BaseModel):
    """Речевые метрики одного референта, проценты"""

    model_config = ConfigDict(frozen=True)

    referent: str
    participant_count: int
    max_consensus: float
    consensus_distinct_ratio: float
    modal_utterances: Tuple[str, ...]
    distinct_count: int


class SpeechSummary(BaseModel):
    """Речевые метрики по всем референтам и их средние значения"""

    model_config = ConfigDict(frozen=True)

    baseline: int
    referents: Tuple[SpeechScore, ...]
    mean_max_consensus: Optional[float]
    mean_consensus_distinct_ratio: Optional[float]


def _counts(table: SpeechTable):
    if not table.entries:
        raise NoProposalsError(f"no proposals: нет высказываний для референта {table.referent}")
    return table.utterance_counts()


def max_consensus(table: SpeechTable) -> float:
    """
    MC: процент участников, назвавших самое частое высказывание

    Raises:
        NoProposalsError: Если таблица пуста
    """
    counts = _counts(table)
    return 100.0 * max(counts.values()) / len(table.entries)


def consensus_distinct_ratio(table: SpeechTable, baseline: int = 1) -> float:
    """
    CDR: процент различных высказываний, которые назвали больше baseline участников

    Args:
        table: Таблица высказываний
        baseline: Порог поддержки (по умолчанию 1)

    Raises:
        NoProposalsError: Если таблица пуста
    """
    if baseline < 1:
        raise MetricError(f"baseline должен быть положительным, получено {baseline}")
    counts = _counts(table)
    supported = sum(1 for c in counts.values() if c > baseline)
    return 100.0 * supported / len(counts)


def score_speech(table: SpeechTable, baseline: int = 1) -> SpeechScore:
    counts = _counts(table)
    top = max(counts.values())
    return SpeechScore(
        referent=table.referent,
        participant_count=len(table.entries),
        max_consensus=max_consensus(table),
        consensus_distinct_ratio=consensus_distinct_ratio(table, baseline),
        modal_utterances=tuple(text for text, c in counts.items() if c == top),
        distinct_count=len(counts),
    )


def speech_summary(tables: Sequence[SpeechTable], baseline: int = 1) -> SpeechSummary:
    """MC и CDR по каждому референту, усреднённые по референтам"""
    scores: List[SpeechScore] = [score_speech(t, baseline) for t in tables]
    mean_mc = float(np.mean([s.max_consensus for s in scores])) if scores else None
    mean_cdr = float(np.mean([s.consensus_distinct_ratio for s in scores])) if scores else None
    logger.debug(f"Речевые метрики: референтов {len(scores)}, baseline={baseline}")
    return SpeechSummary(
        baseline=baseline,
        referents=tuple(scores),
        mean_max_consensus=mean_mc,
        mean_consensus_distinct_ratio=mean_cdr,
    )
