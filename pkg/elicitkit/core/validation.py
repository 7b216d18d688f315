"""
Проверка согласованности данных исследования: участники, референты, номера попыток
"""

import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from pydantic import BaseModel, ConfigDict

from elicitkit.core.models import ProposalTable, SpeechTable, Study, Trajectory

logger = logging.getLogger(__name__)

UNKNOWN_PARTICIPANT = "unknown participant"
UNKNOWN_REFERENT = "unknown referent"
MISSING_REFERENT = "missing referent"
MISSING_PARTICIPANT = "missing participant"
DUPLICATE_ENTRY = "duplicate entry"
DUPLICATE_TABLE = "duplicate table"
NON_CONTIGUOUS_TRIALS = "non-contiguous trials"
MULTIPLE_TRIALS = "multiple trials in classic study"
JOINT_COUNT_MISMATCH = "joint count mismatch"


class Violation(BaseModel):
    """Одно нарушение ограничений модели данных"""

    model_config = ConfigDict(frozen=True)

    code: str
    message: str
    referent: Optional[str] = None
    participant: Optional[str] = None

    def describe(self) -> str:
        where = "/".join(x for x in (self.referent, self.participant) if x)
        return f"[{self.code}] {where}: {self.message}" if where else f"[{self.code}] {self.message}"


class ValidationReport(BaseModel):
    """Результат validate_study: пустой список нарушений означает корректные данные"""

    model_config = ConfigDict(frozen=True)

    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> List[str]:
        return [v.code for v in self.violations]


def _check_trials(
    study: Study, referent: str, trials_by_participant: Dict[str, List[int]]
) -> List[Violation]:
    violations = []
    for participant, trials in trials_by_participant.items():
        distinct = sorted(set(trials))
        if distinct != list(range(len(distinct))):
            violations.append(Violation(
                code=NON_CONTIGUOUS_TRIALS,
                message=f"Номера попыток {distinct} не идут подряд с 0",
                referent=referent,
                participant=participant,
            ))
        elif not study.production and len(trials) > 1:
            violations.append(Violation(
                code=MULTIPLE_TRIALS,
                message=f"В классическом исследовании допускается одна попытка, получено {len(trials)}",
                referent=referent,
                participant=participant,
            ))
    return violations


def _check_coverage(
    study: Study, referent: str, seen: Iterable[str], what: str
) -> List[Violation]:
    present = set(seen)
    return [
        Violation(
            code=MISSING_PARTICIPANT,
            message=f"Участник не дал {what}",
            referent=referent,
            participant=participant,
        )
        for participant in study.participants
        if participant not in present
    ]


def _check_referents(study: Study, referents: Sequence[str], kind: str) -> List[Violation]:
    violations = []
    known = set(study.referents)
    seen: Set[str] = set()
    for referent in referents:
        if referent not in known:
            violations.append(Violation(
                code=UNKNOWN_REFERENT,
                message=f"Референт отсутствует в описании исследования ({kind})",
                referent=referent,
            ))
        if referent in seen:
            violations.append(Violation(
                code=DUPLICATE_TABLE,
                message=f"Повторная таблица для референта ({kind})",
                referent=referent,
            ))
        seen.add(referent)
    if referents:
        for referent in study.referents:
            if referent not in seen:
                violations.append(Violation(
                    code=MISSING_REFERENT,
                    message=f"Нет данных для референта ({kind})",
                    referent=referent,
                ))
    return violations


def _validate_proposals(study: Study, tables: Sequence[ProposalTable]) -> List[Violation]:
    known = set(study.participants)
    violations = _check_referents(study, [t.referent for t in tables], "proposals")

    for table in tables:
        seen_keys: Set[Tuple[str, int]] = set()
        trials: Dict[str, List[int]] = defaultdict(list)
        for entry in table.entries:
            if entry.participant not in known:
                violations.append(Violation(
                    code=UNKNOWN_PARTICIPANT,
                    message="Участник отсутствует в описании исследования",
                    referent=table.referent,
                    participant=entry.participant,
                ))
                continue
            key = (entry.participant, entry.trial)
            if key in seen_keys:
                violations.append(Violation(
                    code=DUPLICATE_ENTRY,
                    message=f"Повторная запись для попытки {entry.trial}",
                    referent=table.referent,
                    participant=entry.participant,
                ))
                continue
            seen_keys.add(key)
            trials[entry.participant].append(entry.trial)

        violations.extend(_check_trials(study, table.referent, trials))
        violations.extend(_check_coverage(study, table.referent, trials, "предложение"))
    return violations


def _validate_speech(study: Study, tables: Sequence[SpeechTable]) -> List[Violation]:
    known = set(study.participants)
    violations = _check_referents(study, [t.referent for t in tables], "speech")

    for table in tables:
        seen: Set[str] = set()
        for entry in table.entries:
            if entry.participant not in known:
                violations.append(Violation(
                    code=UNKNOWN_PARTICIPANT,
                    message="Участник отсутствует в описании исследования",
                    referent=table.referent,
                    participant=entry.participant,
                ))
            elif entry.participant in seen:
                violations.append(Violation(
                    code=DUPLICATE_ENTRY,
                    message="Повторное высказывание",
                    referent=table.referent,
                    participant=entry.participant,
                ))
            seen.add(entry.participant)
        violations.extend(_check_coverage(study, table.referent, seen, "высказывание"))
    return violations


def _validate_trajectories(study: Study, trajectories: Sequence[Trajectory]) -> List[Violation]:
    known_participants = set(study.participants)
    known_referents = set(study.referents)
    violations = []
    by_referent: Dict[str, List[Trajectory]] = defaultdict(list)

    for traj in trajectories:
        if traj.participant not in known_participants:
            violations.append(Violation(
                code=UNKNOWN_PARTICIPANT,
                message="Участник траектории отсутствует в описании исследования",
                referent=traj.referent,
                participant=traj.participant,
            ))
        elif traj.referent not in known_referents:
            violations.append(Violation(
                code=UNKNOWN_REFERENT,
                message="Референт траектории отсутствует в описании исследования",
                referent=traj.referent,
                participant=traj.participant,
            ))
        else:
            by_referent[traj.referent].append(traj)

    for referent in sorted(by_referent):
        group = by_referent[referent]
        seen_keys: Set[Tuple[str, int]] = set()
        trials: Dict[str, List[int]] = defaultdict(list)
        for traj in group:
            if traj.key in seen_keys:
                violations.append(Violation(
                    code=DUPLICATE_ENTRY,
                    message=f"Повторная траектория для попытки {traj.trial}",
                    referent=referent,
                    participant=traj.participant,
                ))
                continue
            seen_keys.add(traj.key)
            trials[traj.participant].append(traj.trial)
        joint_counts = sorted({t.joint_count for t in group})
        if len(joint_counts) > 1:
            violations.append(Violation(
                code=JOINT_COUNT_MISMATCH,
                message=f"Разное число суставов в траекториях: {joint_counts}",
                referent=referent,
            ))
        violations.extend(_check_trials(study, referent, trials))
    return violations


def validate_study(
    study: Study,
    tables: Sequence[ProposalTable],
    speech_tables: Sequence[SpeechTable] = (),
    trajectories: Sequence[Trajectory] = (),
) -> ValidationReport:
    """
    Проверка данных исследования на согласованность

    Проблемы не выбрасываются, а собираются в отчёт. Функция чистая:
    одинаковые входные данные дают одинаковый отчёт.

    Args:
        study: Описание исследования
        tables: Таблицы предложений по референтам
        speech_tables: Таблицы речевых предложений
        trajectories: Траектории жестов

    Returns:
        Отчёт со списком нарушений
    """
    violations = _validate_proposals(study, tables)
    violations += _validate_speech(study, speech_tables)
    violations += _validate_trajectories(study, trajectories)

    if violations:
        logger.debug(f"Исследование {study.id}: найдено нарушений {len(violations)}")
    return ValidationReport(violations=tuple(violations))
