"""
Модель данных исследования выявления (elicitation study), общая для всех модулей анализа
"""

import re
from collections import Counter
from typing import Dict, List, Sequence, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    field_serializer,
    field_validator,
    model_validator,
)

ParticipantId = str
ReferentId = str
EntryKey = Tuple[ParticipantId, int]

_WHITESPACE = re.compile(r"\s+")
_EDGE_PUNCTUATION = re.compile(r"^[^\w]+|[^\w]+$", re.UNICODE)


def normalize_bin(label: str) -> str:
    """Каноническая форма метки класса: без пробелов по краям, в нижнем регистре"""
    return label.strip().lower()


def normalize_utterance(text: str) -> str:
    """
    Нормализация высказывания: нижний регистр, схлопывание пробелов,
    удаление пунктуации по краям

    Args:
        text: Исходное высказывание

    Returns:
        Нормализованная строка (может быть пустой)
    """
    collapsed = _WHITESPACE.sub(" ", text.lower()).strip()
    return _EDGE_PUNCTUATION.sub("", collapsed).strip()


class Study(BaseModel):
    """Описание исследования: участники, референты, метаданные"""

    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    participants: Tuple[ParticipantId, ...]
    referents: Tuple[ReferentId, ...]
    production: bool = False
    metadata: Dict[str, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_ids(self) -> "Study":
        for field_name in ("participants", "referents"):
            ids = getattr(self, field_name)
            duplicates = sorted(k for k, v in Counter(ids).items() if v > 1)
            if duplicates:
                raise ValueError(f"Повторяющиеся идентификаторы в {field_name}: {duplicates}")
        if len(self.participants) < 2:
            raise ValueError("Для попарных метрик нужно не менее 2 участников")
        return self

    @property
    def participant_count(self) -> int:
        return len(self.participants)


class ProposalEntry(BaseModel):
    """Одно предложение участника для референта, отнесённое к классу (bin)"""

    model_config = ConfigDict(frozen=True)

    participant: ParticipantId = Field(min_length=1)
    trial: NonNegativeInt = 0
    bin: str

    @field_validator("bin")
    @classmethod
    def _normalize_bin(cls, value: str) -> str:
        label = normalize_bin(value)
        if not label:
            raise ValueError("Метка класса не может быть пустой")
        return label


class ProposalTable(BaseModel):
    """Предложения всех участников для одного референта"""

    model_config = ConfigDict(frozen=True)

    referent: ReferentId = Field(min_length=1)
    entries: Tuple[ProposalEntry, ...] = ()

    @classmethod
    def from_sizes(cls, referent: ReferentId, sizes: Sequence[int], prefix: str = "P") -> "ProposalTable":
        """
        Построение классической таблицы по размерам классов

        Участники нумеруются подряд, классы получают метки b0, b1, ...
        """
        entries = []
        index = 0
        for label, size in enumerate(sizes):
            for _ in range(size):
                entries.append(ProposalEntry(participant=f"{prefix}{index:02d}", bin=f"b{label}"))
                index += 1
        return cls(referent=referent, entries=tuple(entries))

    @property
    def participants(self) -> List[ParticipantId]:
        return sorted({e.participant for e in self.entries})

    @property
    def participant_count(self) -> int:
        return len({e.participant for e in self.entries})

    @property
    def is_classic(self) -> bool:
        """Одно предложение на участника, только trial = 0"""
        return all(e.trial == 0 for e in self.entries) and len(self.entries) == self.participant_count

    def bin_counts(self) -> Dict[str, int]:
        """Число предложений в каждом классе, метки по алфавиту"""
        counts = Counter(e.bin for e in self.entries)
        return {label: counts[label] for label in sorted(counts)}

    def class_sizes(self) -> List[int]:
        """Размеры классов |P_i| по убыванию"""
        return sorted(self.bin_counts().values(), reverse=True)


class SpeechEntry(BaseModel):
    """Высказывание участника для референта"""

    model_config = ConfigDict(frozen=True)

    participant: ParticipantId = Field(min_length=1)
    utterance: str

    @field_validator("utterance")
    @classmethod
    def _normalize(cls, value: str) -> str:
        text = normalize_utterance(value)
        if not text:
            raise ValueError("Высказывание пусто после нормализации")
        return text


class SpeechTable(BaseModel):
    """Речевые предложения всех участников для одного референта"""

    model_config = ConfigDict(frozen=True)

    referent: ReferentId = Field(min_length=1)
    entries: Tuple[SpeechEntry, ...] = ()

    def utterance_counts(self) -> Dict[str, int]:
        counts = Counter(e.utterance for e in self.entries)
        return {text: counts[text] for text in sorted(counts)}


class Frame(BaseModel):
    """Кадр скелета: J суставов, координаты в метрах"""

    model_config = ConfigDict(frozen=True)

    joints: Tuple[Tuple[float, float, float], ...] = Field(min_length=1)

    @field_validator("joints")
    @classmethod
    def _finite(cls, value):
        if not np.isfinite(np.asarray(value, dtype=float)).all():
            raise ValueError("Координаты суставов должны быть конечными")
        return value


class Trajectory(BaseModel):
    """
    Упорядоченная во времени последовательность кадров скелета для одного предложения

    Кадры хранятся как неизменяемый массив формы (кадры, суставы, 3).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    participant: ParticipantId = Field(min_length=1)
    referent: ReferentId = Field(min_length=1)
    trial: NonNegativeInt = 0
    frame_rate: PositiveFloat
    frames: np.ndarray

    @field_validator("frames", mode="before")
    @classmethod
    def _as_array(cls, value):
        if isinstance(value, (list, tuple)) and value and isinstance(value[0], Frame):
            value = [f.joints for f in value]
        array = np.array(value, dtype=float)
        if array.ndim != 3 or array.shape[2] != 3:
            raise ValueError(f"Ожидается массив (кадры, суставы, 3), получено {array.shape}")
        if array.shape[0] < 2:
            raise ValueError("Траектория должна содержать не менее 2 кадров")
        if array.shape[1] < 1:
            raise ValueError("Кадр должен содержать хотя бы один сустав")
        if not np.isfinite(array).all():
            raise ValueError("Координаты суставов должны быть конечными")
        array.setflags(write=False)
        return array

    @field_serializer("frames")
    def _frames_to_list(self, frames: np.ndarray):
        return frames.tolist()

    @property
    def key(self) -> EntryKey:
        return (self.participant, self.trial)

    @property
    def frame_count(self) -> int:
        return int(self.frames.shape[0])

    @property
    def joint_count(self) -> int:
        return int(self.frames.shape[1])

    @property
    def duration(self) -> float:
        """Длительность в секундах от первого до последнего кадра"""
        return (self.frame_count - 1) / self.frame_rate

    def frame(self, index: int) -> Frame:
        return Frame(joints=tuple(tuple(p) for p in self.frames[index].tolist()))

    def with_frames(self, frames: np.ndarray, frame_rate: float) -> "Trajectory":
        """Копия траектории с новыми кадрами и частотой"""
        return Trajectory(
            participant=self.participant,
            referent=self.referent,
            trial=self.trial,
            frame_rate=frame_rate,
            frames=frames,
        )
