"""
Настройки анализа: значения по умолчанию, переменные окружения ELICITKIT_* и файл .env
"""

from typing import Any, Dict, List, Literal, Optional, Tuple

import psutil
from pydantic import Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from elicitkit.core.exceptions import ConfigurationError

Zeta = Literal["min", "max", "avg"]
NullKind = Literal["uniform", "zipf", "empirical"]


class AnalysisSettings(BaseSettings):
    """Параметры всех разделов анализа"""

    model_config = SettingsConfigDict(
        env_prefix="ELICITKIT_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        frozen=True,
    )

    seed: int = Field(default=0, ge=0, lt=2**64)

    # Согласованность и набор консенсуса
    threshold: float = Field(default=0.30, ge=0.0, le=1.0)
    low_agreement: float = Field(default=0.10, ge=0.0, le=1.0)
    alias_baseline: int = Field(default=2, ge=1)

    # Речь
    baseline: int = Field(default=1, ge=1)

    # Несходство траекторий
    zeta: Optional[Zeta] = None
    tau_grid: Optional[List[float]] = None
    tau_points: int = Field(default=50, ge=3)
    normalize_dtw: bool = False
    acceptance_ratio: float = Field(default=1.0, ge=0.5, le=1.0)
    combine_taus: bool = False
    cluster_tau: Optional[float] = Field(default=None, ge=0.0)
    fit_alpha: float = Field(default=0.05, gt=0.0, lt=1.0)

    # Предобработка
    target_fps: float = Field(default=25.0, gt=0.0)
    normalize_height: bool = True
    translate_to_origin: bool = True
    reference_joint: int = Field(default=0, ge=0)
    vertical_axis: int = Field(default=1, ge=0, le=2)

    # Симуляция Монте-Карло
    draws: int = Field(default=10_000, ge=1)
    categories: Optional[int] = Field(default=None, ge=1)
    distribution: NullKind = "uniform"
    zipf_s: float = Field(default=1.0, gt=0.0)
    weights: Optional[List[float]] = None

    # Опросники
    likert_scale: Tuple[int, int] = (1, 5)
    tlx_weighted: bool = True

    max_workers: Optional[int] = Field(default=None, ge=1)

    @field_validator("tau_grid")
    @classmethod
    def _increasing(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is None:
            return value
        if len(value) < 3:
            raise ValueError("Сетка tau должна содержать не менее 3 точек")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("Сетка tau должна строго возрастать")
        if value[0] < 0:
            raise ValueError("Значения tau должны быть неотрицательными")
        return value

    @model_validator(mode="after")
    def _check_scale(self) -> "AnalysisSettings":
        low, high = self.likert_scale
        if low >= high:
            raise ValueError(f"Некорректная шкала Likert: {self.likert_scale}")
        return self

    def worker_count(self) -> int:
        """Число потоков для разделов отчёта"""
        if self.max_workers:
            return self.max_workers
        return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1

    def override(self, **changes: Any) -> "AnalysisSettings":
        """
        Копия настроек с изменёнными значениями (флаги командной строки)

        Значения None пропускаются, новые значения проходят валидацию.

        Raises:
            ConfigurationError: Если значение не проходит проверку
        """
        update: Dict[str, Any] = {k: v for k, v in changes.items() if v is not None}
        data = self.model_dump()
        data.update(update)
        return load_settings(**data)


def load_settings(**values: Any) -> AnalysisSettings:
    """
    Загрузка настроек из окружения и .env с явными значениями поверх

    Raises:
        ConfigurationError: При некорректных значениях
    """
    try:
        return AnalysisSettings(**values)
    except ValidationError as e:
        raise ConfigurationError(f"Некорректные настройки анализа: {e}") from e


def parse_tau_grid(text: str) -> List[float]:
    """
    Разбор значения флага --tau-grid

    Поддерживаются формы "start:stop:count" (равномерная сетка) и
    список через запятую "0,0.5,1".

    Raises:
        ConfigurationError: Если строку не удалось разобрать
    """
    try:
        if ":" in text:
            start_s, stop_s, count_s = text.split(":")
            start, stop, count = float(start_s), float(stop_s), int(count_s)
            if count < 2:
                raise ValueError("count < 2")
            step = (stop - start) / (count - 1)
            return [start + i * step for i in range(count)]
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigurationError(f"Некорректная сетка tau '{text}': {e}") from e
