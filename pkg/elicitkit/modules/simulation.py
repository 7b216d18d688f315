"""
Моделирование Монте-Карло нулевого распределения AR(r) при случайном выборе предложений
"""

import logging
from typing import Dict, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator
from tqdm import tqdm

from elicitkit.core.exceptions import SimulationError
from elicitkit.modules.agreement import rates_from_counts

logger = logging.getLogger(__name__)

CHUNK_SIZE = 1024
QUANTILES = (0.90, 0.95, 0.99)
WEIGHT_TOLERANCE = 1e-9


class NullModel(BaseModel):
    """Нулевая модель: N участников случайно выбирают одну из q категорий"""

    model_config = ConfigDict(frozen=True)

    participant_count: int = Field(ge=2)
    category_count: int = Field(ge=1)
    distribution: Literal["uniform", "zipf", "empirical"] = "uniform"
    zipf_s: float = Field(default=1.0, gt=0.0)
    weights: Optional[Tuple[float, ...]] = None
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_weights(self) -> "NullModel":
        if self.distribution == "empirical":
            if self.weights is None or len(self.weights) != self.category_count:
                raise ValueError("Для empirical нужны веса по числу категорий")
            if any(w < 0 for w in self.weights):
                raise ValueError("Веса категорий должны быть неотрицательными")
            if abs(sum(self.weights) - 1.0) > WEIGHT_TOLERANCE:
                raise ValueError(f"Сумма весов должна быть равна 1, получено {sum(self.weights)}")
        return self

    def probabilities(self) -> np.ndarray:
        """Вероятности категорий"""
        q = self.category_count
        if self.distribution == "uniform":
            return np.full(q, 1.0 / q)
        if self.distribution == "zipf":
            raw = 1.0 / np.arange(1, q + 1) ** self.zipf_s
            return raw / raw.sum()
        weights = np.asarray(self.weights, dtype=float)
        return weights / weights.sum()


class NullDistribution(BaseModel):
    """Выборка AR(r) под нулевой моделью и её сводка"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    null_model: NullModel
    draws: int
    samples: np.ndarray
    mean: float
    variance: float
    quantiles: Dict[str, float]

    @field_validator("samples", mode="before")
    @classmethod
    def _readonly(cls, value):
        array = np.array(value, dtype=float)
        array.setflags(write=False)
        return array

    @field_serializer("samples")
    def _samples_to_list(self, samples: np.ndarray):
        return samples.tolist()


def _draw_chunk(model: NullModel, probabilities: np.ndarray, chunk: int, size: int) -> np.ndarray:
    # Поток случайных чисел зависит только от (seed, номер блока)
    rng = np.random.default_rng([model.seed, chunk])
    n, q = model.participant_count, model.category_count
    labels = rng.choice(q, size=(size, n), p=probabilities)
    offsets = labels + np.arange(size)[:, None] * q
    counts = np.bincount(offsets.ravel(), minlength=size * q).reshape(size, q)
    return rates_from_counts(counts)


def simulate_null(model: NullModel, draws: int, progress: bool = False) -> NullDistribution:
    """
    Нулевое распределение AR(r)

    Розыгрыши разбиты на блоки по CHUNK_SIZE; у каждого блока свой поток
    случайных чисел, поэтому результат детерминирован для (model, draws).

    Args:
        model: Нулевая модель
        draws: Число розыгрышей
        progress: Показывать индикатор выполнения

    Returns:
        Выборка и её сводка

    Raises:
        SimulationError: Если draws < 1
    """
    if draws < 1:
        raise SimulationError(f"Число розыгрышей должно быть >= 1, получено {draws}")
    probabilities = model.probabilities()
    chunks = range((draws + CHUNK_SIZE - 1) // CHUNK_SIZE)
    parts = [
        _draw_chunk(model, probabilities, c, min(CHUNK_SIZE, draws - c * CHUNK_SIZE))
        for c in tqdm(chunks, desc="Монте-Карло", disable=not progress, leave=False)
    ]
    samples = np.concatenate(parts)
    quantiles = np.quantile(samples, QUANTILES)

    logger.debug(
        f"Симуляция N={model.participant_count}, q={model.category_count}, "
        f"{model.distribution}: среднее AR {samples.mean():.4f}"
    )
    return NullDistribution(
        null_model=model,
        draws=draws,
        samples=samples,
        mean=float(samples.mean()),
        variance=float(samples.var(ddof=1)) if draws > 1 else 0.0,
        quantiles={f"{level:.2f}": float(v) for level, v in zip(QUANTILES, quantiles)},
    )


def p_value(observed_ar: float, dist: NullDistribution) -> float:
    """
    Эмпирическое p-значение верхнего хвоста с поправкой +1

    (число выборок >= observed + 1) / (draws + 1)
    """
    if dist.samples.size == 0:
        raise SimulationError("Пустое нулевое распределение")
    exceed = int(np.count_nonzero(dist.samples >= observed_ar - 1e-12))
    return (exceed + 1) / (dist.samples.size + 1)


def threshold_for(dist: NullDistribution, level: float = 0.95) -> float:
    """Эмпирический порог AR(r) на уровне одного из QUANTILES"""
    key = f"{level:.2f}"
    if key not in dist.quantiles:
        raise SimulationError(f"Квантиль {level} не рассчитывается, доступны {list(dist.quantiles)}")
    return dist.quantiles[key]
