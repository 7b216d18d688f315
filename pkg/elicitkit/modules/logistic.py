"""
Подгонка логистической кривой роста к кривой консенсуса C_R(tau)

c(tau) = L0 + (L1 - L0) / (1 + exp(-k (tau - tau0)))

Начальное приближение ищется по грубой сетке (k, tau0) с линейным МНК для
асимптот, затем уточняется демпфированным методом Гаусса-Ньютона
(Левенберга-Марквардта).
"""

import logging
from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import stats
from scipy.special import expit

from elicitkit.core.exceptions import MetricError

logger = logging.getLogger(__name__)

PARAMETER_COUNT = 4
GRID_SIZE = 25
MAX_ITERATIONS = 500
STEP_TOLERANCE = 1e-10
RSS_TOLERANCE = 1e-14


class LogisticFit(BaseModel):
    """Параметры логистической кривой и качество подгонки"""

    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float
    midpoint: float
    steepness: float
    rss: float
    converged: bool
    degenerate: bool = False
    iterations: int = 0
    f_statistic: float = 0.0
    p_value: float = 1.0
    accepted: bool = False

    def predict(self, taus) -> np.ndarray:
        x = np.asarray(taus, dtype=float)
        return self.lower + (self.upper - self.lower) * expit(self.steepness * (x - self.midpoint))


def _evaluate(theta: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    lower, upper, k, t0 = theta
    s = expit(k * (x - t0))
    return lower + (upper - lower) * s, s


def _jacobian(theta: np.ndarray, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    lower, upper, k, t0 = theta
    d = (upper - lower) * s * (1.0 - s)
    return np.column_stack([1.0 - s, s, d * (x - t0), -d * k])


def _initial_guess(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Грубая сетка по (k, tau0); асимптоты для каждой точки сетки - линейный МНК"""
    width = float(x.max() - x.min()) or 1.0
    best_rss, best = np.inf, None
    for k in np.geomspace(0.5 / width, 100.0 / width, GRID_SIZE):
        for t0 in np.linspace(x.min(), x.max(), GRID_SIZE):
            s = expit(k * (x - t0))
            design = np.column_stack([1.0 - s, s])
            coef, *_ = np.linalg.lstsq(design, y, rcond=None)
            rss = float(np.sum((design @ coef - y) ** 2))
            if rss < best_rss:
                best_rss, best = rss, np.array([coef[0], coef[1], k, t0])
    return best


def lack_of_fit(x: np.ndarray, y: np.ndarray, rss: float) -> Tuple[float, float]:
    """
    F-тест несоответствия модели: дисперсия остатков против дисперсии выборки

    Дисперсия выборки оценивается по последовательным разностям
    (оценка фон Неймана), не зависящим от модели.

    Returns:
        (F-статистика, p-значение верхнего хвоста)
    """
    n = len(y)
    residual_var = rss / (n - PARAMETER_COUNT)
    sample_var = float(np.sum(np.diff(y) ** 2) / (2.0 * (n - 1)))
    if sample_var <= 0.0:
        return (0.0, 1.0) if residual_var <= 0.0 else (np.inf, 0.0)
    f_stat = residual_var / sample_var
    return float(f_stat), float(stats.f.sf(f_stat, n - PARAMETER_COUNT, n - 1))


def fit_logistic(
    taus: Sequence[float],
    values: Sequence[float],
    alpha: float = 0.05,
) -> LogisticFit:
    """
    Подгонка логистической кривой методом наименьших квадратов

    Отсутствие сходимости не является ошибкой: возвращаются лучшие найденные
    параметры с converged=False.

    Args:
        taus: Значения tau
        values: Значения консенсуса
        alpha: Уровень F-теста несоответствия

    Returns:
        Результат подгонки

    Raises:
        MetricError: Если точек меньше 4 или длины не совпадают
    """
    x = np.asarray(taus, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise MetricError("tau и значения консенсуса должны быть одномерными и одной длины")
    if len(x) < PARAMETER_COUNT:
        raise MetricError(f"Для подгонки нужно не менее {PARAMETER_COUNT} точек, получено {len(x)}")

    scale = max(1.0, float(np.abs(y).max()))
    if float(np.ptp(y)) <= 1e-9 * scale:
        mean = float(y.mean())
        logger.debug("Кривая постоянна, логистическая подгонка вырождена")
        return LogisticFit(
            lower=mean,
            upper=mean,
            midpoint=float(np.median(x)),
            steepness=0.0,
            rss=float(np.sum((y - mean) ** 2)),
            converged=False,
            degenerate=True,
        )

    theta = _initial_guess(x, y)
    fitted, s = _evaluate(theta, x)
    rss = float(np.sum((y - fitted) ** 2))
    damping = 1e-3
    converged = False
    iteration = 0

    for iteration in range(1, MAX_ITERATIONS + 1):
        residual = y - fitted
        jac = _jacobian(theta, x, s)
        normal = jac.T @ jac
        gradient = jac.T @ residual
        if rss <= RSS_TOLERANCE * scale * scale:
            converged = True
            break
        try:
            step = np.linalg.solve(normal + damping * np.diag(np.diag(normal) + 1e-12), gradient)
        except np.linalg.LinAlgError:
            damping *= 10.0
            continue

        candidate = theta + step
        candidate_fitted, candidate_s = _evaluate(candidate, x)
        candidate_rss = float(np.sum((y - candidate_fitted) ** 2))

        if np.isfinite(candidate_rss) and candidate_rss < rss:
            improvement = rss - candidate_rss
            theta, fitted, s, rss = candidate, candidate_fitted, candidate_s, candidate_rss
            damping = max(damping / 10.0, 1e-15)
            small_step = np.linalg.norm(step) <= STEP_TOLERANCE * (np.linalg.norm(theta) + STEP_TOLERANCE)
            if small_step or improvement <= RSS_TOLERANCE * rss:
                converged = True
                break
        else:
            damping *= 10.0
            if damping > 1e15:
                # Шаг не уменьшает невязку: проверяем, что градиент пренебрежимо мал
                converged = bool(
                    np.max(np.abs(gradient)) <= 1e-8 * (1.0 + np.linalg.norm(jac) * np.sqrt(rss))
                )
                break

    lower, upper, k, t0 = (float(v) for v in theta)
    if k < 0:
        lower, upper, k = upper, lower, -k
    if k <= 0:
        converged = False

    f_stat, p = lack_of_fit(x, y, rss)
    logger.debug(
        f"Логистическая подгонка: k={k:.4g}, tau0={t0:.4g}, rss={rss:.4g}, "
        f"итераций {iteration}, сходимость {converged}"
    )
    return LogisticFit(
        lower=lower,
        upper=upper,
        midpoint=t0,
        steepness=k,
        rss=rss,
        converged=converged,
        iterations=iteration,
        f_statistic=f_stat,
        p_value=p,
        accepted=converged and p >= alpha,
    )
