"""Базовые тесты для сравнения: линейный MMD, квадратичный MMD с перестановками, T² Хотеллинга."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from core.exceptions import NotPositiveDefinite, SingularCovariance, TooFewSamples
from core.kernels import GaussianKernel
from core.statistic import TestResult, chi2_decision
from utils.linalg_stats import solve_spd
from utils.logger import setup_logging
from utils.rng import STREAM_PERMUTATION, stream

logger = setup_logging()

PROXY_FLOOR = 1e-8


@dataclass(frozen=True)
class PermutationConfig:
    """Параметры перестановочного приближения нулевого распределения.

    Attributes:
        num_permutations (int): Число перестановок B ≥ 1.
        seed (int): Seed; перестановка b использует собственный поток (seed, b).
        workers (int): Число потоков для вычисления перестановок.
    """

    num_permutations: int = 400
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.num_permutations < 1:
            raise ValueError(f"num_permutations должно быть ≥ 1, получено {self.num_permutations}")


def _paired_kernel(kernel, a, b):
    return np.exp(-np.sum((a - b) ** 2, axis=1) / (2.0 * kernel.sigma ** 2))


def linear_mmd_terms(sample, kernel):
    """Слагаемые h линейной оценки MMD² по ⌊n/2⌋ непересекающимся парам.

    h = k(x, x′) + k(y, y′) − k(x, y′) − k(x′, y) для пар (x_{2i−1}, y_{2i−1}), (x_{2i}, y_{2i}).
    """
    m = sample.n // 2
    x1, x2 = sample.x[0:2 * m:2], sample.x[1:2 * m:2]
    y1, y2 = sample.y[0:2 * m:2], sample.y[1:2 * m:2]
    return (
        _paired_kernel(kernel, x1, x2) + _paired_kernel(kernel, y1, y2)
        - _paired_kernel(kernel, x1, y2) - _paired_kernel(kernel, x2, y1)
    )


def mmd_lin(sample, kernel, alpha):
    """Линейный тест MMD с нормальным нулевым распределением.

    Статистика - среднее h; порог - квантиль N(0, σ̂_h²/m) уровня 1 − α.

    Raises:
        TooFewSamples: Если n < 4.
    """
    if sample.n < 4:
        raise TooFewSamples(f"Для линейного MMD нужно n ≥ 4, получено n={sample.n}")
    h = linear_mmd_terms(sample, kernel)
    m = h.size
    value = float(h.mean())
    std_err = float(h.std(ddof=1) / np.sqrt(m))
    threshold = float(stats.norm.ppf(1.0 - alpha) * std_err)
    if std_err > 0:
        p_value = float(stats.norm.sf(value / std_err))
    else:
        p_value = 0.0 if value > 0 else 1.0
    return TestResult(statistic=value, threshold=threshold, p_value=p_value, reject=bool(value > threshold))


def _mmd_u_from_gram(gram, idx_x, idx_y):
    n = idx_x.size
    k_xx = gram[np.ix_(idx_x, idx_x)]
    k_yy = gram[np.ix_(idx_y, idx_y)]
    k_xy = gram[np.ix_(idx_x, idx_y)]
    denom = n * (n - 1)
    return float(
        (k_xx.sum() - np.trace(k_xx)) / denom
        + (k_yy.sum() - np.trace(k_yy)) / denom
        - 2.0 * (k_xy.sum() - np.trace(k_xy)) / denom
    )


def mmd_u_statistic(sample, kernel):
    """Несмещенная U-статистика MMD² для выборок одинакового размера.

    Raises:
        TooFewSamples: Если n < 2.
    """
    if sample.n < 2:
        raise TooFewSamples(f"Для U-статистики нужно n ≥ 2, получено n={sample.n}")
    pooled = sample.pooled()
    n = sample.n
    gram = kernel.gram(pooled, pooled)
    return _mmd_u_from_gram(gram, np.arange(n), np.arange(n, 2 * n))


def mmd_quad(sample, kernel, alpha, perm):
    """Квадратичный тест MMD с перестановочным нулевым распределением.

    p-значение = (1 + #{перестановок с MMD² ≥ наблюдаемого}) / (1 + B);
    H₀ отклоняется при p < α. threshold - эмпирический квантиль 1 − α
    перестановочных значений.
    """
    if sample.n < 2:
        raise TooFewSamples(f"Для квадратичного MMD нужно n ≥ 2, получено n={sample.n}")
    n = sample.n
    pooled = sample.pooled()
    gram = kernel.gram(pooled, pooled)
    observed = _mmd_u_from_gram(gram, np.arange(n), np.arange(n, 2 * n))

    def permuted(b):
        order = stream(perm.seed, STREAM_PERMUTATION, b).permutation(2 * n)
        return _mmd_u_from_gram(gram, order[:n], order[n:])

    if perm.workers > 1:
        with ThreadPoolExecutor(max_workers=perm.workers) as executor:
            null_values = np.fromiter(executor.map(permuted, range(perm.num_permutations)), dtype=float)
    else:
        null_values = np.array([permuted(b) for b in range(perm.num_permutations)])

    p_value = float((1 + np.sum(null_values >= observed)) / (1 + perm.num_permutations))
    threshold = float(np.quantile(null_values, 1.0 - alpha))
    return TestResult(statistic=observed, threshold=threshold, p_value=p_value, reject=bool(p_value < alpha))


def _power_proxy(sample, kernel, variant):
    if variant == 'lin':
        h = linear_mmd_terms(sample, kernel)
        return float(h.mean() / (h.std(ddof=1) + PROXY_FLOOR))
    return mmd_u_statistic(sample, kernel)


def mmd_width_select(train, grid, variant='lin'):
    """Ширина ядра из сетки, максимизирующая прокси мощности на обучающей половине.

    variant='lin': MMD²_lin / (σ̂_h + 1e-8); variant='quad': сама U-статистика MMD².
    При равенстве выбирается первый элемент сетки.
    """
    if len(grid) == 0:
        raise ValueError("Сетка σ не должна быть пустой")
    if variant not in ('lin', 'quad'):
        raise ValueError(f"Неизвестный вариант MMD: {variant}")
    proxies = [_power_proxy(train, GaussianKernel(float(s)), variant) for s in grid]
    best = int(np.argmax(proxies))
    logger.debug(f"MMD-{variant}: выбрана ширина σ={grid[best]:.4g} (прокси {proxies[best]:.4g}).")
    return GaussianKernel(float(grid[best]))


def hotelling_t2(sample, alpha):
    """Двухвыборочный тест T² Хотеллинга с порогом χ²(d).

    T² = (n·n/(n+n)) (x̄ − ȳ)ᵀ S_p⁻¹ (x̄ − ȳ), S_p - объединенная ковариация.

    Raises:
        SingularCovariance: Если n ≤ d или S_p вырождена.
    """
    n, d = sample.n, sample.d
    if n <= d:
        raise SingularCovariance(f"Для T² нужно n > d, получено n={n}, d={d}")
    diff = sample.x.mean(axis=0) - sample.y.mean(axis=0)
    pooled_cov = 0.5 * (np.cov(sample.x, rowvar=False, ddof=1) + np.cov(sample.y, rowvar=False, ddof=1))
    pooled_cov = np.atleast_2d(pooled_cov)
    try:
        solved = solve_spd(pooled_cov, diff)
    except NotPositiveDefinite as e:
        raise SingularCovariance(f"Объединенная ковариация вырождена: {e}") from e
    value = 0.0 if not np.any(diff) else float(n / 2.0 * diff @ solved)
    return chi2_decision(value, d, alpha)
