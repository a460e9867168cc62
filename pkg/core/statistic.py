"""Регуляризованная статистика λ̂_n, правило χ² и процедуры тестов ME/SCF."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.exceptions import NotPositiveDefinite, TooFewSamples
from core.kernels import feature_matrix
from utils.linalg_stats import ChiSquared, chi2_quantile, solve_spd
from utils.logger import setup_logging

logger = setup_logging()

GAMMA_FLOOR = 1e-5
GAMMA_MAX = 1e-1
GAMMA_GROWTH = 10.0


@dataclass(frozen=True)
class StatConfig:
    """Параметры статистики.

    Attributes:
        gamma (float): Регуляризация γ_n ≥ 0 (нижняя граница эффективного γ).
        alpha (float): Уровень значимости в (0, 1).
        gamma_max (float): Предел автоматического увеличения γ.
    """

    gamma: float = GAMMA_FLOOR
    alpha: float = 0.01
    gamma_max: float = GAMMA_MAX

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma должна быть ≥ 0, получено {self.gamma}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha должна лежать в (0, 1), получено {self.alpha}")


@dataclass(frozen=True)
class TestResult:
    """Результат теста.

    Для χ²-тестов reject ⇔ statistic > threshold; для перестановочного теста
    reject ⇔ p_value < alpha (threshold носит справочный характер).
    """

    __test__ = False

    statistic: float
    threshold: float
    p_value: float
    reject: bool
    dof: Optional[int] = None
    gamma: Optional[float] = None

    def to_dict(self):
        return {
            'statistic': float(self.statistic),
            'threshold': float(self.threshold),
            'p_value': float(self.p_value),
            'reject': bool(self.reject),
            'dof': self.dof,
            'gamma': self.gamma,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            statistic=data['statistic'],
            threshold=data['threshold'],
            p_value=data['p_value'],
            reject=data['reject'],
            dof=data.get('dof'),
            gamma=data.get('gamma'),
        )


def mean_and_covariance(features):
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    n = features.shape[0]
    if n < 2:
        raise TooFewSamples(f"Для выборочной ковариации нужно n ≥ 2, получено n={n}")
    z_bar = features.mean(axis=0)
    centered = features - z_bar
    cov = centered.T @ centered / (n - 1)
    return z_bar, 0.5 * (cov + cov.T), n


def statistic(features, gamma):
    """λ̂_n = n z̄ᵀ(S_n + γI)⁻¹ z̄ для матрицы признаков n×J′.

    Args:
        features (numpy.ndarray): Матрица признаков, строки z_i.
        gamma (float): Регуляризация γ ≥ 0.

    Returns:
        float: Неотрицательное значение статистики.

    Raises:
        TooFewSamples: Если n < 2.
        NotPositiveDefinite: Если S_n + γI не положительно определена.
    """
    if gamma < 0:
        raise ValueError(f"gamma должна быть ≥ 0, получено {gamma}")
    z_bar, cov, n = mean_and_covariance(features)
    if not np.any(z_bar):
        return 0.0
    w = solve_spd(cov + gamma * np.eye(cov.shape[0]), z_bar)
    return max(float(n * z_bar @ w), 0.0)


def effective_gamma(features, gamma):
    """max(γ, eps·tr(S_n)): регуляризация не ниже машинного масштаба ковариации."""
    _, cov, _ = mean_and_covariance(features)
    return max(float(gamma), float(np.finfo(float).eps * np.trace(cov)))


def stable_statistic(features, gamma=GAMMA_FLOOR, gamma_max=GAMMA_MAX):
    """Статистика с автоматическим увеличением γ при неудаче разложения.

    γ умножается на 10, пока разложение не удастся или γ не превысит gamma_max.

    Returns:
        tuple[float, float]: Значение статистики и фактически использованное γ.

    Raises:
        NotPositiveDefinite: Если не помогло и γ = gamma_max.
    """
    gamma_used = effective_gamma(features, gamma)
    while True:
        try:
            return statistic(features, gamma_used), gamma_used
        except NotPositiveDefinite:
            if gamma_used >= gamma_max:
                logger.error(f"Статистика не вычислена даже при γ={gamma_used:g}.")
                raise
            next_gamma = min(max(gamma_used, GAMMA_FLOOR) * GAMMA_GROWTH, gamma_max)
            logger.warning(f"S_n + γI вырождена при γ={gamma_used:g}; увеличиваю до {next_gamma:g}.")
            gamma_used = next_gamma


def chi2_decision(value, dof, alpha, gamma=None):
    """Решение по асимптотическому χ²(J′): порог, p-значение, отклонение H₀."""
    dist = ChiSquared(dof)
    threshold = chi2_quantile(1.0 - alpha, dist)
    return TestResult(
        statistic=float(value),
        threshold=float(threshold),
        p_value=dist.sf(value),
        reject=bool(value > threshold),
        dof=int(dof),
        gamma=gamma,
    )


def run_test(kind, params, sample, config):
    """Полная процедура теста ME или SCF на тестовой половине данных.

    Args:
        kind (FeatureMapKind): ME или SCF.
        params (TestParams): Параметры θ.
        sample (SamplePair): Тестовая выборка.
        config (StatConfig): γ и α.

    Returns:
        TestResult: Статистика, порог T_α, p-значение и решение.
    """
    features = feature_matrix(kind, params, sample)
    value, gamma_used = stable_statistic(features, config.gamma, config.gamma_max)
    result = chi2_decision(value, features.shape[1], config.alpha, gamma_used)
    logger.debug(
        f"Тест {kind.value}: λ̂={result.statistic:.4f}, T_α={result.threshold:.4f}, "
        f"p={result.p_value:.4g}, отклонение={result.reject}"
    )
    return result


def population_lambda(mu, sigma, n):
    """Популяционный аналог λ_n = n μᵀΣ⁻¹μ.

    Raises:
        NotPositiveDefinite: Если Σ не положительно определена.
    """
    mu = np.asarray(mu, dtype=float).ravel()
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if not np.any(mu):
        # проверка Σ сохраняется и для μ = 0
        solve_spd(sigma, mu)
        return 0.0
    return float(n * mu @ solve_spd(sigma, mu))
