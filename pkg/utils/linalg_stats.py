"""Малая плотная линейная алгебра и распределение хи-квадрат."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy import special

from core.exceptions import DimensionMismatch, InvalidProbability, NotPositiveDefinite
from utils.logger import setup_logging

logger = setup_logging()

SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class ChiSquared:
    """Распределение χ²(dof).

    Attributes:
        dof (int): Число степеней свободы J′ (J для ME, 2J для SCF).
    """

    dof: int

    def __post_init__(self):
        if int(self.dof) != self.dof or self.dof < 1:
            raise ValueError(f"Число степеней свободы должно быть целым ≥ 1, получено {self.dof}")

    def cdf(self, x):
        return chi2_cdf(x, self)

    def quantile(self, p):
        return chi2_quantile(p, self)

    def sf(self, x):
        """Хвост 1 − cdf(x), вычисленный без потери точности."""
        x = max(float(x), 0.0)
        return float(special.gammaincc(self.dof / 2.0, x / 2.0))


def solve_spd(a, b):
    """Решает A x = b для симметричной положительно определенной A.

    Используется разложение Холецкого; обратная матрица не формируется.

    Args:
        a (numpy.ndarray): Квадратная симметричная матрица (k×k).
        b (numpy.ndarray): Правая часть длины k.

    Returns:
        numpy.ndarray: Решение x.

    Raises:
        DimensionMismatch: Если A не квадратная или размеры A и b не совпадают.
        NotPositiveDefinite: Если разложение встретило неположительный ведущий элемент.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"Матрица должна быть квадратной, получено {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"Размер правой части {b.shape[0]} не совпадает с порядком матрицы {a.shape[0]}")

    scale = max(np.max(np.abs(a)), np.finfo(float).tiny)
    if np.max(np.abs(a - a.T)) > SYMMETRY_RTOL * scale:
        raise DimensionMismatch("Матрица не симметрична")
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("Матрица содержит нечисловые значения")

    try:
        factor = linalg.cho_factor(a, lower=True, check_finite=False)
    except linalg.LinAlgError as e:
        logger.debug(f"Разложение Холецкого не удалось: {e}")
        raise NotPositiveDefinite(f"Матрица не положительно определена: {e}") from e
    return linalg.cho_solve(factor, b, check_finite=False)


def spd_inverse(a):
    """Обратная к SPD-матрице через разложение Холецкого (для норм Фробениуса)."""
    a = np.asarray(a, dtype=float)
    return solve_spd(a, np.eye(a.shape[0]))


def chi2_cdf(x, dist):
    """Функция распределения χ²: регуляризованная нижняя неполная гамма P(dof/2, x/2).

    Args:
        x (float): Неотрицательная точка; малые отрицательные значения от округления
            приводятся к нулю.
        dist (ChiSquared): Распределение.

    Returns:
        float: Вероятность в [0, 1].
    """
    x = max(float(x), 0.0)
    return float(special.gammainc(dist.dof / 2.0, x / 2.0))


def chi2_quantile(p, dist):
    """Квантиль χ² уровня p (обращение chi2_cdf).

    Args:
        p (float): Вероятность в [0, 1).
        dist (ChiSquared): Распределение.

    Returns:
        float: T ≥ 0 такое, что chi2_cdf(T) = p.

    Raises:
        InvalidProbability: Если p вне [0, 1).
    """
    p = float(p)
    if not (0.0 <= p < 1.0):
        raise InvalidProbability(f"Вероятность должна лежать в [0, 1), получено {p}")
    if p == 0.0:
        return 0.0
    return float(2.0 * special.gammaincinv(dist.dof / 2.0, p))
