"""Гауссово ядро и векторы признаков z_i для тестов ME и SCF."""

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from core.exceptions import DimensionMismatch, SeparationFailure
from core.samples import SamplePair

DEFAULT_MIN_SEPARATION = 1e-6


class FeatureMapKind(enum.Enum):
    """Вид признаков: ME (пространственные точки) или SCF (частоты)."""

    ME = 'me'
    SCF = 'scf'

    def feature_dim(self, J):
        """Размерность признаков J′: J для ME и 2J для SCF."""
        return J if self is FeatureMapKind.ME else 2 * J


@dataclass(frozen=True)
class GaussianKernel:
    """Изотропное гауссово ядро k(x, y) = exp(−‖x−y‖² / (2σ²)).

    Attributes:
        sigma (float): Ширина ядра σ > 0 в единицах данных.
    """

    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"Ширина ядра должна быть положительной, получено {self.sigma}")

    def gram(self, a, b):
        """Матрица значений ядра между строками a (m×d) и b (k×d)."""
        sq = cdist(np.atleast_2d(a), np.atleast_2d(b), 'sqeuclidean')
        return np.exp(-sq / (2.0 * self.sigma ** 2))


@dataclass(frozen=True)
class TestLocations:
    """J тестовых точек в R^d.

    Attributes:
        points (numpy.ndarray): Матрица J×d.
        min_separation (float): Минимальное попарное расстояние ε.
    """

    __test__ = False

    points: np.ndarray
    min_separation: float = DEFAULT_MIN_SEPARATION

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if points.shape[0] < 1:
            raise ValueError("Нужна хотя бы одна тестовая точка")
        if not np.all(np.isfinite(points)):
            raise ValueError("Тестовые точки содержат нечисловые значения")
        if min_pairwise_distance(points) < self.min_separation:
            raise SeparationFailure(
                f"Тестовые точки ближе друг к другу, чем ε={self.min_separation}"
            )
        object.__setattr__(self, 'points', points)

    @property
    def J(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class TestParams:
    """Параметры теста θ = {V, σ}."""

    __test__ = False

    locations: TestLocations
    kernel: GaussianKernel

    def to_dict(self):
        return {'locations': self.locations.points.tolist(), 'sigma': float(self.kernel.sigma)}

    @classmethod
    def from_arrays(cls, points, sigma, min_separation=DEFAULT_MIN_SEPARATION):
        return cls(TestLocations(points, min_separation), GaussianKernel(float(sigma)))


def min_pairwise_distance(points):
    """Минимальное попарное расстояние между строками (inf для одной точки)."""
    points = np.atleast_2d(points)
    if points.shape[0] < 2:
        return np.inf
    return float(np.min(pdist(points)))


def _check_vector_dims(*vectors):
    dims = {np.asarray(v).shape[-1] for v in vectors}
    if len(dims) != 1:
        raise DimensionMismatch(f"Размерности не совпадают: {sorted(dims)}")


def kernel_eval(kernel, x, y):
    """Значение ядра k(x, y) в (0, 1].

    Raises:
        DimensionMismatch: Если размерности x и y различны.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    _check_vector_dims(x, y)
    return float(np.exp(-np.sum((x - y) ** 2) / (2.0 * kernel.sigma ** 2)))


def origin_smoother(kernel):
    """Сглаживающий множитель l̂(x) = k(x, 0) для признаков SCF."""
    def smoother(points):
        points = np.atleast_2d(points)
        return np.exp(-np.sum(points ** 2, axis=1) / (2.0 * kernel.sigma ** 2))
    return smoother


def me_feature(kernel, locations, x, y):
    """Вектор признаков ME: z_j = k(x, v_j) − k(y, v_j), длина J."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    _check_vector_dims(x, y, locations.points)
    return me_features(x[None, :], y[None, :], locations.points, kernel.sigma)[0]


def scf_feature(kernel, locations, x, y, smoother=None):
    """Вектор признаков SCF длины 2J в порядке [sin_1, cos_1, sin_2, cos_2, ...].

    Args:
        kernel (GaussianKernel): Ядро, задающее l̂(x) = k(x, 0).
        locations (TestLocations): Частоты v_j.
        x, y (numpy.ndarray): Пара наблюдений.
        smoother (callable, optional): Замена l̂ (массив m×d -> массив m);
            по умолчанию k(·, 0).
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    _check_vector_dims(x, y, locations.points)
    return scf_features(x[None, :], y[None, :], locations.points, kernel.sigma, smoother)[0]


def me_features(x, y, points, sigma):
    """Пакетные признаки ME для массивов X, Y (n×d) и точек V (J×d)."""
    sq_x = cdist(x, points, 'sqeuclidean')
    sq_y = cdist(y, points, 'sqeuclidean')
    scale = 2.0 * sigma ** 2
    return np.exp(-sq_x / scale) - np.exp(-sq_y / scale)


def scf_features(x, y, points, sigma, smoother=None):
    """Пакетные признаки SCF для массивов X, Y (n×d) и частот V (J×d)."""
    if smoother is None:
        smoother = origin_smoother(GaussianKernel(sigma))
    lx = smoother(x)[:, None]
    ly = smoother(y)[:, None]
    proj_x = x @ points.T
    proj_y = y @ points.T
    n, J = proj_x.shape
    z = np.empty((n, 2 * J))
    z[:, 0::2] = lx * np.sin(proj_x) - ly * np.sin(proj_y)
    z[:, 1::2] = lx * np.cos(proj_x) - ly * np.cos(proj_y)
    return z


def feature_matrix(kind, params, sample):
    """Матрица признаков n×J′, строка i равна z_i.

    Args:
        kind (FeatureMapKind): ME или SCF.
        params (TestParams): Тестовые точки и ядро.
        sample (SamplePair): Выборки одинакового размера.

    Returns:
        numpy.ndarray: Матрица признаков.

    Raises:
        DimensionMismatch: Если размерность точек не совпадает с размерностью данных.
    """
    if params.locations.d != sample.d:
        raise DimensionMismatch(
            f"Размерность точек {params.locations.d} не совпадает с размерностью данных {sample.d}"
        )
    if kind is FeatureMapKind.ME:
        return me_features(sample.x, sample.y, params.locations.points, params.kernel.sigma)
    return scf_features(sample.x, sample.y, params.locations.points, params.kernel.sigma)
