"""Генераторы синтетических задач: SG, GMD, GVD и Blobs."""

import enum
import math
from dataclasses import dataclass

import numpy as np

from core.exceptions import WrongKind
from core.samples import SamplePair
from utils.rng import STREAM_DATA, stream


class ProblemKind(enum.Enum):
    SG = 'sg'
    GMD = 'gmd'
    GVD = 'gvd'
    BLOBS = 'blobs'


@dataclass(frozen=True)
class ToyProblem:
    """Синтетическая задача двухвыборочного тестирования.

    H₀ выполняется только для SG. Для Blobs размерность всегда равна 2.

    Attributes:
        kind (ProblemKind): Вид задачи.
        d (int): Размерность данных.
        grid_size (int): Размер решетки смеси Blobs.
        spacing (float): Расстояние между центрами решетки.
        stretch (float): Отношение собственных чисел ковариации компонент P.
        angle (float): Угол поворота ковариации компонент P.
    """

    kind: ProblemKind
    d: int = 2
    grid_size: int = 4
    spacing: float = 5.0
    stretch: float = 2.0
    angle: float = math.pi / 4

    def __post_init__(self):
        object.__setattr__(self, 'kind', ProblemKind(self.kind))
        if self.kind is ProblemKind.BLOBS:
            object.__setattr__(self, 'd', 2)
        if self.d < 1:
            raise ValueError(f"d должно быть ≥ 1, получено {self.d}")
        if self.grid_size < 1 or self.spacing <= 0 or self.stretch <= 0:
            raise ValueError("Параметры решетки Blobs должны быть положительными")

    @classmethod
    def from_settings(cls, kind, d, settings):
        """Задача с параметрами Blobs из секции [BLOBS] настроек."""
        return cls(
            kind=ProblemKind(kind),
            d=d,
            spacing=settings.blobs_spacing,
            stretch=settings.blobs_stretch,
            angle=settings.blobs_angle,
        )


def _lattice_means(problem):
    ticks = np.arange(problem.grid_size) * problem.spacing
    gx, gy = np.meshgrid(ticks, ticks, indexing='ij')
    return np.column_stack([gx.ravel(), gy.ravel()])


def _stretched_covariance(problem):
    c, s = math.cos(problem.angle), math.sin(problem.angle)
    rotation = np.array([[c, -s], [s, c]])
    return rotation @ np.diag([problem.stretch, 1.0]) @ rotation.T


def blobs_density_params(problem):
    """Компоненты смесей Blobs для P и Q.

    Returns:
        dict: {'p': [(mean, cov), ...], 'q': [(mean, cov), ...]}, по grid_size²
        равновесных компонент.

    Raises:
        WrongKind: Если задача не Blobs.
    """
    if problem.kind is not ProblemKind.BLOBS:
        raise WrongKind(f"Параметры смеси определены только для Blobs, получено {problem.kind.value}")
    means = _lattice_means(problem)
    p_cov = _stretched_covariance(problem)
    return {
        'p': [(m.copy(), p_cov.copy()) for m in means],
        'q': [(m.copy(), np.eye(2)) for m in means],
    }


def _sample_mixture(rng, components, n):
    labels = rng.integers(len(components), size=n)
    out = np.empty((n, 2))
    # Ковариации компонент внутри смеси одинаковы, поэтому достаточно одного разложения
    chol = np.linalg.cholesky(components[0][1])
    means = np.array([m for m, _ in components])
    out[:] = means[labels] + rng.standard_normal((n, 2)) @ chol.T
    return out


def sample_problem(problem, n, seed):
    """Выборка размера n из P и Q задачи.

    X и Y генерируются из независимых подпотоков, так что при одинаковых
    (problem, n, seed) результат побитово совпадает.

    Args:
        problem (ToyProblem): Задача.
        n (int): Размер каждой выборки.
        seed (int): Seed.

    Returns:
        SamplePair: X ~ P, Y ~ Q.
    """
    if n < 1:
        raise ValueError(f"n должно быть ≥ 1, получено {n}")
    rng_x = stream(seed, STREAM_DATA, 0)
    rng_y = stream(seed, STREAM_DATA, 1)
    d = problem.d

    if problem.kind is ProblemKind.BLOBS:
        params = blobs_density_params(problem)
        return SamplePair(_sample_mixture(rng_x, params['p'], n), _sample_mixture(rng_y, params['q'], n))

    x = rng_x.standard_normal((n, d))
    y = rng_y.standard_normal((n, d))
    if problem.kind is ProblemKind.GMD:
        y[:, 0] += 1.0
    elif problem.kind is ProblemKind.GVD:
        y[:, 0] *= math.sqrt(2.0)
    return SamplePair(x, y)
