from dataclasses import dataclass

import numpy as np

from core.exceptions import DimensionMismatch, SizeMismatch


@dataclass(frozen=True)
class SamplePair:
    """Две выборки одинакового размера: X из P и Y из Q.

    Attributes:
        x (numpy.ndarray): Наблюдения из P, форма n×d.
        y (numpy.ndarray): Наблюдения из Q, форма n×d.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        if x.shape[0] != y.shape[0]:
            raise SizeMismatch(f"Размеры выборок различаются: |X|={x.shape[0]}, |Y|={y.shape[0]}")
        if x.shape[1] != y.shape[1]:
            raise DimensionMismatch(f"Размерности выборок различаются: {x.shape[1]} и {y.shape[1]}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("Выборки содержат нечисловые значения")
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'y', y)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]

    def pooled(self):
        """Объединенная выборка [X; Y] формы 2n×d."""
        return np.vstack([self.x, self.y])

    def subset(self, idx_x, idx_y=None):
        """Подвыборка по индексам (для X и, при необходимости, отдельно для Y)."""
        idx_y = idx_x if idx_y is None else idx_y
        return SamplePair(self.x[idx_x], self.y[idx_y])


def subsample_to_min(x, y, rng):
    """Уменьшает бóльшую выборку до размера меньшей случайным подвыбором.

    Args:
        x (numpy.ndarray): Наблюдения из P.
        y (numpy.ndarray): Наблюдения из Q.
        rng (numpy.random.Generator): Генератор для выбора индексов.

    Returns:
        SamplePair: Выборки одинакового размера.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    m = min(x.shape[0], y.shape[0])
    if x.shape[0] > m:
        x = x[np.sort(rng.choice(x.shape[0], size=m, replace=False))]
    if y.shape[0] > m:
        y = y[np.sort(rng.choice(y.shape[0], size=m, replace=False))]
    return SamplePair(x, y)
