import os
import sys

import numpy as np
import pytest

# Корректировка пути Python для возможности импорта модулей из структуры проекта.
project_root_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if project_root_path not in sys.path:
    sys.path.insert(0, project_root_path)

from core.exceptions import DimensionMismatch, SizeMismatch
from core.samples import SamplePair, subsample_to_min
from utils.rng import STREAM_DATA, STREAM_SPLIT, stream, trial_seed


class TestSamplePair:
    """Набор тестов для пары выборок."""

    def test_vector_input_becomes_matrix(self):
        pair = SamplePair(np.array([[1.0], [2.0]]), np.array([[3.0], [4.0]]))
        assert pair.n == 2
        assert pair.d == 1

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatch):
            SamplePair(np.zeros((3, 2)), np.zeros((4, 2)))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            SamplePair(np.zeros((3, 2)), np.zeros((3, 1)))

    def test_non_finite_values(self):
        x = np.zeros((2, 2))
        x[0, 0] = np.nan
        with pytest.raises(ValueError):
            SamplePair(x, np.zeros((2, 2)))

    def test_pooled(self):
        x, y = np.ones((2, 2)), np.zeros((2, 2))
        np.testing.assert_array_equal(SamplePair(x, y).pooled(), np.vstack([x, y]))

    def test_subset_with_separate_indices(self):
        pair = SamplePair(np.arange(4.0)[:, None], np.arange(10.0, 14.0)[:, None])
        sub = pair.subset(np.array([0, 1]), np.array([3, 2]))
        np.testing.assert_array_equal(sub.x.ravel(), [0.0, 1.0])
        np.testing.assert_array_equal(sub.y.ravel(), [13.0, 12.0])


class TestSubsampleToMin:
    """Набор тестов для выравнивания размеров выборок."""

    def test_larger_sample_is_reduced(self):
        x = np.arange(10.0)[:, None]
        y = np.arange(4.0)[:, None]
        pair = subsample_to_min(x, y, stream(1))
        assert pair.n == 4
        assert set(pair.x.ravel()).issubset(set(x.ravel()))
        np.testing.assert_array_equal(pair.y, y)

    def test_equal_sizes_unchanged(self):
        x = np.arange(6.0).reshape(3, 2)
        pair = subsample_to_min(x, x + 1, stream(1))
        np.testing.assert_array_equal(pair.x, x)


class TestRngStreams:
    """Набор тестов для воспроизводимых потоков случайных чисел."""

    def test_same_keys_same_draws(self):
        np.testing.assert_array_equal(stream(3, 1, 2).standard_normal(5), stream(3, 1, 2).standard_normal(5))

    def test_different_keys_differ(self):
        assert not np.array_equal(stream(3, 1).standard_normal(5), stream(3, 2).standard_normal(5))

    def test_prefix_keys_differ(self):
        """Кортеж ключей и его продолжение нулем задают разные потоки."""
        assert not np.array_equal(stream(3, 1).standard_normal(5), stream(3, 1, 0).standard_normal(5))
        assert not np.array_equal(stream(3, 2).standard_normal(5), stream(3, 2, 1).standard_normal(5))

    def test_data_streams_separate_from_split(self):
        """Поток выборки Y не совпадает с потоком перестановки при разбиении."""
        data_y = stream(9, STREAM_DATA, 1).standard_normal(5)
        split_x = stream(9, STREAM_SPLIT, 0).standard_normal(5)
        assert not np.array_equal(data_y, split_x)

    def test_trial_seed(self):
        seed = trial_seed(0, 5)
        assert seed == trial_seed(0, 5)
        assert seed != trial_seed(0, 6)
        assert 0 <= seed < 2 ** 32
