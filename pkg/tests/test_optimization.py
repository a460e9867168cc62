import math
import os
import sys

import numpy as np
import pytest

# Корректировка пути Python для возможности импорта модулей из структуры проекта.
project_root_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if project_root_path not in sys.path:
    sys.path.insert(0, project_root_path)

from core.exceptions import TooFewSamples
from core.kernels import FeatureMapKind, GaussianKernel, TestParams, min_pairwise_distance
from core.optimization import (
    OptimConfig,
    gradient,
    grid_locations,
    init_locations,
    median_heuristic,
    objective,
    objective_contour,
    optimize_full,
    optimize_grid,
    sigma_grid,
    split,
)
from core.samples import SamplePair
from data.synth import ProblemKind, ToyProblem, sample_problem


@pytest.fixture
def gmd_sample():
    """Фикстура: задача GMD, d = 2, n = 400."""
    return sample_problem(ToyProblem(ProblemKind.GMD, d=2), 400, seed=1)


@pytest.fixture
def train(gmd_sample):
    return split(gmd_sample, seed=2).train


def numeric_gradient(kind, theta, train, gamma, h=1e-5):
    """Центральные разности по (точки построчно, log σ)."""
    points = theta.locations.points
    log_sigma = math.log(theta.kernel.sigma)
    base = np.concatenate([points.ravel(), [log_sigma]])

    def value(vec):
        candidate = TestParams.from_arrays(vec[:-1].reshape(points.shape), math.exp(vec[-1]), min_separation=0.0)
        return objective(kind, candidate, train, gamma)

    grad = np.zeros_like(base)
    for i in range(base.size):
        step = np.zeros_like(base)
        step[i] = h
        grad[i] = (value(base + step) - value(base - step)) / (2 * h)
    return grad


class TestSplit:
    """Набор тестов для разбиения на обучающую и тестовую половины."""

    def test_halves_are_disjoint(self, gmd_sample):
        halves = split(gmd_sample, seed=3)
        assert halves.is_disjoint()
        assert halves.train.n == 200
        assert halves.test.n == 200

    def test_odd_size(self):
        rng = np.random.default_rng(0)
        halves = split(SamplePair(rng.standard_normal((7, 1)), rng.standard_normal((7, 1))), seed=0)
        assert halves.test.n == 3
        assert halves.train.n == 3
        assert halves.is_disjoint()

    def test_deterministic(self, gmd_sample):
        first = split(gmd_sample, seed=9)
        second = split(gmd_sample, seed=9)
        np.testing.assert_array_equal(first.test_index_x, second.test_index_x)
        np.testing.assert_array_equal(first.train.y, second.train.y)

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            split(SamplePair(np.zeros((3, 1)), np.ones((3, 1))), seed=0)


class TestWidthHeuristics:
    """Набор тестов для медианной эвристики и сетки ширин."""

    def test_median_heuristic(self):
        """Попарные расстояния {1,1,1,2,2,3}: медиана 1.5."""
        pair = SamplePair(np.array([[0.0], [1.0]]), np.array([[2.0], [3.0]]))
        assert median_heuristic(pair) == pytest.approx(1.5)

    def test_constant_data_fallback(self):
        pair = SamplePair(np.zeros((3, 2)), np.zeros((3, 2)))
        assert median_heuristic(pair) == 1.0

    def test_grid(self):
        pair = SamplePair(np.array([[0.0], [1.0]]), np.array([[2.0], [3.0]]))
        grid = sigma_grid(pair, -1, 1)
        assert grid == pytest.approx((0.75, 1.5, 3.0))


class TestGradient:
    """Набор тестов для аналитического градиента λ̂^tr."""

    @pytest.mark.parametrize('kind', [FeatureMapKind.ME, FeatureMapKind.SCF])
    @pytest.mark.parametrize('seed', range(100))
    def test_matches_central_differences(self, kind, seed):
        rng = np.random.default_rng(seed)
        d, J = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        train = SamplePair(rng.standard_normal((40, d)), rng.standard_normal((40, d)) * 1.3 + 0.4)
        theta = TestParams.from_arrays(rng.standard_normal((J, d)), float(rng.uniform(0.7, 2.0)))
        analytic = gradient(kind, theta, train, gamma=1e-3)
        numeric = numeric_gradient(kind, theta, train, gamma=1e-3)
        assert analytic.shape == (J * d + 1,)
        assert np.linalg.norm(analytic - numeric) <= 1e-4 * max(np.linalg.norm(numeric), 1e-2)

    def test_zero_gradient_for_identical_samples(self):
        x = np.random.default_rng(0).standard_normal((10, 2))
        theta = TestParams.from_arrays([[0.0, 0.0]], 1.0)
        np.testing.assert_array_equal(gradient(FeatureMapKind.ME, theta, SamplePair(x, x)), np.zeros(3))

    @pytest.mark.parametrize('kind', [FeatureMapKind.ME, FeatureMapKind.SCF])
    def test_zero_gradient_across_symmetry_axis(self, kind):
        """Выборки симметричны относительно оси u₂ = 0, точки лежат на оси:
        производные по второй координате точек равны нулю."""
        rng = np.random.default_rng(12)
        reflect = np.diag([1.0, -1.0])
        a = rng.standard_normal((30, 2))
        b = rng.standard_normal((30, 2)) * 1.2 + np.array([0.5, 0.0])
        train = SamplePair(np.vstack([a, a @ reflect]), np.vstack([b, b @ reflect]))
        theta = TestParams.from_arrays([[-0.5, 0.0], [1.0, 0.0]], 1.1)
        grad = gradient(kind, theta, train, gamma=1e-4)
        assert np.all(np.abs(grad[[1, 3]]) <= 1e-8 * max(1.0, np.linalg.norm(grad)))
        assert np.linalg.norm(grad[[0, 2, 4]]) > 0

    @pytest.mark.parametrize('kind', [FeatureMapKind.ME, FeatureMapKind.SCF])
    def test_scaling_orbit(self, kind):
        """Растяжение данных в c раз вместе с σ (и точками для ME, частотами в 1/c для SCF)
        не меняет λ̂; производная вдоль этой орбиты нулевая, поэтому градиент по
        точкам масштабируется в 1/c (ME) или c (SCF), а по log σ не меняется."""
        rng = np.random.default_rng(13)
        c = 2.5
        train = SamplePair(rng.standard_normal((60, 2)), rng.standard_normal((60, 2)) + np.array([0.7, 0.0]))
        points = rng.standard_normal((2, 2))
        theta = TestParams.from_arrays(points, 1.3)
        point_factor = c if kind is FeatureMapKind.ME else 1.0 / c
        scaled_train = SamplePair(train.x * c, train.y * c)
        scaled_theta = TestParams.from_arrays(points * point_factor, 1.3 * c)

        base_value = objective(kind, theta, train, gamma=1e-4)
        assert objective(kind, scaled_theta, scaled_train, gamma=1e-4) == pytest.approx(base_value, rel=1e-8)

        base_grad = gradient(kind, theta, train, gamma=1e-4)
        scaled_grad = gradient(kind, scaled_theta, scaled_train, gamma=1e-4)
        np.testing.assert_allclose(scaled_grad[:-1], base_grad[:-1] / point_factor, rtol=1e-6, atol=1e-10)
        assert scaled_grad[-1] == pytest.approx(base_grad[-1], rel=1e-6, abs=1e-10)


class TestInitialization:
    """Набор тестов для начальных тестовых точек."""

    @pytest.mark.parametrize('kind', [FeatureMapKind.ME, FeatureMapKind.SCF])
    def test_count_and_separation(self, kind, train):
        locations = init_locations(kind, train, 5, seed=4)
        assert locations.J == 5
        assert locations.d == 2
        assert min_pairwise_distance(locations.points) >= 1e-6

    def test_random_points_come_from_data(self, train):
        locations = init_locations(FeatureMapKind.ME, train, 3, seed=4, method='random_points')
        pooled = train.pooled()
        for point in locations.points:
            assert np.any(np.all(pooled == point, axis=1))

    def test_deterministic(self, train):
        first = init_locations(FeatureMapKind.SCF, train, 3, seed=8)
        second = init_locations(FeatureMapKind.SCF, train, 3, seed=8)
        np.testing.assert_array_equal(first.points, second.points)

    def test_grid_locations_follow_pooled_normal(self, train):
        """Для ME точки поиска по сетке берутся из одного нормального закона объединенной выборки."""
        locations = grid_locations(FeatureMapKind.ME, train, 4000, seed=3, min_separation=0.0)
        pooled = train.pooled()
        np.testing.assert_allclose(locations.points.mean(axis=0), pooled.mean(axis=0), atol=0.1)
        np.testing.assert_allclose(np.cov(locations.points, rowvar=False), np.cov(pooled, rowvar=False), atol=0.15)

    def test_grid_locations_for_scf_match_init(self, train):
        first = grid_locations(FeatureMapKind.SCF, train, 3, seed=8)
        np.testing.assert_array_equal(first.points, init_locations(FeatureMapKind.SCF, train, 3, seed=8).points)

    def test_grid_locations_separated(self, train):
        locations = grid_locations(FeatureMapKind.ME, train, 5, seed=4)
        assert locations.J == 5
        assert min_pairwise_distance(locations.points) >= 1e-6


class TestOptimizers:
    """Набор тестов для поиска по сетке и градиентного подъема."""

    def test_grid_picks_from_grid(self, train):
        config = OptimConfig(sigma_grid=(0.5, 1.0, 2.0), seed=1)
        params = optimize_grid(FeatureMapKind.ME, train, 2, config)
        assert params.kernel.sigma in (0.5, 1.0, 2.0)
        assert params.locations.J == 2

    @pytest.mark.parametrize('kind', [FeatureMapKind.ME, FeatureMapKind.SCF])
    def test_full_improves_objective(self, kind, train):
        trace = optimize_full(kind, train, 3, OptimConfig(max_iters=40, seed=5))
        assert len(trace.objectives) <= 40
        assert trace.final_objective >= trace.initial_objective
        assert trace.best_objectives == sorted(trace.best_objectives)
        assert min_pairwise_distance(trace.params.locations.points) >= 1e-6

    def test_full_beats_its_starting_grid_choice(self, train):
        """Полная оптимизация не хуже лучшей ширины сетки при своих начальных точках."""
        config = OptimConfig(max_iters=60, seed=6)
        start = init_locations(FeatureMapKind.ME, train, 3, config.seed)
        best_on_grid = max(
            objective(FeatureMapKind.ME, TestParams(start, GaussianKernel(s)), train, config.gamma)
            for s in sigma_grid(train)
        )
        trace = optimize_full(FeatureMapKind.ME, train, 3, config)
        assert trace.initial_objective == pytest.approx(best_on_grid)
        assert trace.final_objective >= best_on_grid * (1 - 1e-9)

    @pytest.mark.parametrize('kind', [FeatureMapKind.ME, FeatureMapKind.SCF])
    def test_test_half_untouched(self, kind, gmd_sample):
        """Оптимизация на обучающей половине не меняет байты тестовой половины."""
        halves = split(gmd_sample, seed=7)
        before = (halves.test.x.tobytes(), halves.test.y.tobytes())
        optimize_full(kind, halves.train, 3, OptimConfig(max_iters=30, seed=7))
        assert (halves.test.x.tobytes(), halves.test.y.tobytes()) == before

    def test_second_location_in_other_region_beats_overlap(self):
        """Вторая точка в другой области различия дает больший λ̂^tr, чем точка рядом с первой."""
        sample = sample_problem(ToyProblem(ProblemKind.GMD, d=2), 2000, seed=21)
        first = [-1.0, 0.0]
        spread = TestParams.from_arrays([first, [2.0, 0.0]], 1.0)
        overlap = TestParams.from_arrays([first, [-1.0, 0.05]], 1.0)
        assert objective(FeatureMapKind.ME, spread, sample) > objective(FeatureMapKind.ME, overlap, sample)

    def test_single_iteration_returns_start(self, train):
        trace = optimize_full(FeatureMapKind.ME, train, 2, OptimConfig(max_iters=1, seed=2))
        assert len(trace.objectives) == 1

    @pytest.mark.parametrize('kwargs', [
        {'max_iters': 0},
        {'step_size': -1.0},
        {'sigma_grid': ()},
        {'init': 'uniform'},
    ])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ValueError):
            OptimConfig(**kwargs)


class TestContour:
    """Набор тестов для карты целевой функции."""

    def test_values_follow_objective(self, train):
        theta = TestParams.from_arrays([[0.0, 0.0], [1.0, 1.0]], 1.0)
        grid_points = np.array([[1.0, 1.0], [2.0, -1.0]])
        values = objective_contour(FeatureMapKind.ME, theta, train, grid_points, index=1)
        assert values.shape == (2,)
        assert values[0] == pytest.approx(objective(FeatureMapKind.ME, theta, train), rel=1e-10)
