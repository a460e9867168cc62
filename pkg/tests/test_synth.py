import os
import sys

import numpy as np
import pytest

# Корректировка пути Python для возможности импорта модулей из структуры проекта.
project_root_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if project_root_path not in sys.path:
    sys.path.insert(0, project_root_path)

from core.exceptions import WrongKind
from data.synth import ProblemKind, ToyProblem, blobs_density_params, sample_problem


class TestSampleProblem:
    """Набор тестов для генераторов синтетических задач."""

    def test_deterministic(self):
        problem = ToyProblem(ProblemKind.GVD, d=3)
        first = sample_problem(problem, 50, seed=4)
        second = sample_problem(problem, 50, seed=4)
        np.testing.assert_array_equal(first.x, second.x)
        np.testing.assert_array_equal(first.y, second.y)

    def test_different_seeds(self):
        problem = ToyProblem(ProblemKind.SG, d=2)
        assert not np.array_equal(sample_problem(problem, 20, seed=1).x, sample_problem(problem, 20, seed=2).x)

    def test_mean_difference(self):
        """GMD: x̄ − ȳ ≈ (−1, 0, ..., 0)."""
        n = 4000
        sample = sample_problem(ToyProblem(ProblemKind.GMD, d=4), n, seed=0)
        diff = sample.x.mean(axis=0) - sample.y.mean(axis=0)
        np.testing.assert_allclose(diff, [-1.0, 0.0, 0.0, 0.0], atol=5 / np.sqrt(n))

    def test_variance_difference(self):
        """GVD: дисперсия первой координаты Y ≈ 2, остальных ≈ 1."""
        sample = sample_problem(ToyProblem(ProblemKind.GVD, d=3), 20000, seed=0)
        np.testing.assert_allclose(sample.y.var(axis=0), [2.0, 1.0, 1.0], atol=0.1)
        np.testing.assert_allclose(sample.x.var(axis=0), [1.0, 1.0, 1.0], atol=0.1)

    def test_blobs_dimension(self):
        problem = ToyProblem('blobs', d=10)
        assert problem.d == 2
        assert sample_problem(problem, 30, seed=0).d == 2

    def test_blobs_common_centroid(self):
        problem = ToyProblem(ProblemKind.BLOBS)
        sample = sample_problem(problem, 20000, seed=3)
        centroid = np.full(2, 1.5 * problem.spacing)
        np.testing.assert_allclose(sample.x.mean(axis=0), centroid, atol=0.2)
        np.testing.assert_allclose(sample.y.mean(axis=0), centroid, atol=0.2)

    def test_invalid_size(self):
        with pytest.raises(ValueError):
            sample_problem(ToyProblem(ProblemKind.SG, d=1), 0, seed=0)


class TestBlobsParams:
    """Набор тестов для параметров смеси Blobs."""

    def test_lattice(self):
        params = blobs_density_params(ToyProblem(ProblemKind.BLOBS, spacing=5.0))
        means = np.array([m for m, _ in params['p']])
        assert len(params['p']) == 16
        assert sorted(set(means[:, 0])) == [0.0, 5.0, 10.0, 15.0]

    def test_q_components_isotropic(self):
        params = blobs_density_params(ToyProblem(ProblemKind.BLOBS))
        for _, cov in params['q']:
            np.testing.assert_array_equal(cov, np.eye(2))

    def test_p_eigenvalue_ratio(self):
        params = blobs_density_params(ToyProblem(ProblemKind.BLOBS, stretch=2.0))
        eigenvalues = np.linalg.eigvalsh(params['p'][0][1])
        assert eigenvalues[1] / eigenvalues[0] == pytest.approx(2.0)

    def test_wrong_kind(self):
        with pytest.raises(WrongKind):
            blobs_density_params(ToyProblem(ProblemKind.GMD, d=2))
