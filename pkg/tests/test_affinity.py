import math

import numpy as np
import pytest

from sdpcluster.affinity import (
    AffinityFn,
    build_matrix,
    default_h0,
    evaluate,
    expected_matrix,
    lipschitz_constant,
)
from sdpcluster.gmm import GaussianMixtureSpec, sample


def grid_max_slope(fn, hmax, steps=200_000):
    """Numeric oracle for the Lipschitz constant: max |f'| on a fine grid."""
    h = np.linspace(0.0, hmax, steps)
    vals = evaluate(fn, h)
    return float(np.max(np.abs(np.diff(vals) / np.diff(h))))


class TestEvaluate:
    def test_gaussian_values(self):
        fn = AffinityFn("gaussian", h0=2.0)
        assert evaluate(fn, 0.0) == pytest.approx(1.0)
        assert evaluate(fn, 2.0) == pytest.approx(math.exp(-1.0))
        assert evaluate(fn, 4.0) == pytest.approx(math.exp(-4.0))

    def test_range_and_monotone(self):
        h = np.linspace(0.0, 50.0, 1000)
        for fn in (
            AffinityFn("gaussian", 1.5),
            AffinityFn("power_exponential", 1.5, 1.7),
            AffinityFn("rational", 1.5, 2.0),
            AffinityFn("logistic", 1.5, 0.8),
        ):
            vals = evaluate(fn, h)
            assert np.all(vals >= 0) and np.all(vals <= 1)
            assert np.all(np.diff(vals) <= 1e-15)

    def test_rejects_negative_distance(self):
        with pytest.raises(ValueError):
            evaluate(AffinityFn("gaussian", 1.0), -0.1)

    def test_callable(self):
        fn = AffinityFn("gaussian", 1.0)
        assert fn(1.0) == pytest.approx(math.exp(-1.0))

    def test_validation(self):
        with pytest.raises(ValueError):
            AffinityFn("nope", 1.0)
        with pytest.raises(ValueError):
            AffinityFn("gaussian", 0.0)
        with pytest.raises(ValueError):
            AffinityFn("rational", 1.0)  # missing shape
        with pytest.raises(ValueError):
            AffinityFn("gaussian", 1.0, 2.0)  # stray shape


class TestLipschitzConstant:
    def test_gaussian_matches_grid_oracle(self):
        fn = AffinityFn("gaussian", 1.0)
        oracle = grid_max_slope(fn, 5.0)
        assert lipschitz_constant(fn) == pytest.approx(oracle, rel=1e-4)
        assert lipschitz_constant(fn) == pytest.approx(0.857763884960707, rel=1e-12)

    def test_gaussian_h0_scaling(self):
        assert lipschitz_constant(AffinityFn("gaussian", 2.0)) == pytest.approx(
            math.sqrt(2 / math.e) / 2
        )

    def test_rational_is_slope_bound(self):
        fn = AffinityFn("rational", 1.0, 1.0)
        assert lipschitz_constant(fn) == pytest.approx(1.0)
        assert grid_max_slope(fn, 5.0) <= 1.0 + 1e-9

    def test_power_exponential(self):
        fn = AffinityFn("power_exponential", 1.0, 2.0)
        # a = 2 coincides with the gaussian at h0 = 1
        assert lipschitz_constant(fn) == pytest.approx(math.sqrt(2 / math.e))
        fn3 = AffinityFn("power_exponential", 1.3, 3.0)
        assert lipschitz_constant(fn3) == pytest.approx(grid_max_slope(fn3, 6.0), rel=1e-3)
        assert lipschitz_constant(AffinityFn("power_exponential", 1.0, 1.0)) == pytest.approx(1.0)

    def test_power_exponential_below_one_rejected(self):
        with pytest.raises(ValueError):
            lipschitz_constant(AffinityFn("power_exponential", 1.0, 0.5))

    def test_lipschitz_property_random_pairs(self):
        rng = np.random.default_rng(0)
        for fn in (
            AffinityFn("gaussian", 0.7),
            AffinityFn("power_exponential", 1.1, 2.5),
            AffinityFn("rational", 0.9, 1.5),
            AffinityFn("logistic", 1.2, 1.1),
        ):
            ell = lipschitz_constant(fn)
            h1 = rng.uniform(0, 10, 10_000)
            h2 = rng.uniform(0, 10, 10_000)
            lhs = np.abs(evaluate(fn, h1) - evaluate(fn, h2))
            assert np.all(lhs <= ell * np.abs(h1 - h2) + 1e-12)


class TestDefaultH0:
    def test_two_point_example(self):
        assert default_h0(np.array([[3.0, 0.0], [0.0, 4.0]])) == pytest.approx(2.0)

    def test_single_point(self):
        assert default_h0(np.array([[1.0]])) == pytest.approx(0.5)

    def test_scaling_homogeneity(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((20, 3))
        assert default_h0(4.0 * x) == pytest.approx(4.0 * default_h0(x))

    def test_zero_data_rejected(self):
        with pytest.raises(ValueError):
            default_h0(np.zeros((5, 2)))


class TestBuildMatrix:
    def test_identical_points(self):
        a = build_matrix(np.zeros((2, 3)) + 1.5, AffinityFn("gaussian", 1.0))
        assert np.allclose(a, 1.0)

    def test_line_of_points(self):
        h0 = 2.0
        pts = np.array([[0.0], [h0], [2 * h0]])
        a = build_matrix(pts, AffinityFn("gaussian", h0))
        assert a[0, 1] == pytest.approx(math.exp(-1))
        assert a[1, 2] == pytest.approx(math.exp(-1))
        assert a[0, 2] == pytest.approx(math.exp(-4))

    def test_exact_symmetry_unit_diagonal(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((40, 5))
        a = build_matrix(x, AffinityFn("gaussian", 1.3))
        assert np.array_equal(a, a.T)
        assert np.allclose(np.diag(a), 1.0)
        assert np.all((a >= 0) & (a <= 1))

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((15, 4))
        perm = rng.permutation(15)
        a = build_matrix(x, AffinityFn("gaussian", 1.0))
        b = build_matrix(x[perm], AffinityFn("gaussian", 1.0))
        assert np.allclose(b, a[np.ix_(perm, perm)], atol=1e-12)


class TestExpectedMatrix:
    def test_single_zero_variance_cluster(self):
        spec = GaussianMixtureSpec(dim=2, clusters=[((0.0, 0.0), np.zeros((2, 2)), 4)])
        assert np.allclose(expected_matrix(spec, 1.0), 1.0)

    def test_block_structure(self):
        spec = GaussianMixtureSpec(
            dim=1,
            clusters=[((0.0,), [[1.0]], 2), ((3.0,), [[0.5]], 3)],
        )
        a = expected_matrix(spec, 2.0)
        assert np.array_equal(a, a.T)
        # off-diagonal entries constant within each block
        assert a[0, 1] == a[1, 0]
        assert len({round(a[i, j], 14) for i in range(2) for j in range(2, 5)}) == 1
        assert len({round(a[i, j], 14) for i in range(2, 5) for j in range(2, 5) if i != j}) == 1
        assert np.allclose(np.diag(a), 1.0)

    def test_monte_carlo_entrywise(self):
        spec = GaussianMixtureSpec(
            dim=2,
            clusters=[((0.0, 0.0), 0.5 * np.eye(2), 3), ((2.0, 1.0), [[1.0, 0.3], [0.3, 0.8]], 3)],
        )
        h0 = 1.7
        fn = AffinityFn("gaussian", h0)
        target = expected_matrix(spec, h0)
        trials = 2000
        acc = np.zeros((6, 6))
        acc2 = np.zeros((6, 6))
        for t in range(trials):
            a = build_matrix(sample(spec, seed=t).points, fn)
            acc += a
            acc2 += a * a
        mean = acc / trials
        se = np.sqrt(np.maximum(acc2 / trials - mean**2, 0.0) / trials)
        off = ~np.eye(6, dtype=bool)
        assert np.all(np.abs(mean - target)[off] <= 4 * se[off] + 1e-9)
