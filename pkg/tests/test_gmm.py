import math

import numpy as np
import pytest

from sdpcluster.gmm import (
    GaussianMixtureSpec,
    check_separation_1d,
    expected_affinity,
    gaussian_quadratic_laplace,
    sample,
    separation_report,
)


def two_cluster_1d(mu1, mu2, s1sq, s2sq, sizes=(3, 4)):
    return GaussianMixtureSpec(
        dim=1,
        clusters=[((mu1,), [[s1sq]], sizes[0]), ((mu2,), [[s2sq]], sizes[1])],
    )


def remark_formula_1d(mu1, mu2, s1sq, s2sq, h0):
    """Cross-cluster expected affinity in one dimension, written directly."""
    s = s1sq + s2sq
    return math.exp(-((mu2 - mu1) ** 2) / (h0**2 + 2 * s)) / math.sqrt(1 + 2 * s / h0**2)


class TestSpecValidation:
    def test_rejects_asymmetric_cov(self):
        with pytest.raises(ValueError, match="symmetric"):
            GaussianMixtureSpec(dim=2, clusters=[((0.0, 0.0), [[1.0, 0.5], [0.0, 1.0]], 3)])

    def test_rejects_indefinite_cov(self):
        with pytest.raises(ValueError, match="eigenvalue"):
            GaussianMixtureSpec(dim=1, clusters=[((0.0,), [[-0.5]], 3)])

    def test_accepts_numerically_psd(self):
        spec = GaussianMixtureSpec(dim=1, clusters=[((0.0,), [[-5e-11]], 3)])
        assert spec.total_size == 3

    def test_rejects_tiny_total(self):
        with pytest.raises(ValueError, match="at least 2"):
            GaussianMixtureSpec(dim=1, clusters=[((0.0,), [[1.0]], 1)])

    def test_rejects_bad_size(self):
        with pytest.raises(ValueError):
            GaussianMixtureSpec(dim=1, clusters=[((0.0,), [[1.0]], 0), ((1.0,), [[1.0]], 3)])

    def test_labels(self):
        spec = two_cluster_1d(0.0, 1.0, 1.0, 1.0, sizes=(2, 3))
        assert spec.labels().tolist() == [1, 1, 2, 2, 2]


class TestSample:
    def test_degenerate_covariance(self):
        spec = GaussianMixtureSpec(dim=2, clusters=[((0.0, 0.0), np.zeros((2, 2)), 3)])
        data = sample(spec, seed=5)
        assert np.array_equal(data.points, np.zeros((3, 2)))
        assert data.labels.tolist() == [1, 1, 1]

    def test_label_ordering(self):
        spec = two_cluster_1d(0.0, 10.0, 1.0, 1.0, sizes=(2, 3))
        data = sample(spec, seed=0)
        assert data.labels.tolist() == [1, 1, 2, 2, 2]

    def test_deterministic(self):
        spec = two_cluster_1d(0.0, 1.0, 1.0, 2.0)
        a = sample(spec, seed=42)
        b = sample(spec, seed=42)
        assert np.array_equal(a.points, b.points)
        assert not np.array_equal(a.points, sample(spec, seed=43).points)

    def test_law_of_large_numbers(self):
        n = 100_000
        spec = GaussianMixtureSpec(dim=1, clusters=[((0.0,), [[1.0]], n)])
        pts = sample(spec, seed=7).points.ravel()
        assert abs(pts.mean()) <= 4 / math.sqrt(n)
        assert abs(pts.var() - 1.0) <= 0.05

    def test_covariance_via_eigendecomposition(self):
        # correlated covariance reproduced within sampling error
        cov = np.array([[2.0, 1.2], [1.2, 1.5]])
        spec = GaussianMixtureSpec(dim=2, clusters=[((0.0, 0.0), cov, 50_000)])
        pts = sample(spec, seed=3).points
        emp = np.cov(pts, rowvar=False)
        assert np.max(np.abs(emp - cov)) <= 0.1


class TestGaussianQuadraticLaplace:
    def test_t_zero(self):
        assert gaussian_quadratic_laplace(np.zeros(4), np.eye(4), 0.0) == pytest.approx(1.0)

    def test_scalar_case(self):
        assert gaussian_quadratic_laplace([0.0], [[1.0]], -0.5) == pytest.approx(1 / math.sqrt(2))

    def test_rejects_positive_t(self):
        with pytest.raises(ValueError):
            gaussian_quadratic_laplace([0.0], [[1.0]], 0.1)

    def test_monte_carlo_oracle(self):
        t = -0.3
        rng = np.random.default_rng(11)
        draws = rng.normal(1.0, 1.0, 1_000_000)
        vals = np.exp(t * draws**2)
        mean = vals.mean()
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        closed = gaussian_quadratic_laplace([1.0], [[1.0]], t)
        assert abs(closed - mean) <= 4 * se

    def test_noncentral_reduces_at_zero_mean(self):
        sigma = np.array([[1.3, 0.4], [0.4, 0.9]])
        w = np.linalg.eigvalsh(sigma)
        t = -0.25
        expected = float(np.prod((1 - 2 * t * w) ** -0.5))
        assert gaussian_quadratic_laplace(np.zeros(2), sigma, t) == pytest.approx(expected)


class TestExpectedAffinity:
    def test_same_cluster_zero_variance(self):
        spec = two_cluster_1d(0.0, 1.0, 0.0, 0.0)
        assert expected_affinity(spec, 0, 0, h0=1.0) == pytest.approx(1.0)

    def test_same_cluster_half_bandwidth(self):
        h0 = 2.0
        spec = two_cluster_1d(0.0, 1.0, (h0 / 2) ** 2, 0.0)
        assert expected_affinity(spec, 0, 0, h0) == pytest.approx(1 / math.sqrt(2))

    def test_cross_zero_variance(self):
        mu1, mu2, h0 = 0.5, 3.0, 1.7
        spec = two_cluster_1d(mu1, mu2, 0.0, 0.0)
        assert expected_affinity(spec, 0, 1, h0) == pytest.approx(
            math.exp(-((mu2 - mu1) ** 2) / h0**2)
        )

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            d = int(rng.integers(1, 6))
            k = int(rng.integers(1, 4))
            clusters = []
            for _ in range(k):
                a = rng.standard_normal((d, d))
                clusters.append((rng.normal(0, 2, d), a.T @ a, int(rng.integers(2, 5))))
            spec = GaussianMixtureSpec(dim=d, clusters=clusters)
            h0 = float(rng.uniform(0.5, 3.0))
            for i in range(k):
                for j in range(k):
                    val = expected_affinity(spec, i, j, h0)
                    assert 0.0 < val <= 1.0
                    assert val == pytest.approx(expected_affinity(spec, j, i, h0))

    def test_matches_laplace_transform(self):
        # cross-cluster value is the transform of the difference vector
        from sdpcluster.gmm import gaussian_quadratic_laplace

        rng = np.random.default_rng(5)
        d = 3
        a1, a2 = rng.standard_normal((d, d)), rng.standard_normal((d, d))
        mu1, mu2 = rng.normal(0, 1, d), rng.normal(0, 1, d)
        spec = GaussianMixtureSpec(
            dim=d, clusters=[(mu1, a1.T @ a1, 2), (mu2, a2.T @ a2, 2)]
        )
        h0 = 1.9
        direct = expected_affinity(spec, 0, 1, h0)
        via_transform = gaussian_quadratic_laplace(mu1 - mu2, a1.T @ a1 + a2.T @ a2, -1 / h0**2)
        assert direct == pytest.approx(via_transform, rel=1e-12)

    def test_remark_formula_matches_general_1d(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            mu1, mu2 = rng.normal(0, 3, 2)
            s1sq, s2sq = rng.uniform(0, 4, 2)
            h0 = float(rng.uniform(0.3, 3.0))
            spec = two_cluster_1d(mu1, mu2, s1sq, s2sq)
            assert expected_affinity(spec, 0, 1, h0) == pytest.approx(
                remark_formula_1d(mu1, mu2, s1sq, s2sq, h0), rel=1e-12
            )

    def test_index_range(self):
        spec = two_cluster_1d(0.0, 1.0, 1.0, 1.0)
        with pytest.raises(IndexError):
            expected_affinity(spec, 0, 2, 1.0)


class TestSeparationReport:
    def test_single_cluster_convention(self):
        spec = GaussianMixtureSpec(dim=1, clusters=[((0.0,), [[1.0]], 5)])
        rep = separation_report(spec, h0=1.0, ell=1.0)
        assert rep.q == 0.0
        assert rep.separated
        assert math.isfinite(rep.t0)

    def test_zero_variance_two_clusters(self):
        h0 = 1.5
        spec = two_cluster_1d(0.0, 2.0, 0.0, 0.0)
        rep = separation_report(spec, h0, ell=1.0)
        assert rep.p == pytest.approx(1.0)
        assert rep.q == pytest.approx(math.exp(-4.0 / h0**2))
        assert rep.separated

    def test_sigma_weighting(self):
        spec = GaussianMixtureSpec(
            dim=1, clusters=[((0.0,), [[1.0]], 2), ((5.0,), [[4.0]], 3)]
        )
        rep = separation_report(spec, h0=1.0, ell=1.0)
        assert rep.sigma**2 == pytest.approx((2 * 1.0 + 3 * 4.0) / 5)

    def test_constants_formulas(self):
        spec = two_cluster_1d(0.0, 6.0, 0.5, 0.5)
        ell = 0.7
        rep = separation_report(spec, h0=2.0, ell=ell)
        gap = rep.p - rep.q
        assert rep.kg == 1.8
        assert rep.t0 == pytest.approx(8 * math.sqrt(2 * math.log(2)) * 1.8 * rep.sigma * ell / gap)
        assert rep.c == pytest.approx(16 * math.sqrt(2) * 1.8 * ell * rep.sigma / gap)

    def test_not_separated_sentinels(self):
        spec = two_cluster_1d(0.0, 0.0, 1.0, 1.0)  # identical clusters
        rep = separation_report(spec, h0=1.0, ell=1.0)
        assert not rep.separated
        assert rep.t0 == math.inf and rep.c == math.inf

    def test_t0_decreases_with_separation(self):
        h0, ell = 1.3, 0.9
        t0s = []
        for mu2 in (1.0, 2.0, 4.0, 8.0):
            rep = separation_report(two_cluster_1d(0.0, mu2, 0.4, 0.7), h0, ell)
            t0s.append(rep.t0)
        assert all(a > b for a, b in zip(t0s, t0s[1:]))


class TestCheckSeparation1d:
    def test_equal_variances_need_distinct_means(self):
        assert check_separation_1d(0.0, 0.5, 1.0, 1.0, h0=1.0)
        assert not check_separation_1d(0.0, 0.0, 1.0, 1.0, h0=1.0)

    def test_equal_means_distinct_variances(self):
        assert not check_separation_1d(0.0, 0.0, 1.0, 2.0, h0=1.0)

    def test_agrees_with_separation_report(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            mu1, mu2 = rng.normal(0, 3, 2)
            s1sq, s2sq = rng.uniform(0, 4, 2)
            h0 = float(rng.uniform(0.3, 3.0))
            spec = two_cluster_1d(mu1, mu2, s1sq, s2sq)
            rep = separation_report(spec, h0, ell=1.0)
            assert check_separation_1d(mu1, mu2, s1sq, s2sq, h0) == rep.separated
