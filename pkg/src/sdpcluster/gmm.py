"""Gaussian cluster model: sampling, closed-form expected affinities, and
the separation constants that drive the recovery bounds.

The model is a fixed partition into K clusters; the samples of cluster k
are drawn i.i.d. from N(mu_k, Sigma_k). With the Gaussian affinity, the
expected affinity between two samples has a closed form through the
Laplace transform of the (noncentral) chi-square distribution of
||x_i - x_j||^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

COV_SYMMETRY_TOL = 1e-12
COV_EIG_FLOOR = -1e-10

GROTHENDIECK_CONSTANT = 1.8


def _frozen_array(x, dtype=float) -> np.ndarray:
    arr = np.array(x, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ClusterComponent:
    """One mixture component: mean, covariance, and sample count."""

    mean: np.ndarray
    cov: np.ndarray
    size: int


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Ground-truth model: dimension and per-cluster (mean, cov, size).

    Covariances must be symmetric (tol 1e-12) and positive semidefinite up
    to a -1e-10 eigenvalue floor; total sample count must be at least 2.
    """

    dim: int
    clusters: tuple[ClusterComponent, ...]

    def __post_init__(self):
        d = int(self.dim)
        if d < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        comps = []
        for item in self.clusters:
            if isinstance(item, ClusterComponent):
                mean, cov, size = item.mean, item.cov, item.size
            else:
                mean, cov, size = item
            mean = _frozen_array(mean)
            cov = np.asarray(cov, dtype=float)
            size = int(size)
            if mean.shape != (d,):
                raise ValueError(f"mean has shape {mean.shape}, expected ({d},)")
            if cov.shape != (d, d):
                raise ValueError(f"covariance has shape {cov.shape}, expected ({d}, {d})")
            if cov.size and float(np.max(np.abs(cov - cov.T))) > COV_SYMMETRY_TOL:
                raise ValueError("covariance is not symmetric within 1e-12")
            w = np.linalg.eigvalsh((cov + cov.T) / 2.0)
            if w.min() < COV_EIG_FLOOR:
                raise ValueError(
                    f"covariance has eigenvalue {w.min():.3e} below the -1e-10 floor"
                )
            if size < 1:
                raise ValueError(f"cluster size must be positive, got {size}")
            comps.append(ClusterComponent(mean=mean, cov=_frozen_array(cov), size=size))
        if not comps:
            raise ValueError("at least one cluster is required")
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "clusters", tuple(comps))
        if self.total_size < 2:
            raise ValueError("total sample count must be at least 2")

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.clusters)

    @property
    def total_size(self) -> int:
        return sum(self.sizes)

    def labels(self) -> np.ndarray:
        """Ground-truth labels 1..K in cluster order."""
        return np.repeat(np.arange(1, self.n_clusters + 1), self.sizes)


@dataclass(frozen=True)
class LabeledDataSet:
    """Sampled points (n x d) with labels 1..K."""

    points: np.ndarray
    labels: np.ndarray


@dataclass(frozen=True)
class SeparationReport:
    """Constants of the recovery bound for one (spec, h0, ell) setting.

    p is the smallest within-cluster expected affinity, q the largest
    cross-cluster one; separation means p > q. sigma^2 is the size-weighted
    average of the largest covariance eigenvalues. When separated,
    t0 = 8 sqrt(2 ln 2) K_G sigma ell / (p - q) and
    c = 16 sqrt(2) K_G ell sigma / (p - q); otherwise both are +inf.
    """

    p: float
    q: float
    sigma: float
    ell: float
    kg: float
    t0: float
    c: float
    separated: bool


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((cov + cov.T) / 2.0)
    if w.min() < COV_EIG_FLOOR:
        raise ValueError(
            f"covariance has eigenvalue {w.min():.3e} below the -1e-10 floor"
        )
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def sample(spec: GaussianMixtureSpec, seed: int) -> LabeledDataSet:
    """Draw the data set: n_k rows from N(mu_k, Sigma_k), in cluster order.

    Deterministic for a fixed seed. Covariances are factored through their
    symmetric eigendecomposition with negative eigenvalues clamped to 0.
    """
    rng = np.random.default_rng(int(seed))
    blocks = []
    for comp in spec.clusters:
        root = _psd_sqrt(comp.cov)
        xi = rng.standard_normal((comp.size, spec.dim))
        blocks.append(comp.mean + xi @ root)
    return LabeledDataSet(
        points=_frozen_array(np.vstack(blocks)),
        labels=_frozen_array(spec.labels(), dtype=int),
    )


def gaussian_quadratic_laplace(mu, sigma, t: float) -> float:
    """E[exp(t ||X||^2)] for X ~ N(mu, sigma) and t <= 0.

    Equals the product over eigenpairs (s_d^2, v_d) of sigma of
    exp(<mu, v_d>^2 t / (1 - 2 t s_d^2)) * (1 - 2 t s_d^2)^(-1/2).
    """
    if t > 0:
        raise ValueError(f"t must be nonpositive (transform may diverge), got {t}")
    mu = np.asarray(mu, dtype=float).ravel()
    sigma = np.asarray(sigma, dtype=float)
    w, v = np.linalg.eigh((sigma + sigma.T) / 2.0)
    if w.min() < COV_EIG_FLOOR:
        raise ValueError("sigma must be positive semidefinite")
    w = np.clip(w, 0.0, None)
    proj = v.T @ mu
    denom = 1.0 - 2.0 * t * w
    return float(np.prod(np.exp(proj**2 * t / denom) / np.sqrt(denom)))


def expected_affinity(spec: GaussianMixtureSpec, k: int, k2: int, h0: float) -> float:
    """Closed-form expected Gaussian affinity between clusters k and k2.

    Cluster indices are 0-based. Within a cluster the value is
    prod_l (1 + 4 (s_kl / h0)^2)^(-1/2) over the eigenvalues s_kl^2 of
    Sigma_k; across clusters the eigenpairs of Sigma_k + Sigma_k2 enter
    together with the mean difference.
    """
    if not h0 > 0:
        raise ValueError(f"h0 must be positive, got {h0}")
    kk = spec.n_clusters
    if not (0 <= k < kk and 0 <= k2 < kk):
        raise IndexError(f"cluster index out of range: ({k}, {k2}) with K={kk}")
    h2 = h0 * h0
    if k == k2:
        w = np.clip(np.linalg.eigvalsh(spec.clusters[k].cov), 0.0, None)
        return float(np.prod((1.0 + 4.0 * w / h2) ** -0.5))
    ca, cb = spec.clusters[k], spec.clusters[k2]
    w, v = np.linalg.eigh((ca.cov + cb.cov + (ca.cov + cb.cov).T) / 2.0)
    w = np.clip(w, 0.0, None)
    dmu = ca.mean - cb.mean
    proj = v.T @ dmu
    return float(np.prod(np.exp(-(proj**2) / (h2 + 2.0 * w)) / np.sqrt(1.0 + 2.0 * w / h2)))


def separation_report(spec: GaussianMixtureSpec, h0: float, ell: float) -> SeparationReport:
    """Evaluate p, q, sigma and the bound constants t0 and c.

    With a single cluster there are no cross pairs; by convention q = 0 and
    the spec counts as separated.
    """
    if not h0 > 0 or not ell > 0:
        raise ValueError("h0 and ell must be positive")
    kk = spec.n_clusters
    p = min(expected_affinity(spec, k, k, h0) for k in range(kk))
    if kk == 1:
        q = 0.0
    else:
        q = max(
            expected_affinity(spec, k, k2, h0)
            for k in range(kk)
            for k2 in range(k + 1, kk)
        )
    n = spec.total_size
    rho = [
        float(np.clip(np.linalg.eigvalsh(c.cov), 0.0, None).max())
        for c in spec.clusters
    ]
    sigma = math.sqrt(sum(c.size * r for c, r in zip(spec.clusters, rho)) / n)
    separated = p > q
    kg = GROTHENDIECK_CONSTANT
    if separated:
        t0 = 8.0 * math.sqrt(2.0 * math.log(2.0)) * kg * sigma * ell / (p - q)
        c = 16.0 * math.sqrt(2.0) * kg * ell * sigma / (p - q)
    else:
        t0 = math.inf
        c = math.inf
    return SeparationReport(
        p=p, q=q, sigma=sigma, ell=ell, kg=kg, t0=t0, c=c, separated=separated
    )


def check_separation_1d(mu1: float, mu2: float, s1sq: float, s2sq: float, h0: float) -> bool:
    """Separation test for two 1-d Gaussian clusters.

    True iff (mu2 - mu1)^2 > (1/2) (h0^2 + 2 (s1sq + s2sq)) *
    max_k ln[(1 + 4 s_k^2 / h0^2) / (1 + 2 (s1sq + s2sq) / h0^2)].
    With equal variances this reduces to mu1 != mu2.
    """
    if s1sq < 0 or s2sq < 0:
        raise ValueError("variances must be nonnegative")
    if not h0 > 0:
        raise ValueError(f"h0 must be positive, got {h0}")
    h2 = h0 * h0
    s = s1sq + s2sq
    cross = math.log1p(2.0 * s / h2)
    rhs_log = max(math.log1p(4.0 * s1sq / h2) - cross, math.log1p(4.0 * s2sq / h2) - cross)
    return (mu2 - mu1) ** 2 > 0.5 * (h2 + 2.0 * s) * rhs_log
