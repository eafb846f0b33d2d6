"""Affinity functions, bandwidth heuristic, Lipschitz constants, matrices.

An affinity function maps a pairwise distance h >= 0 into [0, 1]; the
affinity matrix of a data set is A_ij = f(||x_i - x_j||_2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("gaussian", "power_exponential", "rational", "logistic")


@dataclass(frozen=True)
class AffinityFn:
    """Decreasing map from distances to [0, 1].

    Kinds: gaussian exp(-(h/h0)^2); power_exponential exp(-(h/h0)^a);
    rational (1 + h/h0)^(-a); logistic (1 + exp(h/h0))^(-a).
    """

    kind: str = "gaussian"
    h0: float = 1.0
    a: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown affinity kind {self.kind!r}; choose from {KINDS}")
        if not self.h0 > 0:
            raise ValueError(f"h0 must be positive, got {self.h0}")
        if self.kind == "gaussian":
            if self.a is not None:
                raise ValueError("gaussian affinity takes no shape parameter a")
        else:
            if self.a is None or not self.a > 0:
                raise ValueError(f"{self.kind} affinity needs a positive shape a")

    def __call__(self, h):
        return evaluate(self, h)


def evaluate(f: AffinityFn, h):
    """Evaluate the affinity at distance(s) h >= 0."""
    arr = np.asarray(h, dtype=float)
    if np.any(arr < 0):
        raise ValueError("distances must be nonnegative")
    u = arr / f.h0
    if f.kind == "gaussian":
        out = np.exp(-(u**2))
    elif f.kind == "power_exponential":
        out = np.exp(-(u**f.a))
    elif f.kind == "rational":
        out = (1.0 + u) ** (-f.a)
    else:  # logistic
        with np.errstate(over="ignore"):
            out = (1.0 + np.exp(u)) ** (-f.a)
    if np.isscalar(h) or arr.ndim == 0:
        return float(out)
    return out


def lipschitz_constant(f: AffinityFn) -> float:
    """Smallest global Lipschitz constant (an upper bound for some kinds).

    gaussian: sqrt(2/e)/h0 (|f'| peaks at h = h0/sqrt(2)).
    power_exponential, a >= 1: closed-form sup of |f'|; a < 1 is not
    globally Lipschitz at 0 and raises.
    rational, logistic: a/h0 upper bound from the derivative.
    """
    if f.kind == "gaussian":
        return math.sqrt(2.0 / math.e) / f.h0
    if f.kind == "power_exponential":
        a = f.a
        if a < 1:
            raise ValueError(
                "power_exponential with a < 1 has unbounded slope at h = 0"
            )
        if a == 1:
            return 1.0 / f.h0
        ustar = ((a - 1.0) / a) ** (1.0 / a)
        return (a / f.h0) * ustar ** (a - 1.0) * math.exp(-(a - 1.0) / a)
    # rational and logistic share the same bound
    return f.a / f.h0


def default_h0(points: np.ndarray) -> float:
    """Bandwidth heuristic: half the largest column root-sum-of-squares."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    css = np.sum(x**2, axis=0)
    m = float(css.max()) if css.size else 0.0
    if m <= 0.0:
        raise ValueError("all-zero data gives bandwidth 0; supply h0 explicitly")
    return 0.5 * math.sqrt(m)


def build_matrix(points: np.ndarray, f: AffinityFn) -> np.ndarray:
    """Affinity matrix A_ij = f(||x_i - x_j||_2), exactly symmetric."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    sq = np.sum(x**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.clip(d2, 0.0, None, out=d2)
    a = evaluate(f, np.sqrt(d2))
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


def expected_matrix(spec, h0: float) -> np.ndarray:
    """Entrywise expectation of the affinity matrix under a mixture spec.

    Gaussian affinity assumed. Entry (i, j) is the closed-form expected
    affinity for the clusters of samples i and j; the diagonal is set to 1,
    matching f(0) on the observed matrix.
    """
    from sdpcluster.gmm import expected_affinity

    k = spec.n_clusters
    block = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            block[i, j] = block[j, i] = expected_affinity(spec, i, j, h0)
    idx = np.repeat(np.arange(k), spec.sizes)
    a = block[np.ix_(idx, idx)]
    np.fill_diagonal(a, 1.0)
    return a
