"""Dense symmetric eigentools, the infinity-to-one norm, and lp quasi-norms.

The infinity-to-one norm ||M|| = max over sign vectors u, v of u' M v is
computed exactly by enumeration for small matrices (the inner max over v is
analytic, so only u is enumerated) and bounded from below by alternating
maximization for larger ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_TOL = 1e-10

# 2^(n-1) sign patterns; beyond this the exact norm is impractical.
EXACT_NORM_MAX_N = 20


def as_symmetric(m: np.ndarray, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Validate near-symmetry and return the symmetrized copy (m + m')/2."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.size:
        skew = float(np.max(np.abs(m - m.T)))
        if skew > tol:
            raise ValueError(
                f"matrix is not symmetric: max |m - m'| = {skew:.3e} exceeds {tol:.1e}"
            )
    return (m + m.T) / 2.0


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted descending; vectors[:, j] pairs with values[j]."""

    values: np.ndarray
    vectors: np.ndarray


def eig_sym(m: np.ndarray) -> EigenDecomposition:
    """Full symmetric eigendecomposition with deterministic ordering.

    Eigenvalues are returned in descending order and each eigenvector is
    flipped so that its first coordinate above the noise floor is positive,
    which keeps repeated runs and tied eigenvalues reproducible.
    """
    m = as_symmetric(m)
    values, vectors = np.linalg.eigh(m)
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    mask = np.abs(vectors) > 1e-12
    first = np.where(mask.any(axis=0), mask.argmax(axis=0), 0)
    lead = vectors[first, np.arange(vectors.shape[1])]
    vectors[:, lead < 0] *= -1.0
    return EigenDecomposition(values=values, vectors=vectors)


def lambda_max_eigenspace(
    m: np.ndarray, gap_tol: float | None = None
) -> tuple[float, np.ndarray]:
    """Maximum eigenvalue and an orthonormal basis of its near-eigenspace.

    Eigenvalues within ``gap_tol`` of the maximum count toward the
    eigenspace; the default tolerance is relative, 1e-8 * (1 + |lambda_max|).
    """
    dec = eig_sym(m)
    lam = float(dec.values[0])
    if gap_tol is None:
        gap_tol = 1e-8 * (1.0 + abs(lam))
    if gap_tol <= 0:
        raise ValueError("gap_tol must be positive")
    r = int(np.sum(dec.values >= lam - gap_tol))
    return lam, dec.vectors[:, :r]


def inf_to_one_norm_exact(m: np.ndarray) -> float:
    """Exact infinity-to-one norm by enumerating sign vectors.

    For fixed u the optimal v is sign(M'u), so only u is enumerated, and u
    and -u are equivalent, leaving 2^(n-1) candidates. Limited to n <= 20.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n == 0:
        return 0.0
    if n > EXACT_NORM_MAX_N:
        raise ValueError(
            f"exact enumeration supports n <= {EXACT_NORM_MAX_N} (got n={n}); "
            "use inf_to_one_norm_lower"
        )
    total = 1 << (n - 1)
    chunk = 1 << 14
    shifts = np.arange(n - 1, dtype=np.uint32)
    best = 0.0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.uint32)
        bits = (idx[:, None] >> shifts[None, :]) & 1
        u = np.empty((idx.size, n))
        u[:, 0] = 1.0
        u[:, 1:] = 2.0 * bits - 1.0
        vals = np.abs(u @ m).sum(axis=1)
        best = max(best, float(vals.max()))
    return best


def _signs(x: np.ndarray) -> np.ndarray:
    # sign(0) must land in {-1, +1}; pick +1.
    return np.where(x >= 0.0, 1.0, -1.0)


def inf_to_one_norm_lower(
    m: np.ndarray, restarts: int = 20, seed: int = 0
) -> float:
    """Lower bound on the infinity-to-one norm by alternating maximization.

    From each random sign start, alternately set v = sign(M'u) and
    u = sign(Mv); each half-step is the exact inner maximum, so the value is
    nondecreasing and the result is always a valid lower bound.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    n = m.shape[0]
    if n == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        u = _signs(rng.standard_normal(n))
        val = -np.inf
        for _ in range(1000):
            v = _signs(m.T @ u)
            u = _signs(m @ v)
            new_val = float(np.abs(m @ v).sum())
            if new_val <= val:
                break
            val = new_val
        best = max(best, val)
    return best


def lp_quasinorm(m: np.ndarray, p: float) -> float:
    """(sum |m_ij|^p)^(1/p); a soft sparsity measure for small p."""
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    m = np.asarray(m, dtype=float)
    s = float(np.sum(np.abs(m) ** p))
    return s ** (1.0 / p)
