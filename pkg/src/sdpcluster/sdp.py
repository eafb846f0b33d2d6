"""Dual eigenvalue solver for the mass-constrained semidefinite relaxation.

The relaxation maximizes <A, Z> over symmetric Z that are positive
semidefinite, entrywise nonnegative, with unit diagonal and total entry sum
lambda. Dualizing the diagonal and sum constraints while keeping Z PSD with
the redundant normalization trace(Z) = n gives the convex dual

    theta(z) = n * lambda_max(A + diag(z_1..z_n) + z_{n+1} J) - sum_i z_i
               - lambda * z_{n+1},

with J the all-ones matrix. theta is minimized by a limited-memory
quasi-Newton method with a weak Wolfe line search that tolerates the kinks
of the maximum-eigenvalue function, falling back to diminishing subgradient
steps when no acceptable step exists; termination uses the norm of the
smallest convex combination of recent subgradients. A primal estimate is
rebuilt from the top eigenspace at the dual minimizer and projected onto
the box constraints, with the projection error reported, not hidden.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from sdpcluster.linalg import as_symmetric, eig_sym

WOLFE_C1 = 1e-4
WOLFE_C2 = 0.5
CURVATURE_GUARD = 1e-12

# recovery looks for near-degenerate top eigenvalues inside this relative
# window; the inexact dual minimizer never coalesces them exactly
RECOVERY_EIG_WINDOW = 1e-2
RECOVERY_MAX_RANK = 16


@dataclass(frozen=True)
class SolverOptions:
    grad_tol: float = 1e-5
    max_iter: int = 500
    bfgs_memory: int = 20
    restarts: int = 3
    eigenspace_tol: float = 1e-8
    recovery_refine_iters: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.grad_tol <= 0 or self.eigenspace_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1 or self.bfgs_memory < 1:
            raise ValueError("max_iter and bfgs_memory must be positive")
        if self.restarts < 0 or self.recovery_refine_iters < 0:
            raise ValueError("restarts and recovery_refine_iters must be nonnegative")


@dataclass(frozen=True)
class SdpProblem:
    """Relaxation instance: affinity matrix A, mass lambda, solver options."""

    affinity: np.ndarray
    lam: float
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        a = as_symmetric(self.affinity)
        a.setflags(write=False)
        object.__setattr__(self, "affinity", a)
        object.__setattr__(self, "lam", float(self.lam))
        n = a.shape[0]
        if n < 1:
            raise ValueError("affinity matrix must be nonempty")
        if not n <= self.lam <= n * n:
            raise ValueError(f"lambda must lie in [n, n^2] = [{n}, {n * n}], got {self.lam}")

    @property
    def n(self) -> int:
        return self.affinity.shape[0]


@dataclass(frozen=True)
class DualResult:
    """Best dual point found, its value, and the termination status."""

    z: np.ndarray
    value: float
    iterations: int
    converged: bool
    certificate_norm: float


@dataclass(frozen=True)
class SdpSolution:
    """Primal estimate with duality diagnostics.

    residuals holds the feasibility record of the returned z_hat (after
    clipping); residuals_before_clip the same record of the raw eigenspace
    reconstruction. Each record has min_eigenvalue, min_entry, max_entry,
    max_diag_deviation and sum_deviation.
    """

    z_hat: np.ndarray
    dual_value: float
    primal_value: float
    duality_gap: float
    residuals: dict
    residuals_before_clip: dict
    iterations: int
    converged: bool
    eigenspace_dim: int


def _check_dual_point(problem: SdpProblem, z) -> np.ndarray:
    z = np.asarray(z, dtype=float).ravel()
    if z.size != problem.n + 1:
        raise ValueError(f"dual point must have length n+1 = {problem.n + 1}, got {z.size}")
    return z


def affine_matrix(problem: SdpProblem, z) -> np.ndarray:
    """A + diag(z_1..z_n) + z_{n+1} J."""
    z = _check_dual_point(problem, z)
    m = problem.affinity + z[-1]
    m[np.diag_indices_from(m)] += z[:-1]
    return m


def dual_value(problem: SdpProblem, z) -> float:
    """theta(z) = n lambda_max(A(z)) - sum_i z_i - lambda z_{n+1}."""
    z = _check_dual_point(problem, z)
    n = problem.n
    lam_max = float(np.linalg.eigvalsh(affine_matrix(problem, z))[-1])
    return n * lam_max - float(z[:-1].sum()) - problem.lam * z[-1]


def _value_and_subgradient(problem: SdpProblem, z) -> tuple[float, np.ndarray]:
    n = problem.n
    # raw eigh: the subgradient uses V V' only, so sign conventions cancel
    values, vectors = np.linalg.eigh(affine_matrix(problem, z))
    lam_max = float(values[-1])
    tol = problem.options.eigenspace_tol * (1.0 + abs(lam_max))
    r = int(np.sum(values >= lam_max - tol))
    v = vectors[:, n - r:]
    # W = I/r over the eigenspace selects one subgradient at kinks
    diag_p = np.sum(v * v, axis=1) / r
    sum_p = float(np.sum(v.sum(axis=0) ** 2)) / r
    g = np.empty(n + 1)
    g[:-1] = n * diag_p - 1.0
    g[-1] = n * sum_p - problem.lam
    theta = n * lam_max - float(z[:-1].sum()) - problem.lam * z[-1]
    return theta, g


def dual_subgradient(problem: SdpProblem, z) -> np.ndarray:
    """One element of the subdifferential of theta at z.

    With V spanning the top eigenspace (multiplicity r) and P = V V' / r,
    component i <= n is n P_ii - 1 and component n+1 is n sum(P) - lambda.
    """
    z = _check_dual_point(problem, z)
    return _value_and_subgradient(problem, z)[1]


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = int(np.max(idx[cond]))
    tau = css[rho - 1] / rho
    return np.clip(v - tau, 0.0, None)


def _min_norm_in_hull(grads: np.ndarray) -> tuple[float, np.ndarray]:
    """Smallest convex combination of the given subgradients: (norm, weights)."""
    m = grads.shape[0]
    if m == 1:
        return float(np.linalg.norm(grads[0])), np.ones(1)
    q = grads @ grads.T
    lip = 2.0 * max(float(np.linalg.eigvalsh(q)[-1]), 1e-300)
    w = np.full(m, 1.0 / m)
    step = 1.0 / lip
    for _ in range(80):
        w_new = _project_simplex(w - step * 2.0 * (q @ w))
        if float(np.max(np.abs(w_new - w))) <= 1e-13:
            w = w_new
            break
        w = w_new
    return math.sqrt(max(float(w @ q @ w), 0.0)), w


def _eigenspace_certificate(problem: SdpProblem, z) -> tuple[float, float]:
    """Optimality measure at one point: (certificate norm, epsilon).

    Minimizes the norm of the subdifferential model over all PSD trace-one
    mixings W of the near-top eigenspace. The returned epsilon is the
    eigenvalue slack n (lambda_1 - <diag(top values), W>), making the
    certificate an epsilon-subgradient statement even when the top
    eigenvalues have not exactly coalesced.
    """
    n = problem.n
    values, vectors = np.linalg.eigh(affine_matrix(problem, z))
    lam1 = float(values[-1])
    window = 1e-4 * (1.0 + abs(lam1))
    m = min(int(np.sum(values >= lam1 - window)), 8)
    v = vectors[:, n - m:]
    w_mat, phi = _fit_eigenspace_weights(v, n, problem.lam, iters=600)
    eps = n * (lam1 - float(np.diag(w_mat) @ values[n - m:]))
    return math.sqrt(max(phi, 0.0)), max(eps, 0.0)


def _weak_wolfe(problem, z, d, f0, g0, max_steps=30):
    """Weak Wolfe line search with bisection bracketing.

    Returns (t, z_new, f_new, g_new) or None. When the curvature condition
    cannot be met near a kink, the last point with sufficient decrease is
    returned instead.
    """
    dd = float(g0 @ d)
    if dd >= 0:
        return None
    lo, hi = 0.0, np.inf
    t = 1.0
    armijo_point = None
    for _ in range(max_steps):
        zt = z + t * d
        ft, gt = _value_and_subgradient(problem, zt)
        if not np.isfinite(ft) or ft > f0 + WOLFE_C1 * t * dd:
            hi = t
        else:
            if float(gt @ d) >= WOLFE_C2 * dd:
                return t, zt, ft, gt
            lo = t
            armijo_point = (t, zt, ft, gt)
        if np.isfinite(hi) and hi - lo <= 1e-12 * max(1.0, hi):
            break
        t = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * t
    return armijo_point


def _two_loop(g: np.ndarray, memory) -> np.ndarray:
    if not memory:
        return g / max(1.0, float(np.linalg.norm(g)))
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(memory):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    s, y, _ = memory[-1]
    q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(memory, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return q


def _lbfgs_run(problem: SdpProblem, z0: np.ndarray, opts: SolverOptions) -> DualResult:
    z = np.asarray(z0, dtype=float).copy()
    f, g = _value_and_subgradient(problem, z)
    memory: list[tuple[np.ndarray, np.ndarray, float]] = []
    # bundle of (subgradient, theta - <g, z>) cutting planes; the hull
    # weights w of the min-norm combination make the aggregate
    # linearization error sum_k w_k (theta(z) - plane_k(z)) >= 0, and a
    # small error together with a small combination certifies
    # eps-optimality even though single subgradients never vanish at kinks
    recent = deque(maxlen=opts.bfgs_memory)
    recent.append((g.copy(), f - float(g @ z)))
    best_f, best_z = f, z.copy()
    converged = False
    cert = float(np.linalg.norm(g))
    fallback_count = 0
    stall_mark_f, stall_mark_it = f, 0
    it = 0
    for it in range(1, opts.max_iter + 1):
        gnorm = float(np.linalg.norm(g))
        grads = np.asarray([p[0] for p in recent])
        cert, weights = _min_norm_in_hull(grads)
        plane_at_z = grads @ z + np.asarray([p[1] for p in recent])
        agg_error = float(weights @ np.clip(f - plane_at_z, 0.0, None))
        if cert <= opts.grad_tol and agg_error <= opts.grad_tol * (1.0 + abs(f)):
            converged = True
            break
        # the rolling bundle can miss the optimal subgradient mixture, so
        # certify through the eigenspace model at the best point, both
        # periodically and when the value stalls at a kink bottom
        stalled = False
        if best_f < stall_mark_f - 1e-7 * (1.0 + abs(best_f)):
            stall_mark_f, stall_mark_it = best_f, it
        elif it - stall_mark_it >= 20:
            stalled = True
        if stalled or it % 40 == 0:
            cert2, eps2 = _eigenspace_certificate(problem, best_z)
            if cert2 <= opts.grad_tol and eps2 <= opts.grad_tol * (1.0 + abs(best_f)):
                cert = cert2
                converged = True
                break
            if stalled:
                break
        d = -_two_loop(g, memory)
        if float(g @ d) > -CURVATURE_GUARD * gnorm * float(np.linalg.norm(d)):
            memory.clear()
            d = -g / max(1.0, gnorm)
        step = _weak_wolfe(problem, z, d, f, g)
        if step is not None:
            _, z_new, f_new, g_new = step
            s = z_new - z
            y = g_new - g
            sy = float(s @ y)
            if sy > CURVATURE_GUARD * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
                memory.append((s, y, 1.0 / sy))
                if len(memory) > opts.bfgs_memory:
                    memory.pop(0)
            z, f, g = z_new, f_new, g_new
        else:
            # no acceptable step: take a diminishing subgradient step, which
            # also samples nearby subgradients for the stopping certificate
            fallback_count += 1
            length = 0.05 * (1.0 + float(np.linalg.norm(z))) / math.sqrt(fallback_count)
            z = z - length * g / max(gnorm, 1e-300)
            f, g = _value_and_subgradient(problem, z)
            memory.clear()
        recent.append((g.copy(), f - float(g @ z)))
        if f < best_f:
            best_f, best_z = f, z.copy()
    return DualResult(
        z=best_z, value=best_f, iterations=it, converged=converged, certificate_norm=cert
    )


def minimize_dual(problem: SdpProblem) -> DualResult:
    """Minimize theta from z = 0, with random restarts around the best point."""
    opts = problem.options
    rng = np.random.default_rng(opts.seed)
    n1 = problem.n + 1
    z0 = np.zeros(n1)
    best: DualResult | None = None
    total_iters = 0
    for _ in range(opts.restarts + 1):
        res = _lbfgs_run(problem, z0, opts)
        total_iters += res.iterations
        if best is None or res.value < best.value:
            best = res
        if best.converged:
            break
        scale = 0.1 * (1.0 + float(np.linalg.norm(best.z))) / math.sqrt(n1)
        z0 = best.z + scale * rng.standard_normal(n1)
    return replace(best, iterations=total_iters)


def _project_spectraplex(m: np.ndarray) -> np.ndarray:
    w, q = np.linalg.eigh((m + m.T) / 2.0)
    return (q * _project_simplex(w)) @ q.T


def _fit_objective(v, w_mat, n, lam):
    d = n * np.sum((v @ w_mat) * v, axis=1) - 1.0
    c = v.sum(axis=0)
    s = n * float(c @ w_mat @ c) - lam
    return float(d @ d + s * s)


def _fit_eigenspace_weights(v: np.ndarray, n: int, lam: float, iters: int):
    """Best W >= 0 with trace 1 fitting diag(n V W V') = 1 and mass lambda.

    Projected gradient over the trace-one PSD simplex with a backtracking
    step; r = 1 forces W = [[1]].
    """
    r = v.shape[1]
    if r == 1:
        w_mat = np.ones((1, 1))
        return w_mat, _fit_objective(v, w_mat, n, lam)
    c = v.sum(axis=0)
    w_mat = np.eye(r) / r
    phi = _fit_objective(v, w_mat, n, lam)
    step = 1.0 / (1.0 + n * n)
    for _ in range(iters):
        d = n * np.sum((v @ w_mat) * v, axis=1) - 1.0
        s = n * float(c @ w_mat @ c) - lam
        grad = 2.0 * n * ((v.T * d) @ v) + (2.0 * n * s) * np.outer(c, c)
        accepted = False
        for _ in range(40):
            w_try = _project_spectraplex(w_mat - step * grad)
            phi_try = _fit_objective(v, w_try, n, lam)
            decrease = float(np.sum(grad * (w_mat - w_try)))
            if phi_try <= phi - 1e-4 * decrease:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        moved = float(np.max(np.abs(w_try - w_mat)))
        w_mat, phi = w_try, phi_try
        step *= 1.5
        if moved <= 1e-14:
            break
    return w_mat, phi


def _residuals(z: np.ndarray, lam: float) -> dict:
    return {
        "min_eigenvalue": float(np.linalg.eigvalsh((z + z.T) / 2.0)[0]),
        "min_entry": float(z.min()),
        "max_entry": float(z.max()),
        "max_diag_deviation": float(np.max(np.abs(np.diag(z) - 1.0))),
        "sum_deviation": float(z.sum() - lam),
    }


def _repair_mass(z: np.ndarray, lam: float) -> np.ndarray:
    """Rescale off-diagonal entries, re-clipping to [0, 1], until sum ~ lam.

    Clipping the low-rank reconstruction moves its total mass; without this
    repair the reported estimate can sit far outside the constraint set and
    even exceed the dual value.
    """
    n = z.shape[0]
    z = z.copy()
    target = lam - n
    for _ in range(50):
        off = float(z.sum()) - n
        if abs(off - target) <= 1e-9 * max(1.0, target) or off <= 0:
            break
        z *= target / off
        np.fill_diagonal(z, 1.0)
        if target <= off:
            break  # shrinking keeps entries inside [0, 1]: done in one step
        np.clip(z, 0.0, 1.0, out=z)
    return z


def recover_primal(
    problem: SdpProblem, zstar, *, iterations: int = 0, converged: bool = True
) -> SdpSolution:
    """Rebuild a primal estimate from the top eigenspace at the dual point.

    The eigenspace dimension r is chosen among the near-degenerate leading
    eigenvalues by the quality of the constraint fit, since an inexact dual
    minimizer never exhibits an exactly repeated maximum eigenvalue. The
    fitted n V W V' is then projected toward the constraint set: clipped to
    [0, 1], unit diagonal restored, and off-diagonal mass rescaled back to
    lambda. Residuals are recorded before and after the projection.
    """
    z = _check_dual_point(problem, zstar)
    if not np.all(np.isfinite(z)):
        raise ValueError("dual point must be finite")
    n = problem.n
    opts = problem.options
    dec = eig_sym(affine_matrix(problem, z))
    lam1 = float(dec.values[0])
    dual = n * lam1 - float(z[:-1].sum()) - problem.lam * z[-1]

    window = RECOVERY_EIG_WINDOW * (1.0 + abs(lam1))
    r_max = min(int(np.sum(dec.values >= lam1 - window)), n, RECOVERY_MAX_RANK)
    fits = []
    for r in range(1, r_max + 1):
        v = dec.vectors[:, :r]
        w_mat, phi = _fit_eigenspace_weights(v, n, problem.lam, opts.recovery_refine_iters)
        fits.append((phi, r, v, w_mat))
    phi_best = min(f[0] for f in fits)
    phi, r, v, w_mat = next(
        f for f in fits if f[0] <= phi_best * 1.05 + 1e-12
    )

    z0 = n * (v @ w_mat @ v.T)
    z0 = (z0 + z0.T) / 2.0
    pre = _residuals(z0, problem.lam)
    z_hat = np.clip(z0, 0.0, 1.0)
    np.fill_diagonal(z_hat, 1.0)
    z_hat = _repair_mass(z_hat, problem.lam)
    post = _residuals(z_hat, problem.lam)
    primal = float(np.sum(problem.affinity * z_hat))
    return SdpSolution(
        z_hat=z_hat,
        dual_value=dual,
        primal_value=primal,
        duality_gap=dual - primal,
        residuals=post,
        residuals_before_clip=pre,
        iterations=iterations,
        converged=converged,
        eigenspace_dim=r,
    )


def solve(problem: SdpProblem) -> SdpSolution:
    """Minimize the dual, then recover and project a primal estimate."""
    res = minimize_dual(problem)
    return recover_primal(
        problem, res.z, iterations=res.iterations, converged=res.converged
    )
