"""Seeded Monte Carlo experiments: recovery error against the theoretical
bound, concentration of the affinity matrix in the infinity-to-one norm,
sparsity improvement of the embedded data, and mass-parameter selection.

Every experiment is a pure function of its config; trial t uses seed
base_seed + t so reruns are bit-identical and trials can run in a process
pool without changing the result.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from sdpcluster.affinity import AffinityFn, build_matrix, default_h0, expected_matrix, lipschitz_constant
from sdpcluster.clustering import cluster_matrix, edge_error_rate, edge_mass, l1_error_normalized, threshold_graph_clusters
from sdpcluster.embedding import embed_rows, estimate_k
from sdpcluster.gmm import GaussianMixtureSpec, sample, separation_report
from sdpcluster.linalg import EXACT_NORM_MAX_N, eig_sym, inf_to_one_norm_exact, inf_to_one_norm_lower
from sdpcluster.sdp import SdpProblem, SolverOptions, solve

LAMBDA_MODES = ("true_lambda0", "grid")


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs shared by the experiment runners.

    spec drives recovery and concentration runs; the sparsity experiment
    generates its own two-cluster data per dimension in dims (means drawn
    from N(0, 2I), covariances as A'A with standard normal A,
    samples_per_cluster points each). h0 fixes the bandwidth; when None,
    recovery and sparsity use the per-trial heuristic while concentration
    derives one bandwidth from the base_seed draw and keeps it fixed, since
    its closed-form reference matrix must correspond to a single affinity.
    """

    spec: GaussianMixtureSpec | None = None
    trials: int = 20
    base_seed: int = 0
    dims: tuple[int, ...] = (50, 100, 150, 200, 250)
    p_quasi: float = 0.05
    lambda_mode: str = "true_lambda0"
    h0: float | None = None
    samples_per_cluster: int = 100
    solver: SolverOptions = field(default_factory=SolverOptions)
    jobs: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.lambda_mode not in LAMBDA_MODES:
            raise ValueError(f"lambda_mode must be one of {LAMBDA_MODES}")
        if self.p_quasi <= 0:
            raise ValueError("p_quasi must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    n: int
    d: int
    pi_n: float
    l1_normalized: float
    t0: float
    inf1_lower_normalized: float
    sparsity_ratio: float
    duality_gap: float
    runtime_ms: float


def sparsity_gain(a_original: np.ndarray, a_embedded: np.ndarray, p: float) -> float:
    """Relative drop of the p-th power sum: (S_p(orig) - S_p(emb)) / S_p(orig)."""
    s_orig = float(np.sum(np.abs(a_original) ** p))
    s_emb = float(np.sum(np.abs(a_embedded) ** p))
    return (s_orig - s_emb) / s_orig


def _embedded_affinity(z_hat: np.ndarray) -> np.ndarray | None:
    """Affinity matrix of the embedded rows with a fresh bandwidth."""
    values = eig_sym(z_hat).values
    k_hat = estimate_k(values)
    coords = embed_rows(z_hat, k_hat).coords
    if not np.any(coords):
        return None
    return build_matrix(coords, AffinityFn("gaussian", default_h0(coords)))


def _recovery_trial(args) -> TrialRecord:
    config, trial = args
    seed = config.base_seed + trial
    spec = config.spec
    started = time.perf_counter()
    data = sample(spec, seed)
    h0 = config.h0 if config.h0 is not None else default_h0(data.points)
    fn = AffinityFn("gaussian", h0)
    a = build_matrix(data.points, fn)
    lam0 = float(edge_mass(data.labels))
    if config.lambda_mode == "true_lambda0":
        lam = lam0
    else:
        n = spec.total_size
        candidates = np.geomspace(n, n * n, 8)
        lam, _ = select_lambda(data.points, candidates, h0=h0, solver=config.solver)
    options = replace(config.solver, seed=seed)
    solution = solve(SdpProblem(affinity=a, lam=lam, options=options))
    z_bar = cluster_matrix(data.labels)
    report = separation_report(spec, h0, lipschitz_constant(fn))
    a_bar = expected_matrix(spec, h0)
    inf1 = inf_to_one_norm_lower(a - a_bar, restarts=20, seed=seed) / spec.total_size**2
    emb_a = _embedded_affinity(solution.z_hat)
    ratio = 0.0 if emb_a is None else sparsity_gain(a, emb_a, config.p_quasi)
    return TrialRecord(
        seed=seed,
        n=spec.total_size,
        d=spec.dim,
        pi_n=edge_error_rate(solution.z_hat, z_bar),
        l1_normalized=l1_error_normalized(solution.z_hat, z_bar),
        t0=report.t0,
        inf1_lower_normalized=inf1,
        sparsity_ratio=ratio,
        duality_gap=solution.duality_gap,
        runtime_ms=(time.perf_counter() - started) * 1000.0,
    )


def _map_trials(worker, arglist, jobs: int):
    if jobs <= 1:
        return [worker(a) for a in arglist]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, arglist))


def run_recovery_experiment(config: ExperimentConfig) -> list[TrialRecord]:
    """Sample, solve with lambda = lambda_0, and collect error metrics.

    Trials whose spec is not separated carry t0 = inf and are skipped by
    bound checks downstream.
    """
    if config.spec is None:
        raise ValueError("recovery experiment needs a spec")
    args = [(config, t) for t in range(config.trials)]
    return _map_trials(_recovery_trial, args, config.jobs)


def recovery_report(config: ExperimentConfig, records: list[TrialRecord]) -> dict:
    """JSON-ready summary; runtimes are kept out (see timings sidecar)."""
    finite_t0 = [r for r in records if math.isfinite(r.t0)]
    return {
        "kind": "recovery",
        "config": config_to_dict(config),
        "trials": [_record_fields(r) for r in records],
        "summary": {
            "trials": len(records),
            "pi_n_zero_fraction": float(np.mean([r.pi_n == 0.0 for r in records])),
            "max_pi_n": max(r.pi_n for r in records),
            "max_l1_normalized": max(r.l1_normalized for r in records),
            "bound_satisfied_fraction": (
                float(np.mean([r.l1_normalized <= 1.5 * r.t0 for r in finite_t0]))
                if finite_t0
                else None
            ),
        },
    }


def _record_fields(record: TrialRecord) -> dict:
    d = asdict(record)
    d.pop("runtime_ms")
    return d


def _concentration_trial(args):
    config, trial, h0, a_bar = args
    seed = config.base_seed + trial
    data = sample(config.spec, seed)
    a = build_matrix(data.points, AffinityFn("gaussian", h0))
    diff = a - a_bar
    n = config.spec.total_size
    lower = inf_to_one_norm_lower(diff, restarts=20, seed=seed)
    if n <= EXACT_NORM_MAX_N:
        exact = inf_to_one_norm_exact(diff)
        return seed, exact / n**2, True, bool(abs(exact - lower) <= 1e-9 * (1.0 + exact))
    return seed, lower / n**2, False, False


def run_concentration_experiment(config: ExperimentConfig) -> dict:
    """Distribution of ||A - Abar|| (infinity-to-one, normalized by n^2).

    Uses the exact norm for n <= 20, the alternating lower bound otherwise.
    Exceedance fractions are compared on a grid of thresholds t above the
    concentration floor 2 sqrt(2 ln 2) ell sigma against the theoretical
    tail 2 exp(-((t - floor)^2 / (32 ell^2 sigma^2)) n) plus three binomial
    standard errors; the flags are recorded for the caller to assert.
    """
    spec = config.spec
    if spec is None:
        raise ValueError("concentration experiment needs a spec")
    h0 = config.h0 if config.h0 is not None else default_h0(sample(spec, config.base_seed).points)
    fn = AffinityFn("gaussian", h0)
    ell = lipschitz_constant(fn)
    report = separation_report(spec, h0, ell)
    sigma = report.sigma
    floor = 2.0 * math.sqrt(2.0 * math.log(2.0)) * ell * sigma
    a_bar = expected_matrix(spec, h0)

    args = [(config, t, h0, a_bar) for t in range(config.trials)]
    rows = _map_trials(_concentration_trial, args, config.jobs)
    norms = np.array([r[1] for r in rows])
    used_exact = all(r[2] for r in rows)
    lower_matches = [r[3] for r in rows if r[2]]

    grid = []
    if floor > 0:
        n = spec.total_size
        for mult in (1.25, 1.5, 2.0, 3.0, 4.0):
            t = mult * floor
            frac = float(np.mean(norms > t))
            bound = min(1.0, 2.0 * math.exp(-((t - floor) ** 2) / (32.0 * ell**2 * sigma**2) * n))
            se = math.sqrt(frac * (1.0 - frac) / config.trials)
            grid.append(
                {
                    "t": t,
                    "empirical_fraction": frac,
                    "bound": bound,
                    "binomial_se": se,
                    "within": bool(frac <= bound + 3.0 * se + 1e-12),
                }
            )
    return {
        "kind": "concentration",
        "config": config_to_dict(config),
        "params": {
            "h0": h0,
            "sigma": sigma,
            "ell": ell,
            "floor": floor,
            "exact_norm": used_exact,
        },
        "trials": [
            {"seed": r[0], "norm_normalized": r[1], "exact": r[2]} for r in rows
        ],
        "grid": grid,
        "summary": {
            "mean_norm_normalized": float(norms.mean()),
            "max_norm_normalized": float(norms.max()),
            "all_within_bound": bool(all(g["within"] for g in grid)),
            "lower_equals_exact_fraction": (
                float(np.mean(lower_matches)) if lower_matches else None
            ),
        },
    }


def _sparsity_trial(args):
    config, dim, trial = args
    rng = np.random.default_rng([config.base_seed, dim, trial])
    means = rng.normal(0.0, math.sqrt(2.0), size=(2, dim))
    covs = []
    for _ in range(2):
        a = rng.standard_normal((dim, dim))
        covs.append(a.T @ a)
    npc = config.samples_per_cluster
    spec = GaussianMixtureSpec(
        dim=dim,
        clusters=[(means[0], covs[0], npc), (means[1], covs[1], npc)],
    )
    data = sample(spec, int(rng.integers(2**62)))
    h0 = config.h0 if config.h0 is not None else default_h0(data.points)
    a = build_matrix(data.points, AffinityFn("gaussian", h0))
    lam0 = float(2 * npc * npc)
    options = replace(config.solver, seed=config.base_seed + trial)
    solution = solve(SdpProblem(affinity=a, lam=lam0, options=options))
    emb_a = _embedded_affinity(solution.z_hat)
    ratio = 0.0 if emb_a is None else sparsity_gain(a, emb_a, config.p_quasi)
    return dim, trial, ratio


def run_sparsity_experiment(config: ExperimentConfig) -> dict:
    """Relative lp-power-sum sparsity gain of the embedded data, per dim.

    For each dimension, two-cluster data per the random recipe is solved,
    embedded, and the affinity rebuilt on the embedding with a fresh
    bandwidth; the histogram of relative gains is recorded per dimension.
    """
    if not config.dims:
        raise ValueError("sparsity experiment needs a nonempty dims list")
    args = [(config, d, t) for d in config.dims for t in range(config.trials)]
    rows = _map_trials(_sparsity_trial, args, config.jobs)
    by_dim: dict[int, list[float]] = {d: [] for d in config.dims}
    for dim, _, ratio in rows:
        by_dim[dim].append(ratio)
    dimensions = {}
    for dim, ratios in by_dim.items():
        arr = np.array(ratios)
        counts, edges = np.histogram(np.clip(arr, -1.0, 1.0), bins=20, range=(-1.0, 1.0))
        dimensions[str(dim)] = {
            "ratios": [float(r) for r in arr],
            "median": float(np.median(arr)),
            "mean": float(arr.mean()),
            "histogram": {
                "bin_edges": [float(e) for e in edges],
                "counts": [int(c) for c in counts],
            },
        }
    return {
        "kind": "sparsity",
        "config": config_to_dict(config),
        "dimensions": dimensions,
        "summary": {
            "median_by_dim": {str(d): dimensions[str(d)]["median"] for d in config.dims},
        },
    }


def _gaussian_loglik(points: np.ndarray, labels: np.ndarray) -> tuple[float, int]:
    """Classification log-likelihood of per-cluster Gaussian fits.

    Covariances are maximum-likelihood with 1e-6 diagonal loading; hard
    assignment weights pi_k = n_k / n enter the likelihood, which keeps
    all-singleton labelings from winning on degenerate density spikes.
    """
    n, d = points.shape
    total = 0.0
    ids = np.unique(labels)
    for k in ids:
        block = points[labels == k]
        nk = block.shape[0]
        mu = block.mean(axis=0)
        centered = block - mu
        cov = centered.T @ centered / nk + 1e-6 * np.eye(d)
        sign, logdet = np.linalg.slogdet(cov)
        quad = float(np.sum(centered * np.linalg.solve(cov, centered.T).T))
        total += nk * math.log(nk / n) - 0.5 * (
            nk * (d * math.log(2.0 * math.pi) + logdet) + quad
        )
    k = ids.size
    n_params = k * (d + d * (d + 1) // 2) + (k - 1)
    return total, n_params


def select_lambda(
    points: np.ndarray,
    candidates,
    *,
    h0: float | None = None,
    solver: SolverOptions | None = None,
    criterion: str = "bic",
) -> tuple[float, list[dict]]:
    """Pick the mass parameter by information criterion over a candidate list.

    Each candidate is solved, thresholded into clusters, and scored by BIC
    (or AIC) of per-cluster Gaussian fits; ties go to the smaller lambda.
    """
    candidates = [float(c) for c in candidates]
    if not candidates:
        raise ValueError("candidate list must be nonempty")
    if criterion not in ("bic", "aic"):
        raise ValueError("criterion must be 'bic' or 'aic'")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    for lam in candidates:
        if not n <= lam <= n * n:
            raise ValueError(f"candidate {lam} outside [n, n^2] = [{n}, {n * n}]")
    h0 = h0 if h0 is not None else default_h0(points)
    a = build_matrix(points, AffinityFn("gaussian", h0))
    solver = solver if solver is not None else SolverOptions()
    table = []
    best_lam, best_score = None, math.inf
    for lam in sorted(candidates):
        solution = solve(SdpProblem(affinity=a, lam=lam, options=solver))
        labels = threshold_graph_clusters(solution.z_hat)
        loglik, n_params = _gaussian_loglik(points, labels)
        bic = -2.0 * loglik + n_params * math.log(n)
        aic = -2.0 * loglik + 2.0 * n_params
        table.append(
            {
                "lambda": lam,
                "n_clusters": int(labels.max()),
                "loglik": loglik,
                "bic": bic,
                "aic": aic,
            }
        )
        score = bic if criterion == "bic" else aic
        if score < best_score:
            best_lam, best_score = lam, score
    return best_lam, table


def config_to_dict(config: ExperimentConfig) -> dict:
    """JSON-ready view of the resolved experiment config."""
    from sdpcluster.io import spec_to_dict

    return {
        "spec": spec_to_dict(config.spec) if config.spec is not None else None,
        "trials": config.trials,
        "base_seed": config.base_seed,
        "dims": list(config.dims),
        "p_quasi": config.p_quasi,
        "lambda_mode": config.lambda_mode,
        "h0": config.h0,
        "samples_per_cluster": config.samples_per_cluster,
        "solver": asdict(config.solver),
        "jobs": config.jobs,
    }
