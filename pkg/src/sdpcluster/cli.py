"""Command-line entry point.

Subcommands: generate (spec -> dataset CSV), solve (dataset -> estimated
cluster matrix + diagnostics), embed-cluster (matrix -> labels + embedding),
experiment (recovery | concentration | sparsity -> report files).

Exit codes: 0 success, 1 usage or input error, 2 solver finished without a
convergence certificate but produced a usable solution. Reports never
contain wall-clock times; those go to a separate timings sidecar so that
seeded reruns stay byte-identical.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from sdpcluster.affinity import AffinityFn, build_matrix, default_h0, lipschitz_constant
from sdpcluster.clustering import edge_mass, mst_clusters, threshold_graph_clusters
from sdpcluster.embedding import embed_rows, estimate_k
from sdpcluster.gmm import sample, separation_report
from sdpcluster.harness import (
    ExperimentConfig,
    recovery_report,
    run_concentration_experiment,
    run_recovery_experiment,
    run_sparsity_experiment,
    select_lambda,
)
from sdpcluster.linalg import eig_sym
from sdpcluster.sdp import SdpProblem, SolverOptions, solve
from sdpcluster import io

AFFINITY_FLAGS = {
    "gaussian": "gaussian",
    "powerexp": "power_exponential",
    "rational": "rational",
    "logistic": "logistic",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


class CliError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sdpcluster", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="sample a labeled dataset from a mixture spec")
    gen.add_argument("--spec", required=True, help="mixture spec JSON file")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output dataset CSV")

    slv = sub.add_parser("solve", help="estimate the cluster matrix of a dataset")
    slv.add_argument("--data", required=True, help="dataset CSV (label column ignored)")
    slv.add_argument("--lambda", dest="lam", default="auto",
                     help="total mass in [n, n^2], or 'auto' for a selection grid")
    slv.add_argument("--h0", type=float, default=None,
                     help="affinity bandwidth (default: data heuristic)")
    slv.add_argument("--affinity", choices=sorted(AFFINITY_FLAGS), default="gaussian")
    slv.add_argument("--a", type=float, default=None, help="shape for non-gaussian kinds")
    slv.add_argument("--seed", type=int, default=0)
    slv.add_argument("--grad-tol", type=float, default=1e-5)
    slv.add_argument("--max-iter", type=int, default=500)
    slv.add_argument("--restarts", type=int, default=3)
    slv.add_argument("--out", required=True, help="output prefix")
    slv.add_argument("--format", choices=("csv", "bin"), default="csv")

    emb = sub.add_parser("embed-cluster", help="embed and cluster an estimated matrix")
    emb.add_argument("--zhat", required=True, help="matrix file (csv or bin)")
    emb.add_argument("--k", default="auto", help="cluster count, or 'auto' for the eigengap rule")
    emb.add_argument("--method", choices=("threshold", "mst"), default="threshold")
    emb.add_argument("--mst-on", choices=("embedded", "raw"), default="embedded",
                     help="point set for the spanning-tree method")
    emb.add_argument("--data", default=None, help="dataset CSV, required for --mst-on raw")
    emb.add_argument("--format", choices=("csv", "bin"), default=None)
    emb.add_argument("--out", required=True, help="output prefix")

    exp = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    exp.add_argument("kind", choices=("recovery", "concentration", "sparsity"))
    exp.add_argument("--config", required=True, help="experiment config JSON")
    exp.add_argument("--out", required=True, help="output directory")
    exp.add_argument("--seed", type=int, default=None, help="override base_seed")
    exp.add_argument("--jobs", type=int, default=1)
    exp.add_argument("--svg", action="store_true",
                     help="emit an affinity heatmap of the first trial")
    return parser


def _require_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"input file not found: {p}")
    return p


def cmd_generate(args) -> int:
    spec = io.read_spec_json(_require_file(args.spec))
    data = sample(spec, args.seed)
    io.write_dataset_csv(args.out, data.points, data.labels)
    h0 = default_h0(data.points)
    fn = AffinityFn("gaussian", h0)
    rep = separation_report(spec, h0, lipschitz_constant(fn))
    lam0 = edge_mass(data.labels)
    print(f"n={spec.total_size} d={spec.dim} K={spec.n_clusters} lambda0={lam0}")
    print(f"h0={h0:.6g} p={rep.p:.6g} q={rep.q:.6g} t0={rep.t0:.6g} separated={rep.separated}")
    print(f"wrote {args.out}")
    return 0


def _make_affinity(args, points) -> AffinityFn:
    kind = AFFINITY_FLAGS[args.affinity]
    h0 = args.h0 if args.h0 is not None else default_h0(points)
    if kind == "gaussian":
        if args.a is not None:
            raise CliError("--a applies only to non-gaussian affinity kinds")
        return AffinityFn(kind, h0)
    if args.a is None:
        raise CliError(f"--affinity {args.affinity} needs a shape via --a")
    return AffinityFn(kind, h0, args.a)


def cmd_solve(args) -> int:
    points, _ = io.read_dataset_csv(_require_file(args.data))
    n = points.shape[0]
    fn = _make_affinity(args, points)
    a = build_matrix(points, fn)
    options = SolverOptions(
        grad_tol=args.grad_tol, max_iter=args.max_iter, restarts=args.restarts,
        seed=args.seed,
    )
    selection_table = None
    if args.lam == "auto":
        candidates = np.geomspace(n, n * n, 8)
        lam, selection_table = select_lambda(points, candidates, h0=fn.h0, solver=options)
    else:
        try:
            lam = float(args.lam)
        except ValueError:
            raise CliError(f"--lambda must be a number or 'auto', got {args.lam!r}")
        if not n <= lam <= n * n:
            raise CliError(f"--lambda outside [n, n^2] = [{n}, {n * n}]")
    solution = solve(SdpProblem(affinity=a, lam=lam, options=options))
    prefix = args.out
    matrix_path = f"{prefix}.zhat.{args.format}"
    if args.format == "bin":
        io.write_matrix_bin(matrix_path, solution.z_hat)
    else:
        io.write_matrix_csv(matrix_path, solution.z_hat)
    diagnostics = {
        "config": {
            "data": str(args.data),
            "lambda": lam,
            "lambda_mode": "auto" if args.lam == "auto" else "fixed",
            "affinity": args.affinity,
            "h0": fn.h0,
            "a": fn.a,
            "seed": args.seed,
            "solver": asdict(options),
            "format": args.format,
        },
        "n": n,
        "dual_value": solution.dual_value,
        "primal_value": solution.primal_value,
        "duality_gap": solution.duality_gap,
        "residuals": solution.residuals,
        "residuals_before_clip": solution.residuals_before_clip,
        "iterations": solution.iterations,
        "converged": solution.converged,
        "eigenspace_dim": solution.eigenspace_dim,
    }
    if selection_table is not None:
        diagnostics["lambda_selection"] = selection_table
    io.write_json_report(f"{prefix}.diagnostics.json", diagnostics)
    print(f"lambda={lam:.6g} dual={solution.dual_value:.6g} "
          f"primal={solution.primal_value:.6g} converged={solution.converged}")
    print(f"wrote {matrix_path} and {prefix}.diagnostics.json")
    return 0 if solution.converged else 2


def cmd_embed_cluster(args) -> int:
    z_hat = io.read_matrix_auto(_require_file(args.zhat), args.format)
    if z_hat.ndim != 2 or z_hat.shape[0] != z_hat.shape[1]:
        raise CliError(f"matrix in {args.zhat} is not square: {z_hat.shape}")
    n = z_hat.shape[0]
    dec = eig_sym(z_hat)
    if args.k == "auto":
        k_hat = estimate_k(dec.values)
    else:
        try:
            k_hat = int(args.k)
        except ValueError:
            raise CliError(f"--k must be an integer or 'auto', got {args.k!r}")
        if not 1 <= k_hat <= n:
            raise CliError(f"--k outside [1, n] = [1, {n}]")
    embedding = embed_rows(z_hat, k_hat)
    if args.method == "threshold":
        labels = threshold_graph_clusters(z_hat)
    else:
        if args.mst_on == "raw":
            if args.data is None:
                raise CliError("--mst-on raw needs --data")
            points, _ = io.read_dataset_csv(_require_file(args.data))
            if points.shape[0] != n:
                raise CliError(f"--data has {points.shape[0]} rows, matrix has {n}")
            labels = mst_clusters(points, k_hat)
        else:
            labels = mst_clusters(embedding.coords, k_hat)
    io.write_labels_csv(f"{args.out}.labels.csv", labels)
    io.write_embedding_csv(f"{args.out}.embedding.csv", embedding.coords, labels)
    print(f"k_hat={k_hat} clusters={int(labels.max())} method={args.method}")
    print(f"wrote {args.out}.labels.csv and {args.out}.embedding.csv")
    return 0


def _config_from_json(path, seed_override, jobs) -> ExperimentConfig:
    import json

    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {
        "spec", "trials", "base_seed", "dims", "p_quasi", "lambda_mode",
        "h0", "samples_per_cluster", "solver", "jobs",
    }
    unknown = set(raw) - known
    if unknown:
        raise CliError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(raw)
    if kwargs.get("spec") is not None:
        kwargs["spec"] = io.spec_from_dict(kwargs["spec"])
    if kwargs.get("dims") is not None:
        kwargs["dims"] = tuple(kwargs["dims"])
    if kwargs.get("solver") is not None:
        kwargs["solver"] = SolverOptions(**kwargs["solver"])
    if seed_override is not None:
        kwargs["base_seed"] = seed_override
    kwargs["jobs"] = jobs
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid experiment config: {exc}") from exc


def _first_trial_affinity(config: ExperimentConfig):
    if config.spec is None:
        return None
    data = sample(config.spec, config.base_seed)
    h0 = config.h0 if config.h0 is not None else default_h0(data.points)
    return build_matrix(data.points, AffinityFn("gaussian", h0))


def cmd_experiment(args) -> int:
    config = _config_from_json(_require_file(args.config), args.seed, args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "recovery":
        records = run_recovery_experiment(config)
        report = recovery_report(config, records)
        fields = ["seed", "n", "d", "pi_n", "l1_normalized", "t0",
                  "inf1_lower_normalized", "sparsity_ratio", "duality_gap"]
        io.write_csv_rows(
            out / "trials.csv", fields,
            [[getattr(r, f) for f in fields] for r in records],
        )
        io.write_csv_rows(
            out / "timings.csv", ["seed", "runtime_ms"],
            [[r.seed, r.runtime_ms] for r in records],
        )
    elif args.kind == "concentration":
        report = run_concentration_experiment(config)
        io.write_csv_rows(
            out / "trials.csv", ["seed", "norm_normalized", "exact"],
            [[t["seed"], t["norm_normalized"], t["exact"]] for t in report["trials"]],
        )
    else:
        report = run_sparsity_experiment(config)
        rows = []
        for dim_key, entry in sorted(report["dimensions"].items(), key=lambda kv: int(kv[0])):
            for trial, ratio in enumerate(entry["ratios"]):
                rows.append([int(dim_key), trial, ratio])
            hist = entry["histogram"]
            io.write_csv_rows(
                out / f"histogram_d{dim_key}.csv", ["bin_left", "bin_right", "count"],
                [
                    [hist["bin_edges"][i], hist["bin_edges"][i + 1], hist["counts"][i]]
                    for i in range(len(hist["counts"]))
                ],
            )
        io.write_csv_rows(out / "trials.csv", ["dim", "trial", "ratio"], rows)
    io.write_json_report(out / "report.json", report)
    if args.svg:
        a = _first_trial_affinity(config)
        if a is not None and a.shape[0] <= io.SVG_MAX_N:
            io.svg_heatmap(out / "affinity.svg", a)
    print(f"wrote report to {out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "generate": cmd_generate,
        "solve": cmd_solve,
        "embed-cluster": cmd_embed_cluster,
        "experiment": cmd_experiment,
    }
    try:
        return handlers[args.command](args)
    except (CliError, ValueError, OSError) as exc:
        print(f"sdpcluster {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
