"""Cluster-matrix estimation by semidefinite relaxation.

Pipeline: pairwise affinities from data, a mass-constrained semidefinite
relaxation solved through its dual eigenvalue problem, a low-dimensional
embedding read off the estimate's leading eigenvectors, and cluster
extraction; plus closed-form expected affinities for Gaussian mixtures and
Monte Carlo harnesses verifying the concentration and recovery bounds.
"""

from sdpcluster.affinity import (
    AffinityFn,
    build_matrix,
    default_h0,
    evaluate,
    expected_matrix,
    lipschitz_constant,
)
from sdpcluster.clustering import (
    cluster_matrix,
    edge_error_rate,
    edge_mass,
    l1_error_normalized,
    mst_clusters,
    theorem1_bound,
    threshold_graph_clusters,
)
from sdpcluster.embedding import Embedding, embed_rows, estimate_k
from sdpcluster.estimator import SdpClusterEmbedding
from sdpcluster.gmm import (
    GaussianMixtureSpec,
    LabeledDataSet,
    SeparationReport,
    check_separation_1d,
    expected_affinity,
    gaussian_quadratic_laplace,
    sample,
    separation_report,
)
from sdpcluster.harness import (
    ExperimentConfig,
    TrialRecord,
    run_concentration_experiment,
    run_recovery_experiment,
    run_sparsity_experiment,
    select_lambda,
    sparsity_gain,
)
from sdpcluster.linalg import (
    EigenDecomposition,
    eig_sym,
    inf_to_one_norm_exact,
    inf_to_one_norm_lower,
    lambda_max_eigenspace,
    lp_quasinorm,
)
from sdpcluster.sdp import (
    DualResult,
    SdpProblem,
    SdpSolution,
    SolverOptions,
    dual_subgradient,
    dual_value,
    minimize_dual,
    recover_primal,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "AffinityFn",
    "DualResult",
    "EigenDecomposition",
    "Embedding",
    "ExperimentConfig",
    "GaussianMixtureSpec",
    "LabeledDataSet",
    "SdpClusterEmbedding",
    "SdpProblem",
    "SdpSolution",
    "SeparationReport",
    "SolverOptions",
    "TrialRecord",
    "build_matrix",
    "check_separation_1d",
    "cluster_matrix",
    "default_h0",
    "dual_subgradient",
    "dual_value",
    "edge_error_rate",
    "edge_mass",
    "eig_sym",
    "embed_rows",
    "estimate_k",
    "evaluate",
    "expected_affinity",
    "expected_matrix",
    "gaussian_quadratic_laplace",
    "inf_to_one_norm_exact",
    "inf_to_one_norm_lower",
    "l1_error_normalized",
    "lambda_max_eigenspace",
    "lipschitz_constant",
    "lp_quasinorm",
    "minimize_dual",
    "mst_clusters",
    "recover_primal",
    "run_concentration_experiment",
    "run_recovery_experiment",
    "run_sparsity_experiment",
    "sample",
    "select_lambda",
    "separation_report",
    "solve",
    "sparsity_gain",
    "theorem1_bound",
    "threshold_graph_clusters",
]
