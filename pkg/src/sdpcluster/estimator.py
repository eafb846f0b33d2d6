"""Scikit-learn style front end for the full pipeline.

fit builds the affinity matrix, solves the semidefinite relaxation for the
cluster-matrix estimate, embeds the samples through its leading
eigenvectors, and extracts labels. There is no out-of-sample extension, so
like other spectral methods the estimator only offers fit, fit_predict and
fit_transform.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils import check_array

from sdpcluster.affinity import AffinityFn, build_matrix, default_h0
from sdpcluster.clustering import mst_clusters, threshold_graph_clusters
from sdpcluster.embedding import embed_rows, estimate_k
from sdpcluster.harness import select_lambda
from sdpcluster.linalg import eig_sym
from sdpcluster.sdp import SdpProblem, SolverOptions, solve


class SdpClusterEmbedding(ClusterMixin, BaseEstimator):
    """Cluster-matrix estimation by semidefinite relaxation, with embedding.

    Parameters
    ----------
    lam : float or "auto"
        Total mass of the estimated cluster graph, in [n, n^2]. "auto"
        scores a log-spaced candidate grid by BIC.
    affinity : str
        One of "gaussian", "power_exponential", "rational", "logistic".
    h0 : float or None
        Bandwidth; None uses the data heuristic.
    a : float or None
        Shape parameter for the non-gaussian affinity kinds.
    n_clusters : int or "auto"
        Embedding dimension; "auto" uses the largest relative eigengap.
    cluster_method : str
        "threshold" cuts the estimate at 1/2; "mst" removes the largest
        edges of the spanning tree over the embedded points.
    random_state : int
        Seed for the solver restarts and lambda selection.

    Attributes
    ----------
    labels_ : ndarray of shape (n,), integer labels 1..K
    cluster_matrix_ : ndarray of shape (n, n), the estimate in [0, 1]
    embedding_ : ndarray of shape (n, n_clusters_)
    n_clusters_ : int
    lambda_ : float, the mass actually used
    solution_ : SdpSolution with duality diagnostics
    """

    def __init__(
        self,
        lam="auto",
        affinity="gaussian",
        h0=None,
        a=None,
        n_clusters="auto",
        cluster_method="threshold",
        n_lambda_candidates=8,
        grad_tol=1e-5,
        max_iter=500,
        bfgs_memory=20,
        restarts=3,
        eigenspace_tol=1e-8,
        recovery_refine_iters=200,
        random_state=0,
    ):
        self.lam = lam
        self.affinity = affinity
        self.h0 = h0
        self.a = a
        self.n_clusters = n_clusters
        self.cluster_method = cluster_method
        self.n_lambda_candidates = n_lambda_candidates
        self.grad_tol = grad_tol
        self.max_iter = max_iter
        self.bfgs_memory = bfgs_memory
        self.restarts = restarts
        self.eigenspace_tol = eigenspace_tol
        self.recovery_refine_iters = recovery_refine_iters
        self.random_state = random_state

    def _solver_options(self) -> SolverOptions:
        return SolverOptions(
            grad_tol=self.grad_tol,
            max_iter=self.max_iter,
            bfgs_memory=self.bfgs_memory,
            restarts=self.restarts,
            eigenspace_tol=self.eigenspace_tol,
            recovery_refine_iters=self.recovery_refine_iters,
            seed=self.random_state,
        )

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        n = X.shape[0]
        if n < 2:
            raise ValueError("need at least two samples")
        h0 = self.h0 if self.h0 is not None else default_h0(X)
        fn = AffinityFn(self.affinity, h0, self.a)
        a = build_matrix(X, fn)
        options = self._solver_options()
        if self.lam == "auto":
            candidates = np.geomspace(n, n * n, self.n_lambda_candidates)
            lam, table = select_lambda(X, candidates, h0=h0, solver=options)
            self.lambda_selection_ = table
        else:
            lam = float(self.lam)
        solution = solve(SdpProblem(affinity=a, lam=lam, options=options))
        values = eig_sym(solution.z_hat).values
        if self.n_clusters == "auto":
            k_hat = estimate_k(values)
        else:
            k_hat = int(self.n_clusters)
        embedding = embed_rows(solution.z_hat, k_hat)
        if self.cluster_method == "threshold":
            labels = threshold_graph_clusters(solution.z_hat)
        elif self.cluster_method == "mst":
            labels = mst_clusters(embedding.coords, k_hat)
        else:
            raise ValueError(f"unknown cluster_method {self.cluster_method!r}")
        self.h0_ = h0
        self.affinity_matrix_ = a
        self.lambda_ = lam
        self.solution_ = solution
        self.cluster_matrix_ = solution.z_hat
        self.n_clusters_ = k_hat
        self.embedding_ = embedding.coords
        self.labels_ = labels
        return self

    def fit_transform(self, X, y=None):
        """Fit and return the embedded coordinates."""
        return self.fit(X).embedding_
