"""Ground-truth cluster matrices, cluster extraction, and error metrics."""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from sdpcluster.gmm import SeparationReport


def _validate_labels(labels) -> np.ndarray:
    labels = np.asarray(labels, dtype=int).ravel()
    if labels.size == 0:
        raise ValueError("labels must be nonempty")
    return labels


def cluster_matrix(labels) -> np.ndarray:
    """Binary matrix with 1 at (i, j) iff samples i and j share a label."""
    labels = _validate_labels(labels)
    return (labels[:, None] == labels[None, :]).astype(float)


def edge_mass(labels) -> int:
    """Total entry sum of the cluster matrix, sum_k n_k^2."""
    labels = _validate_labels(labels)
    _, counts = np.unique(labels, return_counts=True)
    return int(np.sum(counts**2))


def _components_to_labels(n: int, neighbors) -> np.ndarray:
    # Components numbered 1, 2, ... by their smallest member index.
    labels = np.zeros(n, dtype=int)
    current = 0
    for start in range(n):
        if labels[start]:
            continue
        current += 1
        queue = deque([start])
        labels[start] = current
        while queue:
            i = queue.popleft()
            for j in neighbors(i):
                if not labels[j]:
                    labels[j] = current
                    queue.append(j)
    return labels


def threshold_graph_clusters(z_hat: np.ndarray) -> np.ndarray:
    """Labels from connected components of the graph {(i, j): z_ij > 1/2}.

    The threshold is strict, so entries equal to 1/2 give no edge.
    """
    z = np.asarray(z_hat, dtype=float)
    if z.ndim != 2 or z.shape[0] != z.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {z.shape}")
    n = z.shape[0]
    adj = z > 0.5
    np.fill_diagonal(adj, False)
    return _components_to_labels(n, lambda i: np.flatnonzero(adj[i]))


def mst_clusters(points: np.ndarray, k: int) -> np.ndarray:
    """Cut the k-1 largest edges of the Euclidean minimum spanning tree.

    The tree is grown with Prim's method in O(n^2); ties among edge weights
    are broken by lexicographic endpoint order for determinism.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if n == 1:
        return np.array([1])
    sq = np.sum(pts**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    np.clip(d2, 0.0, None, out=d2)

    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = d2[0].copy()
    parent = np.zeros(n, dtype=int)
    edges = []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        j = int(np.argmin(cand))
        i = int(parent[j])
        edges.append((float(cand[j]), min(i, j), max(i, j)))
        in_tree[j] = True
        upd = d2[j] < best
        best[upd] = d2[j][upd]
        parent[upd] = j

    edges.sort()
    kept = edges[: n - k]
    adj = [[] for _ in range(n)]
    for _, i, j in kept:
        adj[i].append(j)
        adj[j].append(i)
    return _components_to_labels(n, lambda i: adj[i])


def edge_error_rate(z_hat: np.ndarray, z_bar: np.ndarray) -> float:
    """Fraction of the n(n-1)/2 pairs whose thresholded edge is wrong."""
    z_hat = np.asarray(z_hat, dtype=float)
    z_bar = np.asarray(z_bar, dtype=float)
    if z_hat.shape != z_bar.shape:
        raise ValueError(f"shape mismatch: {z_hat.shape} vs {z_bar.shape}")
    n = z_hat.shape[0]
    if n < 2:
        return 0.0
    iu = np.triu_indices(n, k=1)
    pred = (z_hat[iu] > 0.5).astype(float)
    return float(np.mean(np.abs(pred - z_bar[iu])))


def l1_error_normalized(z_hat: np.ndarray, z_bar: np.ndarray) -> float:
    """n^-2 sum_ij |z_hat_ij - z_bar_ij| over all entries."""
    z_hat = np.asarray(z_hat, dtype=float)
    z_bar = np.asarray(z_bar, dtype=float)
    if z_hat.shape != z_bar.shape:
        raise ValueError(f"shape mismatch: {z_hat.shape} vs {z_bar.shape}")
    n = z_hat.shape[0]
    return float(np.abs(z_hat - z_bar).sum() / (n * n))


def theorem1_bound(report: SeparationReport, t: float, n: int) -> float:
    """Tail bound min(1, 2 exp(-((t - t0)/c)^2 n)) on P(||Zhat - Zbar||_1 > n^2 t).

    Requires a separated report and t > t0; below t0 the bound is vacuous.
    """
    if not report.separated:
        raise ValueError("bound requires a separated report (p > q)")
    if not t > report.t0:
        raise ValueError(f"bound is vacuous for t <= t0 ({t} <= {report.t0})")
    if n < 1:
        raise ValueError("n must be a positive integer")
    return min(1.0, 2.0 * math.exp(-(((t - report.t0) / report.c) ** 2) * n))
