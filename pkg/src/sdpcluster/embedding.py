"""Spectral embedding read off the estimated cluster matrix.

On the exact cluster matrix the nonzero eigenvalues are the cluster sizes
and the eigenvectors are normalized cluster indicators, so the rows of the
leading-eigenvector matrix collapse each cluster to a single point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sdpcluster.linalg import eig_sym


@dataclass(frozen=True)
class Embedding:
    """Row i of coords is the embedded point of sample i."""

    coords: np.ndarray
    k_hat: int


def estimate_k(values, max_k: int | None = None) -> int:
    """Number of clusters from the largest relative eigengap.

    values must be sorted descending. The gap at position j is
    (values_j - values_{j+1}) / (|values_j| + 1e-12) for 1 <= j <
    min(max_k, n); ties go to the smaller j. Default max_k is ceil(n/2).
    """
    values = np.asarray(values, dtype=float).ravel()
    n = values.size
    if n < 2:
        return 1
    if np.any(np.diff(values) > 1e-9 * (1.0 + np.abs(values[:-1]))):
        raise ValueError("values must be sorted in descending order")
    if max_k is None:
        max_k = math.ceil(n / 2)
    limit = min(int(max_k), n)
    if limit < 2:
        return 1
    head = values[: limit - 1]
    gaps = (head - values[1:limit]) / (np.abs(head) + 1e-12)
    return int(np.argmax(gaps)) + 1


def embed_rows(z_hat: np.ndarray, k_hat: int) -> Embedding:
    """Embed each sample as its coordinates in the top k_hat eigenvectors."""
    dec = eig_sym(z_hat)
    n = dec.values.size
    if not 1 <= k_hat <= n:
        raise ValueError(f"k_hat must be in [1, {n}], got {k_hat}")
    return Embedding(coords=dec.vectors[:, :k_hat].copy(), k_hat=int(k_hat))
