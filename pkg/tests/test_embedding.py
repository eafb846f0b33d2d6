import numpy as np
import pytest

from sdpcluster.clustering import cluster_matrix
from sdpcluster.embedding import embed_rows, estimate_k
from sdpcluster.linalg import eig_sym


class TestEstimateK:
    def test_block_spectrum(self):
        # eigenvalues of blockdiag(ones(3), ones(2)) are the cluster sizes
        values = eig_sym(cluster_matrix([1, 1, 1, 2, 2])).values
        assert np.allclose(values, [3, 2, 0, 0, 0], atol=1e-9)
        assert estimate_k(values) == 2

    def test_dominant_first_gap(self):
        assert estimate_k([5.0, 0.01, 0.005]) == 1

    def test_all_equal(self):
        assert estimate_k([2.0, 2.0, 2.0, 2.0]) == 1

    def test_short_input(self):
        assert estimate_k([3.0]) == 1
        assert estimate_k([]) == 1

    def test_max_k_limits_candidates(self):
        assert estimate_k([3.0, 2.0, 0.0, 0.0, 0.0], max_k=2) == 1

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            estimate_k([1.0, 2.0, 0.5])

    def test_cluster_size_spectra(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            sizes = rng.permutation([2, 3, 4, 6])[: rng.integers(2, 5)]
            labels = np.repeat(np.arange(1, len(sizes) + 1), sizes)
            values = eig_sym(cluster_matrix(labels)).values
            assert estimate_k(values) == len(sizes)


class TestEmbedRows:
    def test_block_matrix_geometry(self):
        z = cluster_matrix([1, 1, 2, 2, 2])
        emb = embed_rows(z, 2)
        coords = emb.coords
        # rows identical within clusters
        assert np.allclose(coords[0], coords[1], atol=1e-9)
        assert np.allclose(coords[2], coords[3], atol=1e-9)
        assert np.allclose(coords[3], coords[4], atol=1e-9)
        # top eigenvector is the larger cluster's indicator
        assert np.allclose(coords[0], [0.0, 1 / np.sqrt(2)], atol=1e-9)
        assert np.allclose(coords[2], [1 / np.sqrt(3), 0.0], atol=1e-9)
        # cross-cluster rows orthogonal
        assert abs(coords[0] @ coords[2]) <= 1e-9

    def test_unit_columns(self):
        z = cluster_matrix([1, 1, 2, 2, 2])
        emb = embed_rows(z, 3)
        assert np.allclose(np.linalg.norm(emb.coords, axis=0), 1.0, atol=1e-8)

    def test_identity_documents_degenerate_case(self):
        emb = embed_rows(np.eye(4), 1)
        col = emb.coords[:, 0]
        assert np.linalg.norm(col) == pytest.approx(1.0)
        assert np.sum(np.abs(col) > 1e-9) == 1  # a single basis vector

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(1)
        z = cluster_matrix([1, 1, 1, 2, 2, 3, 3, 3, 3])
        perm = rng.permutation(9)
        a = embed_rows(z, 3).coords
        b = embed_rows(z[np.ix_(perm, perm)], 3).coords
        # same eigenvalues, so columns match up to sign; compare row geometry
        assert np.allclose(np.abs(a[perm]), np.abs(b), atol=1e-8)

    def test_k_range(self):
        z = cluster_matrix([1, 1, 2])
        with pytest.raises(ValueError):
            embed_rows(z, 0)
        with pytest.raises(ValueError):
            embed_rows(z, 4)

    def test_distinct_cluster_points(self):
        # distinct sizes: embedded points take exactly K values and the
        # representatives stay at least 1/sqrt(max size) apart
        labels = [1, 1, 2, 2, 2, 2, 3, 3, 3]
        z = cluster_matrix(labels)
        emb = embed_rows(z, 3)
        rows = {tuple(np.round(r, 9)) for r in emb.coords}
        assert len(rows) == 3
        reps = [emb.coords[i] for i in (0, 2, 6)]
        floor = 1 / np.sqrt(4)
        for i in range(3):
            for j in range(i + 1, 3):
                assert np.linalg.norm(reps[i] - reps[j]) >= floor - 1e-9
