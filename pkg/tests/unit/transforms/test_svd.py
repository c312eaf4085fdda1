"""Tests for truncated SVD initialization."""

import numpy as np
import pytest

from nsdlab.core.exceptions import DimensionError, RangeError
from nsdlab.transforms import mode_basis, svd_init, truncated_svd


class TestTruncatedSvd:
    """Test low-rank factorization."""

    def test_rank_one_is_exact(self):
        matrix = np.outer([1.0, 2.0, 3.0], [4.0, -1.0])
        result = truncated_svd(matrix, 1)
        np.testing.assert_allclose(result.reconstruct(), matrix, atol=1e-12)
        assert result.tail_energy() == pytest.approx(0.0, abs=1e-20)

    def test_tail_energy_is_reconstruction_error(self):
        matrix = np.random.default_rng(0).normal(size=(6, 20))
        result = truncated_svd(matrix, 3)
        assert result.rank == 3
        assert result.kernel.shape == (6, 3)
        assert result.spectrum.shape == (3, 20)
        error = float(np.sum((matrix - result.reconstruct()) ** 2))
        assert result.tail_energy() == pytest.approx(error)

    @pytest.mark.parametrize("rank", [0, 7])
    def test_rank_out_of_range(self, rank):
        with pytest.raises(RangeError, match="outside 1..6"):
            truncated_svd(np.ones((6, 20)), rank)

    def test_needs_matrix(self):
        with pytest.raises(DimensionError):
            truncated_svd(np.ones(4), 1)


class TestSvdInit:
    """Test image-batch factorization."""

    def test_flattens_batch(self):
        images = np.random.default_rng(1).normal(size=(5, 2, 3, 3))
        result = svd_init(images, 2)
        assert result.spectrum.shape == (2, 18)
        with pytest.raises(DimensionError):
            svd_init(images[0], 2)

    def test_mode_basis_rows_are_orthonormal(self):
        images = np.random.default_rng(2).normal(size=(4, 1, 6, 5))
        basis = mode_basis(images, 2, 3)
        assert basis.shape == (3, 6)
        np.testing.assert_allclose(basis @ basis.T, np.eye(3), atol=1e-10)

    def test_mode_basis_matches_unfolding_svd(self):
        images = np.random.default_rng(3).normal(size=(4, 2, 6, 5))
        basis = mode_basis(images, 3, 2)
        unfolded = np.moveaxis(images, 3, -1).reshape(-1, 5)
        _, _, vt = np.linalg.svd(unfolded, full_matrices=False)
        np.testing.assert_allclose(basis.T @ basis, vt[:2].T @ vt[:2], atol=1e-10)
