"""Kernel factors from classical transforms: cosine, Haar wavelet and truncated SVD."""

from .dct import dct2, dct_inverse_kernel, dct_kernel, dct_synthesis_factor, idct2
from .factory import fit_spectrum, initial_state, make_kernel_factors
from .haar import (
    HaarBands,
    haar_band_sample,
    haar_matrix,
    haar_merge,
    haar_split,
    haar_synthesis_factor,
    sample_band_mask,
)
from .svd import TruncatedSVD, mode_basis, svd_init, truncated_svd


__all__ = [
    "HaarBands",
    "TruncatedSVD",
    "dct2",
    "dct_inverse_kernel",
    "dct_kernel",
    "dct_synthesis_factor",
    "fit_spectrum",
    "haar_band_sample",
    "haar_matrix",
    "haar_merge",
    "haar_split",
    "haar_synthesis_factor",
    "idct2",
    "initial_state",
    "make_kernel_factors",
    "mode_basis",
    "sample_band_mask",
    "svd_init",
    "truncated_svd",
]
