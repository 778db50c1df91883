"""PCA dimensionality reduction with whitening, and its inverse.

The whitening transform is built from the eigendecomposition of the
uncentered sample covariance (expectation form, divisor n_samples):
rows of the transform are the top-k eigenvectors scaled by 1/sqrt of
their eigenvalues, so the whitened training data has identity
covariance. The decomposition itself runs through an SVD of the data
matrix for numerical stability.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import BadK, DimensionMismatch, FormatError, RankDeficient
from .images import PatchSet
from .matrixio import content_hash, format_float, read_matrix, read_meta, write_matrix, write_meta

MIN_EIGENVALUE = 1e-12

TRANSFORM_FILE = "whitening_matrix.ticm"
INVERSE_FILE = "dewhitening_matrix.ticm"
META_FILE = "whitening.meta"


@dataclass(eq=False)
class WhiteningModel:
    """Retained-subspace whitening transform and its pseudo-inverse."""

    transform: np.ndarray       # (k, n_pixels), rows e_i^T / sqrt(lambda_i)
    inverse: np.ndarray         # (n_pixels, k), columns e_i * sqrt(lambda_i)
    eigenvalues: np.ndarray     # (k,), strictly positive, non-increasing
    n_pixels: int
    k: int

    def identity_hash(self) -> str:
        return content_hash(
            "topica-whitening-v1",
            self.k,
            self.n_pixels,
            self.transform,
            self.inverse,
            self.eigenvalues,
        )


def _fix_eigenvector_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip rows so each eigenvector's largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(vectors.shape[0]), idx])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


def fit_whitening(patches: PatchSet, k: int) -> WhiteningModel:
    """Fit the top-k whitening transform to a patch set.

    Parameters
    ----------
    patches : PatchSet
        Training data, one flattened patch per row.
    k : int
        Number of principal components to retain. Must not exceed
        min(n_samples, n_pixels), and the k-th eigenvalue of the sample
        covariance must exceed 1e-12.

    Returns
    -------
    WhiteningModel
        With transform V (k x n_pixels) and inverse V_inv (n_pixels x k)
        such that V @ V_inv = I and the whitened training data has
        identity covariance. Eigenvector signs follow the convention
        that the largest-magnitude entry of each eigenvector is positive.
    """
    data = patches.data
    n_samples, n_pixels = data.shape
    if not 1 <= k <= min(n_samples, n_pixels):
        raise BadK(f"k={k} outside 1..min({n_samples}, {n_pixels})")
    # Singular values of X/sqrt(T) square to eigenvalues of X^T X / T.
    _, svals, vt = np.linalg.svd(data / np.sqrt(n_samples), full_matrices=False)
    eigenvalues = svals[:k] ** 2
    if eigenvalues[-1] <= MIN_EIGENVALUE:
        raise RankDeficient(
            f"eigenvalue {k} of the sample covariance is {eigenvalues[-1]:.3e} <= {MIN_EIGENVALUE}"
        )
    vectors = _fix_eigenvector_signs(vt[:k])
    scale = np.sqrt(eigenvalues)
    return WhiteningModel(
        transform=vectors / scale[:, None],
        inverse=vectors.T * scale[None, :],
        eigenvalues=eigenvalues,
        n_pixels=n_pixels,
        k=k,
    )


def whiten(model: WhiteningModel, patches: PatchSet) -> np.ndarray:
    """Project patches into the whitened space, one row per sample."""
    if patches.n_pixels != model.n_pixels:
        raise DimensionMismatch(
            f"patches have {patches.n_pixels} pixels, model expects {model.n_pixels}"
        )
    return patches.data @ model.transform.T


def dewhiten(model: WhiteningModel, z: np.ndarray) -> np.ndarray:
    """Map whitened rows back to pixel space (pseudo-inverse of whiten)."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != model.k:
        raise DimensionMismatch(f"expected shape (n, {model.k}), got {z.shape}")
    return z @ model.inverse.T


def save_whitening(model: WhiteningModel, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    write_matrix(os.path.join(directory, TRANSFORM_FILE), model.transform)
    write_matrix(os.path.join(directory, INVERSE_FILE), model.inverse)
    write_meta(
        os.path.join(directory, META_FILE),
        {
            "format_version": 1,
            "k": model.k,
            "n_pixels": model.n_pixels,
            "eigenvalues": ",".join(format_float(v) for v in model.eigenvalues),
        },
    )


def load_whitening(directory) -> WhiteningModel:
    meta = read_meta(os.path.join(directory, META_FILE))
    transform = read_matrix(os.path.join(directory, TRANSFORM_FILE))
    inverse = read_matrix(os.path.join(directory, INVERSE_FILE))
    k = int(meta["k"])
    n_pixels = int(meta["n_pixels"])
    eigenvalues = np.array([float(v) for v in meta["eigenvalues"].split(",")])
    if transform.shape != (k, n_pixels) or inverse.shape != (n_pixels, k):
        raise FormatError(f"{directory}: matrix shapes disagree with header")
    if eigenvalues.shape != (k,):
        raise FormatError(f"{directory}: expected {k} eigenvalues, got {eigenvalues.shape[0]}")
    return WhiteningModel(transform, inverse, eigenvalues, n_pixels, k)
