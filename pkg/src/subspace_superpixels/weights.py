"""Spatial weight matrix W and the column-group penalty ||ZW||_{2,1}."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class SpatialWeights:
    """Adjacency-derived weights.

    Attributes
    ----------
    omega_lower : (n, n) array
        Strictly lower-triangular part of the adjacency matrix.
    degree : (n, n) array
        Diagonal matrix of column sums of ``omega_lower``.
    w : (n, n) array
        ``omega_lower - degree``. Every column sums to zero, so column j
        of ZW is the sum of differences z_i - z_j over neighbors i > j.
    """

    omega_lower: np.ndarray
    degree: np.ndarray
    w: np.ndarray

    @property
    def n(self):
        return self.w.shape[0]


def build_weight_matrix(omega):
    """Build :class:`SpatialWeights` from a binary symmetric adjacency."""
    omega = np.asarray(omega)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise InvalidInputError("adjacency must be square")
    if not np.all((omega == 0) | (omega == 1)):
        raise InvalidInputError("adjacency must be binary")
    if not np.array_equal(omega, omega.T):
        raise InvalidInputError("adjacency must be symmetric")
    if np.any(np.diag(omega) != 0):
        raise InvalidInputError("adjacency must have a zero diagonal")

    lower = np.tril(omega, k=-1).astype(np.float64)
    degree = np.diag(lower.sum(axis=0))
    w = lower - degree
    for arr in (lower, degree, w):
        arr.setflags(write=False)
    return SpatialWeights(omega_lower=lower, degree=degree, w=w)


def l21_norm(m):
    """Sum of the Euclidean norms of the columns of ``m``."""
    return float(np.linalg.norm(m, axis=0).sum())


def spatial_penalty(z, weights):
    """Evaluate ||ZW||_{2,1}."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape != weights.w.shape:
        raise InvalidInputError(
            f"Z of shape {z.shape} does not match weights {weights.w.shape}"
        )
    return l21_norm(z @ weights.w)
