"""Differentiable empirical distance correlation between two sample batches.

Built from double-centered pairwise Euclidean distance matrices:

    dCov  = mean(A * B)        dVar = mean(A * A)
    dCorr = dCov / sqrt(dVar * dVar')

which lies in [0, 1] and equals 1 when the batches coincide.  Used as a
mutual-information surrogate penalty between latent subspaces.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

VAR_FLOOR = 1e-12
_SQRT_EPS = 1e-24  # keeps the sqrt adjoint finite when two rows coincide


class DegenerateBatch(ValueError):
    """A batch with zero distance variance (all rows identical)."""


def _as_batch(z) -> Tensor:
    z = ad.wrap(z)
    if z.data.ndim != 2:
        raise ValueError(f"expected an [N, d] batch, got shape {z.data.shape}")
    if z.data.shape[0] < 2:
        raise ValueError("batch too small: distance correlation needs N >= 2 rows")
    return z


def pairwise_distances(z) -> Tensor:
    """[N, N] Euclidean distance matrix with an exactly-zero diagonal."""
    z = _as_batch(z)
    n, d = z.data.shape
    left = ad.reshape(z, (n, 1, d))
    right = ad.reshape(z, (1, n, d))
    sq = ad.tsum(ad.square(left - right), axis=2)
    eye = np.eye(n, dtype=z.data.dtype)
    return ad.sqrt(sq + eye + _SQRT_EPS) * (1.0 - eye)


def double_center(a: Tensor) -> Tensor:
    row = ad.tmean(a, axis=1, keepdims=True)
    col = ad.tmean(a, axis=0, keepdims=True)
    grand = ad.tmean(a)
    return a - row - col + grand


def double_centered_distances(z) -> Tensor:
    """Double-centered pairwise distance matrix: rows, columns and grand mean all ~0."""
    return double_center(pairwise_distances(z))


def distance_correlation(zc, zd) -> Tensor:
    """Scalar dependence measure in [0, 1]; differentiable w.r.t. both batches.

    Raises :class:`DegenerateBatch` when either batch is constant (zero
    distance variance), which the training loop treats as a zero penalty.
    """
    zc, zd = _as_batch(zc), _as_batch(zd)
    if zc.data.shape[0] != zd.data.shape[0]:
        raise ValueError("batches must have the same number of rows")
    a = double_centered_distances(zc)
    b = double_centered_distances(zd)
    dcov = ad.tmean(a * b)
    dvar_a = ad.tmean(ad.square(a))
    dvar_b = ad.tmean(ad.square(b))
    if float(dvar_a.data) <= VAR_FLOOR:
        raise DegenerateBatch("first batch has zero distance variance (constant rows)")
    if float(dvar_b.data) <= VAR_FLOOR:
        raise DegenerateBatch("second batch has zero distance variance (constant rows)")
    dcov = ad.clip(dcov, lo=0.0)
    denom = ad.sqrt(ad.clip(dvar_a, lo=VAR_FLOOR)) * ad.sqrt(ad.clip(dvar_b, lo=VAR_FLOOR))
    return dcov / denom
