"""Diagonal-Gaussian and Bernoulli densities, KLs, and reconstruction losses.

Everything reduces over the last axis, so a [N, d] batch yields per-instance
[N] values and a bare [d] vector yields a scalar.  Inputs may be Tensors or
plain arrays; outputs are Tensors (differentiable where the inputs were).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

PROB_FLOOR = 1e-7
STD_FLOOR = 1e-4
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class DiagGaussian:
    """Mean/std pair; std must be strictly positive elementwise."""

    mean: Tensor
    std: Tensor

    def __post_init__(self):
        self.mean = ad.wrap(self.mean)
        self.std = ad.wrap(self.std)
        if self.mean.data.shape != self.std.data.shape:
            raise ValueError("mean and std must have the same shape")
        if np.any(self.std.data <= 0):
            raise ValueError("std must be strictly positive")

    @property
    def dim(self) -> int:
        return self.mean.data.shape[-1]


@dataclass(frozen=True)
class IsotropicPrior:
    """Zero-mean Gaussian with scalar std ``sigma`` in each of ``dim`` coordinates."""

    dim: int
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


def clamp_prob(p) -> Tensor:
    return ad.clip(ad.wrap(p), PROB_FLOOR, 1.0 - PROB_FLOOR)


def reparam_sample(q: DiagGaussian, noise) -> Tensor:
    """mean + std * noise for standard-normal ``noise`` of matching shape."""
    noise = np.asarray(noise)
    if noise.shape != q.mean.data.shape:
        raise ValueError(f"noise shape {noise.shape} != distribution shape {q.mean.data.shape}")
    return q.mean + q.std * noise


def kl_diag_vs_isotropic(q: DiagGaussian, p: IsotropicPrior) -> Tensor:
    """KL( N(mu, diag sigma^2) || N(0, s^2 I) ), summed over coordinates."""
    if q.dim != p.dim:
        raise ValueError(f"dimension mismatch: q has {q.dim}, prior has {p.dim}")
    s2 = p.sigma * p.sigma
    term = (np.log(p.sigma) - ad.log(q.std)
            + (ad.square(q.std) + ad.square(q.mean)) / (2.0 * s2)
            - 0.5)
    return ad.tsum(term, axis=-1)


def kl_bernoulli(q_prob, p_prob) -> Tensor:
    """KL( Bernoulli(pi) || Bernoulli(alpha) ), elementwise over pi."""
    pi = clamp_prob(q_prob)
    alpha = clamp_prob(p_prob)
    return pi * (ad.log(pi) - ad.log(alpha)) + (1.0 - pi) * (
        ad.log(1.0 - pi) - ad.log(1.0 - alpha)
    )


def bernoulli_logpmf(y, alpha: float) -> np.ndarray:
    """log Bernoulli(y | alpha) for hard labels y in {0,1}."""
    y = np.asarray(y, dtype=float)
    return y * np.log(alpha) + (1.0 - y) * np.log(1.0 - alpha)


def gaussian_recon_nll(x, mean, shared_logvar) -> Tensor:
    """Negative log-likelihood of ``x`` under N(mean, exp(logvar)), one variance for all pixels."""
    x = ad.wrap(x)
    mean = ad.wrap(mean)
    logvar = ad.wrap(shared_logvar)
    d = x.data.shape[-1]
    sq = ad.tsum(ad.square(x - mean), axis=-1)
    return 0.5 * (d * (LOG_2PI + logvar) + sq * ad.exp(-logvar))


def bernoulli_recon_nll(x, prob) -> Tensor:
    """Negative log-likelihood of binary ``x`` under elementwise Bernoulli(prob)."""
    x = ad.wrap(x)
    p = clamp_prob(prob)
    ll = x * ad.log(p) + (1.0 - x) * ad.log(1.0 - p)
    return -ad.tsum(ll, axis=-1)


def gaussian_logpdf(x: np.ndarray, mean: np.ndarray, std) -> np.ndarray:
    """Plain-numpy diagonal Gaussian log-density, summed over the last axis."""
    x = np.asarray(x, dtype=float)
    std = np.broadcast_to(np.asarray(std, dtype=float), x.shape)
    z = (x - mean) / std
    return -0.5 * np.sum(z * z + LOG_2PI + 2.0 * np.log(std), axis=-1)
