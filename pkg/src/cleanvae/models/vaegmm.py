"""Semi-supervised VAE with a two-component Gaussian-mixture prior on z.

The prior p(z|y) puts a tight component on inliers and a wide one on outliers
(sigma_y1 < sigma_y0); a classifier on raw pixels infers y, and the latent
encoder conditions on the label appended to its input.  Scoring uses the
classifier; repair decodes the y=1-conditioned posterior mean.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..distributions import (
    IsotropicPrior,
    bernoulli_logpmf,
    clamp_prob,
    kl_bernoulli,
    kl_diag_vs_isotropic,
    reparam_sample,
)
from ..nn import dense, mlp_params
from .base import BatchData, GaussianEncoder, PixelDecoder, StepContext, as_pixels, chunks
from .cvae import _with_label


@dataclass
class VaegmmHyper:
    latent_dim: int = 15
    sigma_y1: float = 0.9
    sigma_y0: float = 5.0
    alpha: float = 0.6
    beta: float = 1000.0
    kl_ramp_ratio: float = 0.5
    hidden: tuple = (200, 100, 50)

    def validate(self) -> "VaegmmHyper":
        if not self.sigma_y1 < self.sigma_y0:
            raise ValueError(
                f"sigma_y1 must be < sigma_y0, got {self.sigma_y1} >= {self.sigma_y0}"
            )
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0,1)")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        return self


class MixturePriorVAE:
    kind = "vaegmm"

    def __init__(self, n_pixels: int, pixel_kind: str, hyper: VaegmmHyper,
                 rng: np.random.Generator, dtype=np.float64):
        hyper.validate()
        self.n_pixels = n_pixels
        self.pixel_kind = pixel_kind
        self.hyper = hyper
        self.dtype = dtype
        self.encoder = GaussianEncoder(rng, n_pixels + 1, hyper.hidden, hyper.latent_dim, dtype)
        self.decoder = PixelDecoder(rng, hyper.latent_dim, tuple(reversed(hyper.hidden)),
                                    n_pixels, pixel_kind, dtype)
        self.classifier = []
        last = n_pixels
        for h in hyper.hidden:
            self.classifier.append(dense(rng, last, h, init="kaiming", dtype=dtype))
            last = h
        self.classifier.append(dense(rng, last, 1, init="xavier", dtype=dtype))
        self.prior_y1 = IsotropicPrior(hyper.latent_dim, hyper.sigma_y1)
        self.prior_y0 = IsotropicPrior(hyper.latent_dim, hyper.sigma_y0)

    def params(self) -> dict[str, Tensor]:
        out = self.encoder.params("enc")
        out.update(self.decoder.params("dec"))
        out.update(mlp_params("clf", self.classifier))
        return out

    def to_config(self) -> dict:
        cfg = asdict(self.hyper)
        cfg["hidden"] = list(self.hyper.hidden)
        cfg.update(n_pixels=self.n_pixels, pixel_kind=self.pixel_kind)
        return cfg

    def classify(self, x) -> Tensor:
        """Inlier probability from raw pixels, clamped to (0,1)."""
        h = ad.wrap(x)
        for layer in self.classifier[:-1]:
            h = ad.relu(layer(h))
        logits = self.classifier[-1](h)
        return ad.reshape(clamp_prob(ad.sigmoid(logits)), (h.data.shape[0],))

    def encode(self, x, y):
        return self.encoder(Tensor(_with_label(np.asarray(x), y)))

    def branch_elbo(self, x, y, rng, kl_coef: float = 1.0) -> tuple[Tensor, dict]:
        """Per-instance ELBO of the label-conditioned branch: recon - KL(q || p(z|y))."""
        x = np.asarray(x)
        y = np.asarray(y, dtype=float)
        q = self.encode(x, y)
        z = reparam_sample(q, rng.standard_normal((x.shape[0], self.hyper.latent_dim)))
        rec = self.decoder.recon_nll(x, z)
        kl1 = kl_diag_vs_isotropic(q, self.prior_y1)
        kl0 = kl_diag_vs_isotropic(q, self.prior_y0)
        kl = y * kl1 + (1.0 - y) * kl0
        return -rec - kl_coef * kl, dict(rec=rec, kl=kl, z=z)

    def unlabelled_elbo(self, x, rng, kl_coef: float = 1.0) -> tuple[Tensor, dict]:
        x = np.asarray(x)
        n = x.shape[0]
        pi = self.classify(x)
        g1, p1 = self.branch_elbo(x, np.ones(n), rng, kl_coef)
        g0, p0 = self.branch_elbo(x, np.zeros(n), rng, kl_coef)
        kl_y = kl_bernoulli(pi, self.hyper.alpha)
        elbo = pi * g1 + (1.0 - pi) * g0 - kl_y
        return elbo, dict(pi=pi, g1=g1, g0=g0, kl_y=kl_y, rec=p1["rec"], kl=p1["kl"])

    def labelled_elbo(self, x, y, rng, kl_coef: float = 1.0) -> tuple[Tensor, dict]:
        g, parts = self.branch_elbo(x, y, rng, kl_coef)
        elbo = g + bernoulli_logpmf(y, self.hyper.alpha)
        return elbo, parts

    def wce(self, x, y, omega: float = 1.0) -> Tensor:
        """Weighted cross-entropy on the pixel-space classifier (no bound needed)."""
        if omega < 1.0:
            raise ValueError("imbalance weight must be >= 1")
        y = np.asarray(y, dtype=float)
        pi = self.classify(np.asarray(x))
        return -(y * ad.log(pi)) - omega * ((1.0 - y) * ad.log(1.0 - pi))

    def batch_loss(self, batch: BatchData, ctx: StepContext) -> tuple[Tensor, dict]:
        n_total = ctx.n_unlabelled + ctx.n_labelled
        terms = []
        stats: dict[str, float] = {}
        if len(batch.x_unlabelled):
            elbo_u, parts_u = self.unlabelled_elbo(batch.x_unlabelled, ctx.rng, ctx.kl_coef)
            terms.append(-(ctx.n_unlabelled / n_total) * ad.tmean(elbo_u))
            stats.update(recon=float(parts_u["rec"].data.mean()),
                         kl_c=float(parts_u["kl"].data.mean()),
                         kl_y=float(parts_u["kl_y"].data.mean()))
        if len(batch.x_labelled):
            elbo_l, _ = self.labelled_elbo(batch.x_labelled, batch.y_labelled,
                                           ctx.rng, ctx.kl_coef)
            terms.append(-(ctx.n_labelled / n_total) * ad.tmean(elbo_l))
            wce = ad.tmean(self.wce(batch.x_labelled, batch.y_labelled, ctx.omega))
            terms.append(self.hyper.beta * wce)
            stats["wce"] = float(wce.data)
        loss = terms[0]
        for t in terms[1:]:
            loss = loss + t
        if not np.isfinite(loss.data):
            raise FloatingPointError("non-finite training loss")
        stats["loss"] = float(loss.data)
        return loss, stats

    def anomaly_scores(self, x) -> np.ndarray:
        """-log q(y=1 | x) from the classifier."""
        x = np.atleast_2d(np.asarray(x))
        out = np.empty(x.shape[0])
        for sl in chunks(x.shape[0]):
            out[sl] = -np.log(self.classify(x[sl]).data)
        return out

    def repair(self, x) -> np.ndarray:
        """Decode the posterior mean conditioned on inlier (y=1)."""
        x = np.atleast_2d(np.asarray(x))
        out = np.empty_like(x, dtype=float)
        for sl in chunks(x.shape[0]):
            mu = self.encode(x[sl], np.ones(x[sl].shape[0])).mean
            out[sl] = as_pixels(self.decoder(mu).data, self.pixel_kind)
        return out
