"""Plain VAE with optional weight decay: the unsupervised reference model.

Detection scores by reconstruction NLL at the posterior mean, repair is the
decoded posterior mean.  With l2_coefficient=0 this is also the unregularized
VAE used for marginal-likelihood (entropy) estimation.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..distributions import IsotropicPrior, kl_diag_vs_isotropic, reparam_sample
from .base import BatchData, GaussianEncoder, PixelDecoder, StepContext, as_pixels, chunks


@dataclass
class VaeL2Hyper:
    latent_dim: int = 15
    l2_coefficient: float = 0.0
    prior_sigma: float = 1.0
    kl_ramp_ratio: float = 0.5
    hidden: tuple = (200, 100, 50)

    def validate(self) -> "VaeL2Hyper":
        if self.l2_coefficient < 0:
            raise ValueError("l2_coefficient must be >= 0")
        if self.prior_sigma <= 0:
            raise ValueError("prior_sigma must be positive")
        return self


class WeightDecayVAE:
    kind = "vae-l2"

    def __init__(self, n_pixels: int, pixel_kind: str, hyper: VaeL2Hyper,
                 rng: np.random.Generator, dtype=np.float64):
        hyper.validate()
        self.n_pixels = n_pixels
        self.pixel_kind = pixel_kind
        self.hyper = hyper
        self.dtype = dtype
        self.encoder = GaussianEncoder(rng, n_pixels, hyper.hidden, hyper.latent_dim, dtype)
        self.decoder = PixelDecoder(rng, hyper.latent_dim, tuple(reversed(hyper.hidden)),
                                    n_pixels, pixel_kind, dtype)
        self.prior = IsotropicPrior(hyper.latent_dim, hyper.prior_sigma)

    def params(self) -> dict[str, Tensor]:
        out = self.encoder.params("enc")
        out.update(self.decoder.params("dec"))
        return out

    def to_config(self) -> dict:
        cfg = asdict(self.hyper)
        cfg["hidden"] = list(self.hyper.hidden)
        cfg.update(n_pixels=self.n_pixels, pixel_kind=self.pixel_kind)
        return cfg

    def encode(self, x):
        return self.encoder(ad.wrap(x))

    def weight_penalty(self) -> Tensor:
        """Sum of squared weight-matrix entries over encoder and decoder."""
        total = None
        for name, p in self.params().items():
            if not name.endswith(".weight"):
                continue
            term = ad.tsum(ad.square(p))
            total = term if total is None else total + term
        return total

    def elbo_parts(self, x, rng, kl_coef: float = 1.0) -> dict:
        x = np.asarray(x)
        q = self.encode(x)
        z = reparam_sample(q, rng.standard_normal((x.shape[0], self.hyper.latent_dim)))
        rec = self.decoder.recon_nll(x, z)
        kl = kl_diag_vs_isotropic(q, self.prior)
        return dict(rec=rec, kl=kl, z=z, neg_elbo=rec + kl_coef * kl)

    def loss(self, x, rng, kl_coef: float = 1.0) -> tuple[Tensor, dict]:
        parts = self.elbo_parts(x, rng, kl_coef)
        loss = ad.tmean(parts["neg_elbo"])
        if self.hyper.l2_coefficient > 0:
            loss = loss + self.hyper.l2_coefficient * self.weight_penalty()
        if not np.isfinite(loss.data):
            raise FloatingPointError("non-finite training loss")
        return loss, parts

    def batch_loss(self, batch: BatchData, ctx: StepContext) -> tuple[Tensor, dict]:
        loss, parts = self.loss(batch.x_unlabelled, ctx.rng, ctx.kl_coef)
        stats = dict(loss=float(loss.data), recon=float(parts["rec"].data.mean()),
                     kl_c=float(parts["kl"].data.mean()))
        return loss, stats

    def anomaly_scores(self, x) -> np.ndarray:
        """Per-feature reconstruction NLL at the posterior mean."""
        x = np.atleast_2d(np.asarray(x))
        out = np.empty(x.shape[0])
        for sl in chunks(x.shape[0]):
            mu = self.encode(x[sl]).mean
            out[sl] = self.decoder.recon_nll(x[sl], mu).data
        return out

    def repair(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x))
        out = np.empty_like(x, dtype=float)
        for sl in chunks(x.shape[0]):
            mu = self.encode(x[sl]).mean
            out[sl] = as_pixels(self.decoder(mu).data, self.pixel_kind)
        return out
