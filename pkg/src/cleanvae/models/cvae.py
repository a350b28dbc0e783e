"""Conditional VAE: the fully supervised reference (needs labels for every instance).

The label is concatenated onto both the encoder input and the decoder input.
Repair encodes with the observed label y=0, then decodes with the label
switched to y=1.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..distributions import IsotropicPrior, kl_diag_vs_isotropic, reparam_sample
from .base import BatchData, GaussianEncoder, PixelDecoder, StepContext, as_pixels, chunks


@dataclass
class CvaeHyper:
    latent_dim: int = 15
    prior_sigma: float = 0.5
    kl_ramp_ratio: float = 0.5
    hidden: tuple = (200, 100, 50)

    def validate(self) -> "CvaeHyper":
        if self.prior_sigma <= 0:
            raise ValueError("prior_sigma must be positive")
        return self


def _with_label(x: np.ndarray, y) -> np.ndarray:
    y = np.broadcast_to(np.asarray(y, dtype=float).reshape(-1, 1), (x.shape[0], 1))
    return np.concatenate([x, y], axis=1)


class ConditionalVAE:
    kind = "cvae"
    supervised = True

    def __init__(self, n_pixels: int, pixel_kind: str, hyper: CvaeHyper,
                 rng: np.random.Generator, dtype=np.float64):
        hyper.validate()
        self.n_pixels = n_pixels
        self.pixel_kind = pixel_kind
        self.hyper = hyper
        self.dtype = dtype
        self.encoder = GaussianEncoder(rng, n_pixels + 1, hyper.hidden, hyper.latent_dim, dtype)
        self.decoder = PixelDecoder(rng, hyper.latent_dim + 1, tuple(reversed(hyper.hidden)),
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

    def encode(self, x, y):
        return self.encoder(Tensor(_with_label(np.asarray(x), y)))

    def decode(self, z, y) -> Tensor:
        y_col = Tensor(np.full((z.data.shape[0], 1), float(y)))
        return self.decoder(ad.concat([z, y_col], axis=1))

    def elbo_parts(self, x, y, rng, kl_coef: float = 1.0) -> dict:
        x = np.asarray(x)
        if y is None:
            raise ValueError("conditional VAE requires a label for every training instance")
        y = np.asarray(y, dtype=float)
        if y.shape[0] != x.shape[0]:
            raise ValueError("label count does not match instance count")
        q = self.encode(x, y)
        z = reparam_sample(q, rng.standard_normal((x.shape[0], self.hyper.latent_dim)))
        zy = ad.concat([z, Tensor(y.reshape(-1, 1))], axis=1)
        rec = self.decoder.recon_nll(x, zy)
        kl = kl_diag_vs_isotropic(q, self.prior)
        return dict(rec=rec, kl=kl, z=z, neg_elbo=rec + kl_coef * kl)

    def loss(self, x, y, rng, kl_coef: float = 1.0) -> tuple[Tensor, dict]:
        parts = self.elbo_parts(x, y, rng, kl_coef)
        loss = ad.tmean(parts["neg_elbo"])
        if not np.isfinite(loss.data):
            raise FloatingPointError("non-finite training loss")
        return loss, parts

    def batch_loss(self, batch: BatchData, ctx: StepContext) -> tuple[Tensor, dict]:
        loss, parts = self.loss(batch.x_unlabelled, batch.y_unlabelled, ctx.rng, ctx.kl_coef)
        stats = dict(loss=float(loss.data), recon=float(parts["rec"].data.mean()),
                     kl_c=float(parts["kl"].data.mean()))
        return loss, stats

    def anomaly_scores(self, x) -> np.ndarray:
        """Reconstruction NLL conditioning on inlier (y=1) end to end."""
        x = np.atleast_2d(np.asarray(x))
        out = np.empty(x.shape[0])
        for sl in chunks(x.shape[0]):
            mu = self.encode(x[sl], np.ones(x[sl].shape[0])).mean
            decoded = self.decode(mu, 1.0)
            out[sl] = self.decoder.nll_of_output(x[sl], decoded).data
        return out

    def repair(self, x) -> np.ndarray:
        """Encode as an outlier (y=0), switch the label to y=1, decode."""
        x = np.atleast_2d(np.asarray(x))
        out = np.empty_like(x, dtype=float)
        for sl in chunks(x.shape[0]):
            mu = self.encode(x[sl], np.zeros(x[sl].shape[0])).mean
            out[sl] = as_pixels(self.decode(mu, 1.0).data, self.pixel_kind)
        return out
