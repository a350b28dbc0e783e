"""Semi-supervised VAE with a partitioned latent space for detect-and-repair.

The latent code splits into a clean subspace z_c (what the instance would look
like uncorrupted) and a dirty subspace z_d (which systematic error, if any, is
present).  The decoder is a two-component mixture gated by the inlier label:
inliers decode from [z_c; noise], outliers from [z_c; z_d].  A classifier on
[z_c; z_d] infers the label; a distance-correlation penalty keeps the two
subspaces from sharing information.  Repair decodes [mean(z_c); 0].
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..distcorr import DegenerateBatch, distance_correlation
from ..distributions import (
    IsotropicPrior,
    bernoulli_logpmf,
    clamp_prob,
    kl_bernoulli,
    kl_diag_vs_isotropic,
    reparam_sample,
)
from ..nn import dense, mlp_params
from .base import (
    BatchData,
    GaussianEncoder,
    PixelDecoder,
    StepContext,
    as_pixels,
    chunks,
)

log = logging.getLogger(__name__)


@dataclass
class ClsvaeHyper:
    dim_clean: int = 10
    dim_dirty: int = 5
    sigma_c: float = 0.5
    sigma_d: float = 5.0
    sigma_eps: float = 0.5
    alpha: float = 0.6
    beta: float = 1000.0
    lambda_max: float = 100.0
    dc_ramp_ratio: float = 0.5
    kl_ramp_ratio: float = 0.5
    use_stop_gradient: bool = False
    hidden: tuple = (200, 100, 50)
    classifier_hidden: tuple = (7, 5)

    def validate(self) -> "ClsvaeHyper":
        if not self.sigma_c < self.sigma_d:
            raise ValueError(f"sigma_c must be < sigma_d, got {self.sigma_c} >= {self.sigma_d}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.sigma_eps <= 0:
            raise ValueError("sigma_eps must be positive")
        if self.lambda_max < 0:
            raise ValueError("lambda_max must be >= 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        return self


class CleanSubspaceVAE:
    kind = "clsvae"

    def __init__(self, n_pixels: int, pixel_kind: str, hyper: ClsvaeHyper,
                 rng: np.random.Generator, dtype=np.float64):
        hyper.validate()
        self.n_pixels = n_pixels
        self.pixel_kind = pixel_kind
        self.hyper = hyper
        self.dtype = dtype
        q, p = hyper.dim_clean, hyper.dim_dirty
        self.encoder_c = GaussianEncoder(rng, n_pixels, hyper.hidden, q, dtype)
        self.encoder_d = GaussianEncoder(rng, n_pixels, hyper.hidden, p, dtype)
        self.classifier = []
        last = q + p
        for h in hyper.classifier_hidden:
            self.classifier.append(dense(rng, last, h, init="kaiming", dtype=dtype))
            last = h
        self.classifier.append(dense(rng, last, 1, init="xavier", dtype=dtype))
        self.decoder = PixelDecoder(rng, q + p, tuple(reversed(hyper.hidden)), n_pixels,
                                    pixel_kind, dtype)
        self.prior_c = IsotropicPrior(q, hyper.sigma_c)
        self.prior_d = IsotropicPrior(p, hyper.sigma_d)

    # -- parameter and checkpoint plumbing ---------------------------------
    def params(self) -> dict[str, Tensor]:
        out = self.encoder_c.params("enc_c")
        out.update(self.encoder_d.params("enc_d"))
        out.update(mlp_params("clf", self.classifier))
        out.update(self.decoder.params("dec"))
        return out

    def to_config(self) -> dict:
        cfg = asdict(self.hyper)
        cfg["hidden"] = list(self.hyper.hidden)
        cfg["classifier_hidden"] = list(self.hyper.classifier_hidden)
        cfg.update(n_pixels=self.n_pixels, pixel_kind=self.pixel_kind)
        return cfg

    # -- networks -----------------------------------------------------------
    def encode(self, x):
        x = ad.wrap(x)
        if x.data.shape[-1] != self.n_pixels:
            raise ValueError(f"expected {self.n_pixels} pixels, got {x.data.shape}")
        return self.encoder_c(x), self.encoder_d(x)

    def classify(self, z_c, z_d) -> Tensor:
        """Inlier probability from the joint latent code, clamped to (0,1)."""
        head = ad.stop_gradient(z_c) if self.hyper.use_stop_gradient else ad.wrap(z_c)
        h = ad.concat([head, ad.wrap(z_d)], axis=1)
        for layer in self.classifier[:-1]:
            h = ad.relu(layer(h))
        logits = self.classifier[-1](h)
        n = logits.data.shape[0]
        return ad.reshape(clamp_prob(ad.sigmoid(logits)), (n,))

    def decode(self, z_c, tail) -> Tensor:
        return self.decoder(ad.concat([ad.wrap(z_c), ad.wrap(tail)], axis=1))

    def _sample_latents(self, x, rng):
        q_c, q_d = self.encode(x)
        n = x.shape[0]
        z_c = reparam_sample(q_c, rng.standard_normal((n, self.hyper.dim_clean)))
        z_d = reparam_sample(q_d, rng.standard_normal((n, self.hyper.dim_dirty)))
        z_eps = self.hyper.sigma_eps * rng.standard_normal((n, self.hyper.dim_dirty))
        return q_c, q_d, z_c, z_d, z_eps

    # -- per-instance objectives (single-sample MC estimates) ---------------
    def unlabelled_elbo(self, x, rng, kl_coef: float = 1.0,
                        pi_override=None, zeps_override=None) -> tuple[Tensor, dict]:
        """Mixture ELBO for instances with unknown labels; returns ([N], parts)."""
        x = np.asarray(x)
        q_c, q_d, z_c, z_d, z_eps = self._sample_latents(x, rng)
        if zeps_override is not None:
            z_eps = zeps_override
        pi = self.classify(z_c, z_d) if pi_override is None else ad.wrap(pi_override)
        rec_in = self.decoder.recon_nll(x, ad.concat([z_c, ad.wrap(z_eps)], axis=1))
        rec_out = self.decoder.recon_nll(x, ad.concat([z_c, z_d], axis=1))
        kl_y = kl_bernoulli(pi, self.hyper.alpha)
        kl_c = kl_diag_vs_isotropic(q_c, self.prior_c)
        kl_d = kl_diag_vs_isotropic(q_d, self.prior_d)
        elbo = (pi * (-rec_in) + (1.0 - pi) * (-rec_out) - kl_y
                - kl_coef * (kl_c + kl_d))
        parts = dict(pi=pi, rec_in=rec_in, rec_out=rec_out, kl_y=kl_y, kl_c=kl_c,
                     kl_d=kl_d, z_c=z_c, z_d=z_d, z_eps=z_eps)
        return elbo, parts

    def labelled_elbo(self, x, y, rng, kl_coef: float = 1.0) -> tuple[Tensor, dict]:
        """ELBO for trusted instances with observed labels; returns ([N], parts)."""
        x = np.asarray(x)
        y = np.asarray(y, dtype=float)
        q_c, q_d, z_c, z_d, z_eps = self._sample_latents(x, rng)
        rec_in = self.decoder.recon_nll(x, ad.concat([z_c, ad.wrap(z_eps)], axis=1))
        rec_out = self.decoder.recon_nll(x, ad.concat([z_c, z_d], axis=1))
        log_py = bernoulli_logpmf(y, self.hyper.alpha)
        kl_c = kl_diag_vs_isotropic(q_c, self.prior_c)
        kl_d = kl_diag_vs_isotropic(q_d, self.prior_d)
        elbo = (y * (-rec_in) + (1.0 - y) * (-rec_out) + log_py
                - kl_coef * (kl_c + kl_d))
        parts = dict(rec_in=rec_in, rec_out=rec_out, kl_c=kl_c, kl_d=kl_d,
                     z_c=z_c, z_d=z_d, z_eps=z_eps)
        return elbo, parts

    def _wce_terms(self, y, pi, omega: float) -> Tensor:
        if omega < 1.0:
            raise ValueError("imbalance weight must be >= 1")
        y = np.asarray(y, dtype=float)
        return -(y * ad.log(pi)) - omega * ((1.0 - y) * ad.log(1.0 - pi))

    def wce_bound(self, x, y, rng, omega: float = 1.0) -> Tensor:
        """Jensen upper bound of the weighted cross-entropy (single-sample MC), per instance."""
        _, _, z_c, z_d, _ = self._sample_latents(np.asarray(x), rng)
        return self._wce_terms(y, self.classify(z_c, z_d), omega)

    # -- total training loss -------------------------------------------------
    def batch_loss(self, batch: BatchData, ctx: StepContext) -> tuple[Tensor, dict]:
        hy = self.hyper
        n_total = ctx.n_unlabelled + ctx.n_labelled
        terms = []
        stats: dict[str, float] = {}
        latents_c, latents_d = [], []

        if len(batch.x_unlabelled):
            elbo_u, parts_u = self.unlabelled_elbo(batch.x_unlabelled, ctx.rng, ctx.kl_coef)
            terms.append(-(ctx.n_unlabelled / n_total) * ad.tmean(elbo_u))
            latents_c.append(parts_u["z_c"])
            latents_d.append(parts_u["z_d"])
            stats.update(
                recon=float(np.mean(np.where(parts_u["pi"].data > 0.5,
                                             parts_u["rec_in"].data, parts_u["rec_out"].data))),
                kl_c=float(parts_u["kl_c"].data.mean()),
                kl_d=float(parts_u["kl_d"].data.mean()),
                kl_y=float(parts_u["kl_y"].data.mean()),
            )

        if len(batch.x_labelled):
            elbo_l, parts_l = self.labelled_elbo(batch.x_labelled, batch.y_labelled,
                                                 ctx.rng, ctx.kl_coef)
            terms.append(-(ctx.n_labelled / n_total) * ad.tmean(elbo_l))
            # same reparameterized samples the labelled ELBO already drew
            pi_l = self.classify(parts_l["z_c"], parts_l["z_d"])
            wce = ad.tmean(self._wce_terms(batch.y_labelled, pi_l, ctx.omega))
            terms.append(hy.beta * wce)
            latents_c.append(parts_l["z_c"])
            latents_d.append(parts_l["z_d"])
            stats["wce"] = float(wce.data)
        elif hy.beta > 0 and ctx.n_labelled > 0:
            raise ValueError("labelled batch may be empty only when beta == 0")

        dc_value = 0.0
        if hy.lambda_max > 0:
            z_c = latents_c[0] if len(latents_c) == 1 else ad.concat(latents_c, axis=0)
            z_d = latents_d[0] if len(latents_d) == 1 else ad.concat(latents_d, axis=0)
            try:
                dc = distance_correlation(z_c, z_d)
                terms.append(ctx.lambda_t * dc)
                dc_value = float(dc.data)
            except DegenerateBatch as exc:
                log.warning("distance-correlation penalty skipped this step: %s", exc)
        stats["dc"] = dc_value

        loss = terms[0]
        for t in terms[1:]:
            loss = loss + t
        if not np.isfinite(loss.data):
            raise FloatingPointError("non-finite training loss")
        stats["loss"] = float(loss.data)
        return loss, stats

    # -- detection and repair -------------------------------------------------
    def posterior_means(self, x) -> tuple[np.ndarray, np.ndarray]:
        q_c, q_d = self.encode(np.asarray(x))
        return q_c.mean.data, q_d.mean.data

    def anomaly_scores(self, x) -> np.ndarray:
        """-log p(inlier) at the posterior means; deterministic, >= 0."""
        x = np.atleast_2d(np.asarray(x))
        out = np.empty(x.shape[0])
        for sl in chunks(x.shape[0]):
            mu_c, mu_d = self.posterior_means(x[sl])
            pi = self.classify(Tensor(mu_c), Tensor(mu_d))
            out[sl] = -np.log(pi.data)
        return out

    def repair(self, x) -> np.ndarray:
        """Decoder mean from the clean-subspace mean with a zeroed dirty tail."""
        x = np.atleast_2d(np.asarray(x))
        out = np.empty_like(x, dtype=float)
        for sl in chunks(x.shape[0]):
            mu_c, _ = self.posterior_means(x[sl])
            zeros = np.zeros((mu_c.shape[0], self.hyper.dim_dirty), dtype=mu_c.dtype)
            out[sl] = as_pixels(self.decode(Tensor(mu_c), Tensor(zeros)).data, self.pixel_kind)
        return out
