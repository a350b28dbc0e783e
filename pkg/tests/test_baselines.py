import numpy as np
import pytest

from cleanvae import autodiff as ad
from cleanvae.autodiff import Tape, Tensor
from cleanvae.distributions import IsotropicPrior, kl_diag_vs_isotropic
from cleanvae.models import (
    BatchData,
    ConditionalVAE,
    CvaeHyper,
    MixturePriorVAE,
    StepContext,
    VaegmmHyper,
    VaeL2Hyper,
    WeightDecayVAE,
    build_model,
)
from cleanvae.models.cvae import _with_label
from cleanvae.nn import Adam

from conftest import check_gradients

D = 8


def toy_x(seed=1, n=4):
    return (np.random.default_rng(seed).random((n, D)) > 0.5).astype(float)


def vae_toy(seed=0, **kw):
    hyper = VaeL2Hyper(latent_dim=3, hidden=(4,), **kw)
    return WeightDecayVAE(D, "binary", hyper, np.random.default_rng(seed))


def cvae_toy(seed=0, **kw):
    hyper = CvaeHyper(latent_dim=3, hidden=(4,), **kw)
    return ConditionalVAE(D, "binary", hyper, np.random.default_rng(seed))


def vaegmm_toy(seed=0, **kw):
    base = dict(latent_dim=3, sigma_y1=0.9, sigma_y0=5.0, hidden=(4,), beta=5.0)
    base.update(kw)
    return MixturePriorVAE(D, "binary", VaegmmHyper(**base), np.random.default_rng(seed))


class TestWeightDecayVae:
    def test_zero_coefficient_is_plain_negative_elbo(self):
        model = vae_toy(l2_coefficient=0.0)
        x = toy_x()
        loss, _ = model.loss(x, np.random.default_rng(3))
        parts = model.elbo_parts(x, np.random.default_rng(3))
        np.testing.assert_allclose(float(loss), float(parts["neg_elbo"].data.mean()), rtol=1e-12)

    def test_zero_weights_zero_penalty(self):
        model = vae_toy(l2_coefficient=2.0)
        for name, p in model.params().items():
            if name.endswith(".weight"):
                p.data[:] = 0.0
        assert float(model.weight_penalty()) == 0.0

    def test_penalty_counts_weights_not_biases(self):
        model = vae_toy()
        expected = sum((p.data ** 2).sum() for n, p in model.params().items()
                       if n.endswith(".weight"))
        np.testing.assert_allclose(float(model.weight_penalty()), expected, rtol=1e-12)

    def test_gradient_vs_finite_differences(self):
        model = vae_toy(seed=5, l2_coefficient=0.3)
        x = toy_x(seed=6)

        def loss_fn():
            loss, _ = model.loss(x, np.random.default_rng(7), kl_coef=0.8)
            return loss

        check_gradients(loss_fn, model.params())

    def test_score_is_nll_at_half_probs(self):
        model = vae_toy()
        model.decoder.layers[-1].weight.data[:] = 0.0
        model.decoder.layers[-1].bias.data[:] = 0.0   # sigmoid -> 0.5 everywhere
        scores = model.anomaly_scores(toy_x())
        np.testing.assert_allclose(scores, D * np.log(2), rtol=1e-12)

    def test_score_deterministic_and_toy_value(self):
        model = vae_toy()
        x = toy_x()[:1]
        np.testing.assert_array_equal(model.anomaly_scores(x), model.anomaly_scores(x))
        mu = model.encode(x).mean
        probs = model.decoder(mu).data
        expected = -np.sum(x * np.log(probs) + (1 - x) * np.log(1 - probs))
        np.testing.assert_allclose(model.anomaly_scores(x)[0], expected, rtol=1e-9)

    def test_repair_is_decoded_posterior_mean(self):
        model = vae_toy()
        x = toy_x()
        mu = model.encode(x).mean
        np.testing.assert_allclose(model.repair(x), model.decoder(mu).data, rtol=1e-12)


class TestConditionalVae:
    def test_label_required(self):
        model = cvae_toy()
        with pytest.raises(ValueError, match="label"):
            model.loss(toy_x(), None, np.random.default_rng(0))

    def test_sigma_one_is_standard_elbo(self):
        model = cvae_toy(prior_sigma=1.0)
        x, y = toy_x(), np.array([1.0, 0.0, 1.0, 0.0])
        parts = model.elbo_parts(x, y, np.random.default_rng(2))
        q = model.encode(x, y)
        std_kl = kl_diag_vs_isotropic(q, IsotropicPrior(3, 1.0))
        np.testing.assert_allclose(parts["kl"].data, std_kl.data, rtol=1e-12)

    def test_kl_grows_as_prior_shrinks(self):
        x, y = toy_x(), np.ones(4)
        vals = []
        for sigma in (1.0, 0.5, 0.2):
            model = cvae_toy(prior_sigma=sigma)
            parts = model.elbo_parts(x, y, np.random.default_rng(4))
            vals.append(float(parts["kl"].data.mean()))
        assert vals[0] < vals[1] < vals[2]

    def test_gradient_vs_finite_differences(self):
        model = cvae_toy(seed=8)
        x, y = toy_x(seed=9), np.array([1.0, 1.0, 0.0, 0.0])

        def loss_fn():
            loss, _ = model.loss(x, y, np.random.default_rng(10), kl_coef=0.9)
            return loss

        check_gradients(loss_fn, model.params())

    def test_score_at_half_probs(self):
        model = cvae_toy()
        model.decoder.layers[-1].weight.data[:] = 0.0
        model.decoder.layers[-1].bias.data[:] = 0.0
        np.testing.assert_allclose(model.anomaly_scores(toy_x()), D * np.log(2), rtol=1e-12)

    def test_repair_deterministic_and_uses_label_switch(self):
        model = cvae_toy(seed=12)
        x = toy_x(seed=13)
        np.testing.assert_array_equal(model.repair(x), model.repair(x))
        # short supervised training run, then the y=0 -> y=1 switch must matter
        opt = Adam(model.params(), learning_rate=5e-3)
        y = np.array([1.0, 0.0, 1.0, 0.0])
        for step in range(50):
            with Tape() as tape:
                loss, _ = model.loss(x, y, np.random.default_rng(step))
            tape.backward(loss)
            opt.step()
        mu0 = model.encode(x, np.zeros(4)).mean
        same_label = model.decode(mu0, 0.0).data
        switched = model.repair(x)
        assert np.max(np.abs(switched - same_label)) > 1e-6


class TestMixturePriorVae:
    def test_sigma_ordering_enforced(self):
        with pytest.raises(ValueError, match="sigma_y1"):
            VaegmmHyper(sigma_y1=5.0, sigma_y0=0.9).validate()

    def test_equal_sigmas_make_branch_priors_coincide(self):
        model = vaegmm_toy(sigma_y0=0.9001, sigma_y1=0.9)
        model.prior_y0 = model.prior_y1   # collapse the two components
        x = toy_x()
        _, p1 = model.branch_elbo(x, np.ones(4), np.random.default_rng(1))
        _, p0 = model.branch_elbo(x, np.zeros(4), np.random.default_rng(1))
        q1 = model.encode(x, np.ones(4))
        q0 = model.encode(x, np.zeros(4))
        np.testing.assert_allclose(
            p1["kl"].data, kl_diag_vs_isotropic(q1, model.prior_y1).data, rtol=1e-12)
        np.testing.assert_allclose(
            p0["kl"].data, kl_diag_vs_isotropic(q0, model.prior_y1).data, rtol=1e-12)

    def test_reduces_to_standard_vae_when_label_ignored(self):
        # zero the label column and collapse the mixture: each branch is then
        # exactly a plain VAE ELBO for the same z sample
        model = vaegmm_toy()
        model.prior_y0 = model.prior_y1
        model.encoder.trunk[0].weight.data[:, -1] = 0.0
        x = toy_x()
        g1, p1 = model.branch_elbo(x, np.ones(4), np.random.default_rng(2))
        g0, p0 = model.branch_elbo(x, np.zeros(4), np.random.default_rng(2))
        np.testing.assert_array_equal(g1.data, g0.data)
        q = model.encode(x, np.ones(4))
        plain = -(model.decoder.recon_nll(x, p1["z"]).data
                  + kl_diag_vs_isotropic(q, model.prior_y1).data)
        np.testing.assert_allclose(g1.data, plain, rtol=1e-12)

    def test_pi_one_reduces_to_single_branch(self):
        model = vaegmm_toy()
        x = toy_x()
        elbo, parts = model.unlabelled_elbo(x, np.random.default_rng(3))
        manual = (parts["pi"].data * parts["g1"].data
                  + (1 - parts["pi"].data) * parts["g0"].data - parts["kl_y"].data)
        np.testing.assert_allclose(elbo.data, manual, rtol=1e-12)

    def test_labelled_branch_selection_and_prior_logpmf(self):
        model = vaegmm_toy()
        x = toy_x()[:2]
        e1, _ = model.labelled_elbo(x, np.ones(2), np.random.default_rng(4))
        g1, _ = model.branch_elbo(x, np.ones(2), np.random.default_rng(4))
        np.testing.assert_allclose(e1.data, g1.data + np.log(model.hyper.alpha), rtol=1e-12)

    def test_unlabelled_gradient_vs_finite_differences(self):
        model = vaegmm_toy(seed=15)
        x = toy_x(seed=16)

        def loss_fn():
            elbo, _ = model.unlabelled_elbo(x, np.random.default_rng(17), kl_coef=0.7)
            return -ad.tmean(elbo)

        check_gradients(loss_fn, model.params())

    def test_total_loss_gradient_vs_finite_differences(self):
        model = vaegmm_toy(seed=18)
        batch = BatchData(toy_x(seed=19), toy_x(seed=20), np.array([1.0, 0.0, 1.0, 0.0]))

        def loss_fn():
            ctx = StepContext(rng=np.random.default_rng(21), kl_coef=0.8, omega=2.0,
                              n_unlabelled=12, n_labelled=4)
            loss, _ = model.batch_loss(batch, ctx)
            return loss

        check_gradients(loss_fn, model.params())

    def test_score_log2_at_uninformative_classifier(self):
        model = vaegmm_toy()
        model.classifier[-1].weight.data[:] = 0.0
        model.classifier[-1].bias.data[:] = 0.0
        np.testing.assert_allclose(model.anomaly_scores(toy_x()), np.log(2), rtol=1e-12)

    def test_repair_conditions_on_inlier_only(self):
        model = vaegmm_toy()
        x = toy_x()
        mu1 = model.encode(x, np.ones(4)).mean
        np.testing.assert_allclose(model.repair(x), model.decoder(mu1).data, rtol=1e-12)
        np.testing.assert_array_equal(model.repair(x), model.repair(x))


class TestFactory:
    def test_build_all_kinds(self):
        for kind in ("clsvae", "clsvae-nodc", "vae-l2", "cvae", "vaegmm"):
            cfg = {"hidden": [4], "latent_dim": 3} if kind not in ("clsvae", "clsvae-nodc") \
                else {"hidden": [4], "dim_clean": 3, "dim_dirty": 2, "classifier_hidden": [3]}
            model = build_model(kind, D, "binary", cfg, np.random.default_rng(0))
            assert model.kind == kind
            assert model.params()

    def test_nodc_alias_forces_zero_penalty(self):
        cfg = {"hidden": [4], "dim_clean": 3, "dim_dirty": 2, "classifier_hidden": [3],
               "lambda_max": 100.0}
        model = build_model("clsvae-nodc", D, "binary", cfg, np.random.default_rng(0))
        assert model.hyper.lambda_max == 0.0

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown model kind"):
            build_model("m2", D, "binary", {}, np.random.default_rng(0))

    def test_unknown_hyperparameter_rejected(self):
        with pytest.raises(ValueError, match="sigma_sea"):
            build_model("clsvae", D, "binary", {"sigma_sea": 0.1}, np.random.default_rng(0))
