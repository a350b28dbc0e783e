"""Acceptance gate: every release criterion, one pass/fail line each.

Criteria 1-7 are fast property checks against independent oracles.
Criteria 8-11 train at desk scale (5000 instances, 200 epochs, 3 seeds) and
take on the order of an hour or two on one CPU; trained runs are cached and
shared between criteria.  Run with ``pytest tests/test_acceptance.py -v -s``
to see the per-criterion lines as they complete.
"""

import dataclasses
import time

import numpy as np
import pytest

from cleanvae import autodiff as ad
from cleanvae.autodiff import Tape
from cleanvae.data import TrustedSet, build_error_classes, corrupt, generate_shapes, \
    sample_trusted_set
from cleanvae.distcorr import distance_correlation
from cleanvae.distributions import DiagGaussian, IsotropicPrior, kl_diag_vs_isotropic
from cleanvae.evaluation import avpr, evaluate, iwae_bound
from cleanvae.models import BatchData, StepContext, build_model
from cleanvae.presets import get_preset
from cleanvae.training import TrainConfig, train

from conftest import check_gradients
from test_clsvae import toy_batch, toy_model
from test_baselines import cvae_toy, vae_toy, vaegmm_toy
from test_distcorr import dcorr_fourloop
from test_distributions import mc_kl_vs_isotropic
from test_evaluation import ToyLinearGaussian, avpr_bruteforce

DESK_N = 5000
DESK_NOISE = 0.35
DESK_EPOCHS = 200
DESK_BATCH = 64           # pinned mini-batch size for the desk-scale reproduction
DESK_SEEDS = (1, 2, 3)

_BUNDLES: dict = {}
_RUNS: dict = {}
_ENTROPIES: dict = {}


def _verdict(n: int, ok: bool, detail: str) -> None:
    print(f"\n[criterion {n:02d}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {n}: {detail}"


def desk_bundle(seed: int):
    if seed not in _BUNDLES:
        clean = generate_shapes(DESK_N, seed=seed)
        classes = build_error_classes("shapes", seed=seed)
        _BUNDLES[seed] = corrupt(clean, DESK_NOISE, classes, seed=seed)
    return _BUNDLES[seed]


def desk_run(model_kind: str, per_class: int, seed: int):
    """Train once per (model, labels, seed) cell; cache the report and runtime."""
    key = (model_kind, per_class, seed)
    if key not in _RUNS:
        ds = desk_bundle(seed)
        trusted = sample_trusted_set(ds, per_class, seed)
        hyper = dict(get_preset("shapes-35")["models"][model_kind])
        hyper.pop("kind")
        cfg = TrainConfig(epochs=DESK_EPOCHS, batch_size=DESK_BATCH)
        start = time.monotonic()
        result = train(model_kind, hyper, ds, trusted, cfg, seed=seed)
        runtime = time.monotonic() - start
        report = evaluate(result.model, ds, split="train", per_class=per_class, seed=seed)
        _RUNS[key] = (report, runtime)
        print(f"\n  [desk run] {model_kind} pc={per_class} seed={seed}: "
              f"avpr={report.avpr:.4f} smse_dirty={report.smse_dirty:.4f} "
              f"smse_clean={report.smse_clean:.4f} ({runtime / 60:.1f} min)")
    return _RUNS[key]


# ---------------------------------------------------------------------------
# fast property criteria

def test_criterion_01_gradient_oracle_all_losses():
    start = time.monotonic()

    clsvae = toy_model(seed=21, beta=2.0, lambda_max=0.8)
    batch = BatchData(toy_batch(seed=22, n=4), toy_batch(seed=23, n=4),
                      np.array([1.0, 1.0, 0.0, 0.0]))

    def clsvae_loss():
        ctx = StepContext(rng=np.random.default_rng(24), kl_coef=0.6, lambda_t=0.8,
                          omega=1.5, n_unlabelled=16, n_labelled=4)
        return clsvae.batch_loss(batch, ctx)[0]

    errs = [check_gradients(clsvae_loss, clsvae.params())]

    vael2 = vae_toy(seed=5, l2_coefficient=0.3)
    errs.append(check_gradients(
        lambda: vael2.loss(toy_batch(seed=6), np.random.default_rng(7), kl_coef=0.8)[0],
        vael2.params()))

    cvae = cvae_toy(seed=8)
    errs.append(check_gradients(
        lambda: cvae.loss(toy_batch(seed=9), np.array([1.0, 1.0, 0.0, 0.0]),
                          np.random.default_rng(10), kl_coef=0.9)[0],
        cvae.params()))

    vaegmm = vaegmm_toy(seed=18)
    gmm_batch = BatchData(toy_batch(seed=19), toy_batch(seed=20),
                          np.array([1.0, 0.0, 1.0, 0.0]))

    def vaegmm_loss():
        ctx = StepContext(rng=np.random.default_rng(21), kl_coef=0.8, omega=2.0,
                          n_unlabelled=12, n_labelled=4)
        return vaegmm.batch_loss(gmm_batch, ctx)[0]

    errs.append(check_gradients(vaegmm_loss, vaegmm.params()))
    elapsed = time.monotonic() - start
    _verdict(1, max(errs) < 1e-4 and elapsed < 10.0,
             f"all 4 model losses match finite differences "
             f"(max rel err {max(errs):.2e}, {elapsed:.1f}s)")


def test_criterion_02_distance_correlation_oracle():
    gen = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        n = int(gen.integers(2, 33))
        q, p = int(gen.integers(1, 7)), int(gen.integers(1, 7))
        zc = gen.normal(size=(n, q))
        zd = 0.3 * zc[:, :1] + gen.normal(size=(n, p))
        worst = max(worst, abs(float(distance_correlation(zc, zd)) - dcorr_fourloop(zc, zd)))
    z = gen.normal(size=(16, 4))
    self_err = abs(float(distance_correlation(z, z.copy())) - 1.0)
    base = float(distance_correlation(z, z[:, :2] + z[:, 2:]))
    shift = abs(float(distance_correlation(z + 5.0, z[:, :2] + z[:, 2:])) - base)
    scale = abs(float(distance_correlation(z, 13.0 * (z[:, :2] + z[:, 2:]))) - base)
    ok = worst < 1e-10 and self_err <= 1e-9 and shift < 1e-10 and scale < 1e-10
    _verdict(2, ok, f"four-loop transcription max dev {worst:.1e}; self-corr dev "
                    f"{self_err:.1e}; shift/scale invariance {shift:.1e}/{scale:.1e}")


def test_criterion_03_kl_vs_monte_carlo():
    gen = np.random.default_rng(33)
    for case in range(20):
        d = int(gen.integers(1, 5))
        mean = gen.normal(scale=2.0, size=d)
        std = gen.uniform(0.1, 3.0, size=d)
        sigma = float(gen.uniform(0.2, 5.0))
        closed = float(kl_diag_vs_isotropic(DiagGaussian(mean, std), IsotropicPrior(d, sigma)))
        est, se = mc_kl_vs_isotropic(mean, std, sigma, 1_000_000, seed=1000 + case)
        assert abs(closed - est) < 3 * se, \
            f"case {case}: closed {closed:.5f} vs MC {est:.5f} (3se={3 * se:.5f})"
    _verdict(3, True, "closed-form KL within 3 standard errors of 1e6-sample MC, 20 cases")


def test_criterion_04_average_precision_oracle():
    gen = np.random.default_rng(44)
    for case in range(200):
        n = int(gen.integers(2, 201))
        y = (gen.random(n) > gen.uniform(0.1, 0.6)).astype(int)
        if (y == 0).sum() == 0:
            y[int(gen.integers(0, n))] = 0
        scores = np.round(gen.random(n), 2)
        mine = avpr(scores, y)
        ref = avpr_bruteforce(scores, y)
        assert mine == ref, f"case {case}: {mine!r} != {ref!r}"
    _verdict(4, True, "exact match to brute-force average precision on 200 random instances")


def test_criterion_05_corruption_invariants_over_seeds():
    for seed in range(50):
        clean = generate_shapes(400, seed=seed)
        classes = build_error_classes("shapes", seed=seed)
        ds = corrupt(clean, [0.15, 0.25, 0.35, 0.45][seed % 4], classes, seed=seed)
        outside = ~ds.dirty_mask
        assert (ds.images[outside] == ds.clean_truth[outside]).all()
        trusted = sample_trusted_set(ds, per_class=2, seed=seed)
        assert (trusted.labels == ds.y_true[trusted.indices]).all()
    _verdict(5, True, "masked overwrite and trusted-label consistency over 50 seeded builds")


def test_criterion_06_stop_gradient_contract():
    model = toy_model(use_stop_gradient=True)
    x = toy_batch()
    params = model.encoder_c.params("enc_c")
    for p in params.values():
        p.grad = None
    with Tape() as tape:
        q_c, q_d = model.encode(x)
        pi = model.classify(q_c.mean, q_d.mean)
        loss = ad.tsum(pi)
    grads = tape.gradients(loss, params)
    ok = all((g == 0).all() for g in grads.values())
    _verdict(6, ok, "classifier output has exactly zero gradient into the clean encoder")


def test_criterion_07_iwae_on_conjugate_toy():
    toy = ToyLinearGaussian(mean_scale=0.9, std_scale=1.1)
    gen = np.random.default_rng(3)
    x = (toy.intercept
         + np.sqrt(toy.slope ** 2 + toy.obs_std ** 2) * gen.standard_normal((200, 1)))
    bound = iwae_bound(toy.model, x, k=500, rng=np.random.default_rng(4))
    analytic = float(np.mean(toy.log_marginal(x[:, 0])))
    gap = abs(bound - analytic)
    _verdict(7, gap < 0.05,
             f"K=500 bound {bound:.4f} vs analytic {analytic:.4f} (gap {gap:.4f} nats)")


# ---------------------------------------------------------------------------
# desk-scale reproduction

def test_criterion_08_desk_scale_detection_and_repair():
    reports = [desk_run("clsvae", 10, seed)[0] for seed in DESK_SEEDS]
    runtimes = [desk_run("clsvae", 10, seed)[1] for seed in DESK_SEEDS]
    trusted_size = len(sample_trusted_set(desk_bundle(DESK_SEEDS[0]), 10, DESK_SEEDS[0]))
    assert trusted_size == 80
    assert DESK_BATCH == 64
    mean_avpr = float(np.mean([r.avpr for r in reports]))
    mean_dirty = float(np.mean([r.smse_dirty for r in reports]))
    mean_clean = float(np.mean([r.smse_clean for r in reports]))
    ok = (mean_avpr >= 0.95 and mean_dirty <= 0.05 and mean_clean <= 0.02
          and max(runtimes) <= 30 * 60)
    _verdict(8, ok, f"3-seed means: AVPR {mean_avpr:.4f} (>=0.95), dirty SMSE "
                    f"{mean_dirty:.4f} (<=0.05), clean SMSE {mean_clean:.4f} (<=0.02), "
                    f"max runtime {max(runtimes) / 60:.1f} min (<=30)")


def test_criterion_09_beats_weight_decay_baseline_on_repair():
    ours = float(np.mean([desk_run("clsvae", 10, s)[0].smse_dirty for s in DESK_SEEDS]))
    theirs = float(np.mean([desk_run("vae-l2", 10, s)[0].smse_dirty for s in DESK_SEEDS]))
    _verdict(9, ours < theirs,
             f"dirty-pixel SMSE {ours:.4f} (subspace model) < {theirs:.4f} (weight-decay VAE)")


def _entropy(variant: str, dim: int, seed: int) -> float:
    """Negative IWAE bound of a plain VAE trained on one variant of the train split."""
    key = (variant, dim, seed)
    if key not in _ENTROPIES:
        ds = desk_bundle(seed)
        view = ds if variant == "corrupted" else \
            dataclasses.replace(ds, images=ds.clean_truth.copy())
        hyper = dict(latent_dim=dim, l2_coefficient=0.0)
        result = train("vae-l2", hyper, view, TrustedSet.empty(),
                       TrainConfig(epochs=60, batch_size=DESK_BATCH), seed=seed)
        x = view.images[view.indices("train")]
        bound = iwae_bound(result.model, x, k=250, rng=np.random.default_rng([seed, dim]))
        _ENTROPIES[key] = -bound
        print(f"\n  [entropy] {variant} dim={dim} seed={seed}: {-bound:.2f} nats")
    return _ENTROPIES[key]


def test_criterion_10_compression_hypothesis():
    gaps = {}
    for dim in (2, 6, 15):
        per_seed = [_entropy("corrupted", dim, s) - _entropy("clean", dim, s)
                    for s in DESK_SEEDS]
        gaps[dim] = float(np.mean(per_seed))
    ok = all(g > 0 for g in gaps.values())
    detail = ", ".join(f"dim {d}: +{g:.2f} nats" for d, g in gaps.items())
    _verdict(10, ok, f"corrupted-train entropy exceeds clean-train entropy ({detail})")


def test_criterion_11_repair_improves_with_labels():
    means, ses = {}, {}
    for pc in (5, 10, 25):
        vals = [desk_run("clsvae", pc, s)[0].smse_dirty for s in DESK_SEEDS]
        means[pc] = float(np.mean(vals))
        ses[pc] = float(np.std(vals, ddof=1) / np.sqrt(len(vals)))
    pooled_5_10 = float(np.sqrt(ses[5] ** 2 + ses[10] ** 2))
    pooled_10_25 = float(np.sqrt(ses[10] ** 2 + ses[25] ** 2))
    ok = (means[10] <= means[5] + pooled_5_10) and (means[25] <= means[10] + pooled_10_25)
    _verdict(11, ok, f"dirty SMSE nonincreasing within one pooled SE: "
                     f"5->{means[5]:.4f}, 10->{means[10]:.4f}, 25->{means[25]:.4f} "
                     f"(pooled SEs {pooled_5_10:.4f}, {pooled_10_25:.4f})")
