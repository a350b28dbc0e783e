"""Detection and repair metrics, evaluation reports, and the importance-weighted
marginal-likelihood bound used for the entropy comparison."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .data.core import CorruptedDataset
from .distributions import gaussian_logpdf

DEFAULT_GAMMA = float(np.log(2.0))   # -log(0.5): flag anything less likely inlier than a coin flip


class UndefinedMetric(ValueError):
    """Metric has no value on this input (e.g. average precision with no outliers)."""


def avpr(scores, y_true) -> float:
    """Average precision with outliers (y_true == 0) as the positive class.

    Higher score must mean "more outlier".  Ties are broken by stable index
    order after a deterministic descending sort.
    """
    scores = np.asarray(scores, dtype=float)
    y_true = np.asarray(y_true)
    if scores.shape != y_true.shape:
        raise ValueError("scores and labels must align")
    order = np.argsort(-scores, kind="stable")
    rel = y_true[order] == 0
    n_pos = int(rel.sum())
    if n_pos == 0:
        raise UndefinedMetric("average precision undefined without any outlier")
    # sequential accumulation in rank order: bitwise-equal to a literal
    # prefix-precision transcription
    hits = 0
    total = 0.0
    for k in np.flatnonzero(rel):
        hits += 1
        total += hits / (k + 1)
    return total / n_pos


class SmseResult(NamedTuple):
    value: float
    unnormalized_fallback: bool   # continuous data whose selected pixels had zero variance


def smse(repairs, clean_truth, masks, pixel_kind: str, selector: str) -> SmseResult:
    """Mean squared repair error over dirty or clean pixels of outlier instances.

    Continuous pixels are standardized by the ground-truth variance over the
    same pixel selection; binary pixels report the plain Brier score.
    """
    repairs = np.asarray(repairs, dtype=float)
    clean_truth = np.asarray(clean_truth, dtype=float)
    masks = np.asarray(masks, dtype=bool)
    if selector == "dirty":
        select = masks
        if not masks.any():
            raise ValueError("dirty-pixel selector needs nonempty masks")
    elif selector == "clean":
        select = ~masks
    else:
        raise ValueError(f"unknown pixel selector {selector!r}")
    err = repairs[select] - clean_truth[select]
    mse = float(np.mean(err * err))
    if pixel_kind == "binary":
        return SmseResult(mse, False)
    var = float(np.var(clean_truth[select]))
    if var <= 1e-12:
        return SmseResult(mse, True)
    return SmseResult(mse / var, False)


def detect(scores, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """Indices whose anomaly score reaches the threshold."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0 (scores are negative log-probabilities)")
    return np.flatnonzero(np.asarray(scores) >= gamma)


@dataclass
class EvalReport:
    dataset: str
    model: str
    noise: float
    per_class: int
    seed: int
    gamma: float
    split: str
    avpr: float
    smse_dirty: float
    smse_clean: float
    n_instances: int
    n_outliers: int
    n_detected: int
    smse_dirty_fallback: bool = False
    smse_clean_fallback: bool = False

    CSV_HEADER = "dataset,model,noise,per_class,seed,avpr,smse_dirty,smse_clean,gamma"

    def csv_row(self) -> str:
        return (f"{self.dataset},{self.model},{self.noise},{self.per_class},{self.seed},"
                f"{self.avpr:.6f},{self.smse_dirty:.6f},{self.smse_clean:.6f},{self.gamma:.6f}")

    def save(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        (out / "report.csv").write_text(self.CSV_HEADER + "\n" + self.csv_row() + "\n")

    @staticmethod
    def load(path) -> "EvalReport":
        return EvalReport(**json.loads(Path(path).read_text()))


def evaluate(model, ds: CorruptedDataset, split: str = "train",
             gamma: float = DEFAULT_GAMMA, dataset_name: str | None = None,
             per_class: int = -1, seed: int = -1) -> EvalReport:
    """Score a split, then measure repair quality on its true outliers."""
    idx = ds.indices(split)
    scores = model.anomaly_scores(ds.images[idx])
    y = ds.y_true[idx]
    ap = avpr(scores, y)
    out_rows = idx[y == 0]
    repairs = model.repair(ds.images[out_rows])
    dirty = smse(repairs, ds.clean_truth[out_rows], ds.dirty_mask[out_rows],
                 ds.pixel_kind, "dirty")
    clean = smse(repairs, ds.clean_truth[out_rows], ds.dirty_mask[out_rows],
                 ds.pixel_kind, "clean")
    return EvalReport(
        dataset=dataset_name or ds.kind, model=model.kind, noise=ds.noise_level,
        per_class=per_class, seed=seed, gamma=gamma, split=split,
        avpr=ap, smse_dirty=dirty.value, smse_clean=clean.value,
        n_instances=len(idx), n_outliers=len(out_rows),
        n_detected=len(detect(scores, gamma)),
        smse_dirty_fallback=dirty.unnormalized_fallback,
        smse_clean_fallback=clean.unnormalized_fallback,
    )


def aggregate_reports(reports: list[EvalReport]) -> list[dict]:
    """Mean and standard error across seeds for each (dataset, model, noise, per_class)."""
    groups: dict[tuple, list[EvalReport]] = {}
    for r in reports:
        groups.setdefault((r.dataset, r.model, r.noise, r.per_class), []).append(r)

    def mean_se(values):
        arr = np.asarray(values, dtype=float)
        se = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
        return float(arr.mean()), se

    rows = []
    for (dataset, model, noise, per_class), rs in sorted(groups.items()):
        row = {"dataset": dataset, "model": model, "noise": noise, "per_class": per_class,
               "seeds": len(rs)}
        for metric in ("avpr", "smse_dirty", "smse_clean"):
            m, se = mean_se([getattr(r, metric) for r in rs])
            row[metric] = m
            row[f"{metric}_se"] = se
            row[f"{metric}_fmt"] = f"{m:.3f} ({se:.3f})"
        rows.append(row)
    return rows


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(m, axis) + np.log(np.sum(np.exp(a - m), axis=axis))


def iwae_bound(model, x: np.ndarray, k: int, rng: np.random.Generator,
               instance_chunk: int = 16) -> float:
    """Per-instance average of log mean_k [ p(x, z_k) / q(z_k | x) ].

    Tightens toward log p(x) as k grows; its negative estimates the dataset
    entropy under the trained model.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    sigma_p = model.prior.sigma
    bounds = np.empty(x.shape[0])
    for start in range(0, x.shape[0], instance_chunk):
        xc = x[start:start + instance_chunk]
        n = xc.shape[0]
        q = model.encode(xc)
        mu, std = q.mean.data, q.std.data
        d_latent = mu.shape[1]
        eps = rng.standard_normal((n, k, d_latent))
        z = mu[:, None, :] + std[:, None, :] * eps
        flat_z = z.reshape(n * k, d_latent)
        nll = model.decoder.recon_nll(xc.repeat(k, axis=0), flat_z).data.reshape(n, k)
        log_px_z = -nll
        log_pz = gaussian_logpdf(z, np.zeros(d_latent), sigma_p)
        log_qz = gaussian_logpdf(z, mu[:, None, :], std[:, None, :])
        log_w = log_px_z + log_pz - log_qz
        bounds[start:start + n] = _logsumexp(log_w, axis=1) - np.log(k)
    return float(bounds.mean())
