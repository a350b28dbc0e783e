"""Training loop: annealing schedules, trusted-set resampling, history, resume."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import Tape
from .data.core import CorruptedDataset, TrustedSet
from .models import BatchData, StepContext, build_model, imbalance_weight, model_from_checkpoint
from .models.base import load_checkpoint, save_checkpoint
from .nn import Adam, TrainingDiverged

HISTORY_COLUMNS = ("epoch", "loss", "recon", "kl_c", "kl_d", "kl_y", "wce", "dc", "lambda_t")


@dataclass
class Schedule:
    """Linear ramp from 0 to max_value over ramp_ratio * total_epochs, then flat."""

    max_value: float
    ramp_ratio: float
    total_epochs: int

    def __post_init__(self):
        if not 0.0 < self.ramp_ratio <= 1.0:
            raise ValueError("ramp_ratio must be in (0, 1]")

    def value(self, epoch: int) -> float:
        if not 0 <= epoch <= max(self.total_epochs, 0):
            raise ValueError(f"epoch {epoch} outside [0, {self.total_epochs}]")
        ramp = self.ramp_ratio * self.total_epochs
        if ramp <= 0:
            return self.max_value
        return self.max_value * min(1.0, epoch / ramp)


@dataclass
class TrainConfig:
    epochs: int
    batch_size: int = 64
    learning_rate: float = 1e-3

    def validate(self) -> "TrainConfig":
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("invalid training configuration")
        return self


@dataclass
class TrainResult:
    model: object
    history: list[dict] = field(default_factory=list)
    epochs_run: int = 0
    optimizer: Adam | None = None


def write_history(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for row in rows:
            writer.writerow([row.get(col, 0.0) for col in HISTORY_COLUMNS])


def read_history(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [{k: float(v) for k, v in row.items()} for row in reader]


def _labelled_per_batch(batch_size: int, n_labelled: int, n_unlabelled: int) -> int:
    if n_labelled == 0:
        return 0
    share = batch_size * n_labelled / (n_labelled + n_unlabelled)
    return min(batch_size - 1, max(1, int(round(share))))


def train_model(model, ds: CorruptedDataset, trusted: TrustedSet, cfg: TrainConfig,
                rng: np.random.Generator, history: list[dict] | None = None,
                optimizer: Adam | None = None, start_epoch: int = 0,
                stop_epoch: int | None = None, diverged_dir=None) -> TrainResult:
    """Optimize ``model`` in place; deterministic given the rng state.

    ``stop_epoch`` interrupts before cfg.epochs while the annealing schedules
    keep their full-run totals, so a resumed run retraces the uninterrupted
    trajectory.  On a non-finite loss or gradient the last finished epoch's
    parameters are written to ``diverged_dir`` (when given) and
    TrainingDiverged propagates.
    """
    cfg.validate()
    supervised = getattr(model, "supervised", False)
    train_idx = ds.indices("train")
    if supervised:
        unlabelled = train_idx
    else:
        unlabelled = np.setdiff1d(train_idx, trusted.indices)
    beta = getattr(model.hyper, "beta", 0.0)
    if beta > 0 and not supervised and len(trusted) == 0:
        raise ValueError("beta > 0 requires a nonempty trusted set (use beta=0 for unsupervised)")

    omega = imbalance_weight(trusted.labels)
    kl_sched = Schedule(1.0, getattr(model.hyper, "kl_ramp_ratio", 0.5), cfg.epochs)
    dc_sched = Schedule(getattr(model.hyper, "lambda_max", 0.0),
                        getattr(model.hyper, "dc_ramp_ratio", 0.5), cfg.epochs)
    n_lab = 0 if supervised else _labelled_per_batch(cfg.batch_size, len(trusted), len(unlabelled))
    n_unlab = cfg.batch_size - n_lab

    optimizer = optimizer or Adam(model.params(), learning_rate=cfg.learning_rate)
    history = history if history is not None else []
    last_good = {name: p.data.copy() for name, p in model.params().items()}
    end_epoch = cfg.epochs if stop_epoch is None else min(stop_epoch, cfg.epochs)

    for epoch in range(start_epoch, end_epoch):
        kl_coef = kl_sched.value(epoch)
        lambda_t = dc_sched.value(epoch)
        perm = rng.permutation(unlabelled)
        sums: dict[str, float] = {}
        steps = 0
        try:
            for start in range(0, len(perm), n_unlab):
                idx_u = perm[start:start + n_unlab]
                x_u = ds.images[idx_u]
                if n_lab > 0:
                    idx_l = rng.choice(trusted.indices, size=n_lab, replace=True)
                    x_l = ds.images[idx_l]
                    y_l = ds.y_true[idx_l].astype(float)
                else:
                    x_l = np.empty((0, ds.n_pixels))
                    y_l = np.empty(0)
                batch = BatchData(
                    x_unlabelled=x_u, x_labelled=x_l, y_labelled=y_l,
                    y_unlabelled=ds.y_true[idx_u].astype(float) if supervised else None,
                )
                ctx = StepContext(rng=rng, kl_coef=kl_coef, lambda_t=lambda_t, omega=omega,
                                  n_unlabelled=len(unlabelled), n_labelled=len(trusted))
                with Tape() as tape:
                    loss, stats = model.batch_loss(batch, ctx)
                tape.backward(loss)
                optimizer.step()
                steps += 1
                for key, val in stats.items():
                    sums[key] = sums.get(key, 0.0) + val
        except (FloatingPointError, TrainingDiverged) as exc:
            if diverged_dir is not None:
                for name, p in model.params().items():
                    p.data = last_good[name]
                save_checkpoint(diverged_dir, model, epoch=epoch, seed=-1)
            raise TrainingDiverged(
                f"training diverged in epoch {epoch} after {steps} steps: {exc}"
            ) from exc
        row = {col: 0.0 for col in HISTORY_COLUMNS}
        row.update({k: v / max(steps, 1) for k, v in sums.items()})
        row["epoch"] = float(epoch)
        row["lambda_t"] = lambda_t
        history.append(row)
        last_good = {name: p.data.copy() for name, p in model.params().items()}

    return TrainResult(model=model, history=history,
                       epochs_run=end_epoch - start_epoch, optimizer=optimizer)


def rng_state(rng: np.random.Generator) -> dict:
    return rng.bit_generator.state


def rng_from_state(state: dict) -> np.random.Generator:
    rng = np.random.default_rng(0)
    rng.bit_generator.state = state
    return rng


def train(model_kind: str, hyper_config: dict, ds: CorruptedDataset, trusted: TrustedSet,
          cfg: TrainConfig, seed: int, out_dir=None, stop_epoch: int | None = None,
          dtype=np.float64) -> TrainResult:
    """Build and train from scratch: one seed drives init, batching, and sampling."""
    model = build_model(model_kind, ds.n_pixels, ds.pixel_kind, hyper_config,
                        np.random.default_rng([seed, 1]), dtype=dtype)
    rng = np.random.default_rng([seed, 2])
    diverged_dir = Path(out_dir) / "last_good" if out_dir is not None else None
    result = train_model(model, ds, trusted, cfg, rng, stop_epoch=stop_epoch,
                         diverged_dir=diverged_dir)
    if out_dir is not None:
        out = Path(out_dir)
        epoch_reached = stop_epoch if stop_epoch is not None else cfg.epochs
        save_checkpoint(out, model, epoch=epoch_reached, seed=seed,
                        rng_state=rng_state(rng), optimizer=result.optimizer)
        write_history(out / "history.csv", result.history)
    return result


def resume(checkpoint_dir, ds: CorruptedDataset, trusted: TrustedSet,
           cfg: TrainConfig, out_dir=None) -> TrainResult:
    """Continue a checkpointed run; with the stored RNG and optimizer state the
    trajectory is identical to never having stopped."""
    ckpt = load_checkpoint(checkpoint_dir)
    model = model_from_checkpoint(ckpt)
    if ckpt.rng_state is None:
        raise ValueError("checkpoint has no RNG state; cannot resume deterministically")
    rng = rng_from_state(ckpt.rng_state)
    optimizer = Adam(model.params(), learning_rate=cfg.learning_rate)
    if ckpt.opt_state is not None:
        optimizer.load_state(ckpt.opt_state)
    history_path = Path(checkpoint_dir) / "history.csv"
    history = read_history(history_path) if history_path.exists() else []
    result = train_model(model, ds, trusted, cfg, rng, history=history,
                         optimizer=optimizer, start_epoch=ckpt.epoch)
    if out_dir is not None:
        out = Path(out_dir)
        save_checkpoint(out, model, epoch=cfg.epochs, seed=ckpt.seed,
                        rng_state=rng_state(rng), optimizer=result.optimizer)
        write_history(out / "history.csv", result.history)
    return result
