"""Experiment orchestration: config validation, dataset builds, runs, sweeps.

Everything here is a pure function of (config, seed, input artifacts); reruns
produce byte-identical outputs.
"""

from __future__ import annotations

import json
import traceback
from pathlib import Path

import numpy as np

from .data import (
    TEST,
    TRAIN,
    VAL,
    CleanDataset,
    ConfigError,
    CorruptedDataset,
    build_error_classes,
    corrupt,
    generate_shapes,
    load_bundle,
    load_idx,
    load_matrix,
    sample_trusted_set,
    save_bundle,
)
from .evaluation import DEFAULT_GAMMA, EvalReport, aggregate_reports, evaluate
from .imaging import repair_grid, write_pgm
from .models import MODEL_KINDS, hyper_from_dict, load_checkpoint, model_from_checkpoint
from .presets import get_preset
from .training import TrainConfig, train


def load_config(path=None, preset=None) -> dict:
    if (path is None) == (preset is None):
        raise ConfigError("provide exactly one of --config or --preset")
    if preset is not None:
        return get_preset(preset)
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def validate_config(cfg: dict, require: tuple[str, ...]) -> dict:
    for section in require:
        if section not in cfg:
            raise ConfigError(f"config is missing the {section!r} section")
    if "dataset" in cfg:
        d = cfg["dataset"]
        kind = d.get("kind")
        if kind not in ("shapes", "frey", "fashion"):
            raise ConfigError(f"unknown dataset kind {kind!r}")
        noise = d.get("noise_level")
        if noise is None or not 0.0 <= noise < 1.0:
            raise ConfigError(f"noise_level must be in [0, 1), got {noise}")
        if d.get("per_class", 0) < 0:
            raise ConfigError("per_class must be >= 0")
    if "model" in cfg and "model" in require:
        m = dict(cfg["model"])
        kind = m.pop("kind", None)
        if kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
        try:
            hyper_from_dict(kind, m)
        except ValueError as exc:
            raise ConfigError(f"invalid {kind} hyperparameters: {exc}") from exc
    if "train" in cfg and "train" in require:
        t = cfg["train"]
        if t.get("epochs", -1) < 0 or t.get("batch_size", 64) < 1:
            raise ConfigError("train section needs epochs >= 0 and batch_size >= 1")
    return cfg


def _clean_from_config(d: dict, seed: int) -> CleanDataset:
    kind = d["kind"]
    if kind == "shapes":
        return generate_shapes(d.get("n", 5000), seed=seed,
                               height=d.get("height", 28), width=d.get("width", 28))
    if kind == "frey":
        path = d.get("matrix_path")
        if not path:
            raise ConfigError("frey dataset needs matrix_path pointing at the pixel matrix")
        clean = load_matrix(path, d.get("height"), d.get("width"))
        _assign_splits(clean, seed)
        return clean
    # fashion: 90/10 split of the train container, test container appended
    for key in ("train_images", "test_images"):
        if not d.get(key):
            raise ConfigError(f"fashion dataset needs {key}")
    tr = load_idx(d["train_images"], d.get("train_labels"))
    te = load_idx(d["test_images"], d.get("test_labels"))
    rng = np.random.default_rng([seed, 0x5])
    split_tr = np.full(tr.n, TRAIN, dtype=np.int64)
    val_idx = rng.permutation(tr.n)[: int(round(0.1 * tr.n))]
    split_tr[val_idx] = VAL
    return CleanDataset(
        images=np.concatenate([tr.images, te.images]),
        height=tr.height, width=tr.width, pixel_kind="continuous",
        class_id=np.concatenate([tr.class_id, te.class_id]),
        split=np.concatenate([split_tr, np.full(te.n, TEST, dtype=np.int64)]),
    )


def _assign_splits(clean: CleanDataset, seed: int) -> None:
    rng = np.random.default_rng([seed, 0x5])
    n = clean.n
    perm = rng.permutation(n)
    n_train = int(round(0.8 * n))
    n_val = int(round(0.1 * n))
    clean.split[:] = TRAIN
    clean.split[perm[n_train:n_train + n_val]] = VAL
    clean.split[perm[n_train + n_val:]] = TEST


def build_dataset(dataset_cfg: dict, seed: int | None = None) -> CorruptedDataset:
    seed = dataset_cfg["seed"] if seed is None else seed
    clean = _clean_from_config(dataset_cfg, seed)
    classes = build_error_classes(dataset_cfg["kind"], seed,
                                  height=clean.height, width=clean.width)
    return corrupt(clean, dataset_cfg["noise_level"], classes, seed,
                   kind=dataset_cfg["kind"])


def cmd_build_data(cfg: dict, out_dir, seed: int | None = None) -> Path:
    validate_config(cfg, require=("dataset",))
    ds = build_dataset(cfg["dataset"], seed)
    return save_bundle(ds, out_dir)


def cmd_train(cfg: dict, bundle_dir, out_dir, seed: int | None = None,
              model_kind: str | None = None) -> Path:
    validate_config(cfg, require=("dataset", "model", "train"))
    bundle_dir = Path(bundle_dir)
    if not (bundle_dir / "manifest.json").exists():
        raise ConfigError(f"dataset bundle not found at {bundle_dir}")
    ds = load_bundle(bundle_dir)
    model_cfg = dict(cfg["models"][model_kind] if model_kind and "models" in cfg
                     else cfg["model"])
    kind = model_cfg.pop("kind")
    t = cfg["train"]
    seed = t.get("seed", 1) if seed is None else seed
    trusted = sample_trusted_set(ds, cfg["dataset"].get("per_class", 0), seed)
    train_cfg = TrainConfig(epochs=t["epochs"], batch_size=t.get("batch_size", 64),
                            learning_rate=t.get("learning_rate", 1e-3))
    train(kind, model_cfg, ds, trusted, train_cfg, seed, out_dir=out_dir)
    return Path(out_dir)


def cmd_eval(checkpoint_dir, bundle_dir, out_dir, gamma: float | None = None,
             split: str = "train", per_class: int = -1, n_grid: int = 8) -> EvalReport:
    bundle_dir = Path(bundle_dir)
    if not (bundle_dir / "manifest.json").exists():
        raise ConfigError(f"dataset bundle not found at {bundle_dir}")
    ds = load_bundle(bundle_dir)
    ckpt = load_checkpoint(checkpoint_dir)
    model = model_from_checkpoint(ckpt)
    if model.n_pixels != ds.n_pixels:
        raise ConfigError(
            f"checkpoint expects {model.n_pixels} pixels but bundle has {ds.n_pixels}"
        )
    report = evaluate(model, ds, split=split,
                      gamma=DEFAULT_GAMMA if gamma is None else gamma,
                      per_class=per_class, seed=ckpt.seed)
    out = Path(out_dir)
    report.save(out)
    idx = ds.indices(split)
    outliers = idx[ds.y_true[idx] == 0][:n_grid]
    if len(outliers):
        grid = repair_grid(ds, outliers, model.repair(ds.images[outliers]))
        (out / "grids").mkdir(parents=True, exist_ok=True)
        write_pgm(out / "grids" / f"repairs_{split}.pgm", grid)
    return report


def _run_cell(cfg: dict, model_kind: str, noise: float, per_class: int, seed: int,
              bundle_dir: Path, cell_dir: Path) -> EvalReport:
    ds = load_bundle(bundle_dir)
    model_cfg = dict(cfg["models"][model_kind])
    kind = model_cfg.pop("kind")
    t = cfg["train"]
    trusted = sample_trusted_set(ds, per_class, seed)
    train_cfg = TrainConfig(epochs=t["epochs"], batch_size=t.get("batch_size", 64),
                            learning_rate=t.get("learning_rate", 1e-3))
    train(kind, model_cfg, ds, trusted, train_cfg, seed, out_dir=cell_dir)
    model = model_from_checkpoint(load_checkpoint(cell_dir))
    report = evaluate(model, ds, split=cfg.get("eval", {}).get("split", "train"),
                      per_class=per_class, seed=seed)
    report.save(cell_dir)
    return report


def cmd_sweep(cfg: dict, out_dir) -> dict:
    """Train/evaluate every (model, noise, per_class, seed) cell; failures are
    recorded per cell and the sweep continues."""
    validate_config(cfg, require=("dataset", "train"))
    sweep = cfg.get("sweep")
    if not sweep:
        raise ConfigError("config is missing the 'sweep' section")
    if "models" not in cfg:
        raise ConfigError("sweep needs a 'models' table of per-kind hyperparameters")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    bundles: dict[tuple, Path] = {}
    for noise in sweep["noise_levels"]:
        for seed in sweep["seeds"]:
            d_cfg = dict(cfg["dataset"], noise_level=noise, seed=seed)
            bundle_dir = out / "data" / f"noise{noise:g}-seed{seed}"
            if not (bundle_dir / "manifest.json").exists():
                save_bundle(build_dataset(d_cfg), bundle_dir)
            bundles[(noise, seed)] = bundle_dir

    reports: list[EvalReport] = []
    failures: list[dict] = []
    for model_kind in sweep["models"]:
        for noise in sweep["noise_levels"]:
            for per_class in sweep["per_class"]:
                for seed in sweep["seeds"]:
                    cell = f"{model_kind}-noise{noise:g}-pc{per_class}-seed{seed}"
                    cell_dir = out / "cells" / cell
                    try:
                        reports.append(_run_cell(cfg, model_kind, noise, per_class, seed,
                                                 bundles[(noise, seed)], cell_dir))
                    except Exception as exc:
                        failures.append({"cell": cell, "error": f"{type(exc).__name__}: {exc}",
                                         "trace": traceback.format_exc()})

    rows = [r.csv_row() for r in reports]
    (out / "reports.csv").write_text(
        "\n".join([EvalReport.CSV_HEADER, *rows]) + "\n" if rows else "")
    aggregates = aggregate_reports(reports)
    _write_aggregate_csv(out / "aggregate.csv", aggregates)
    if failures:
        (out / "failures.json").write_text(json.dumps(failures, indent=2) + "\n")
    return {"reports": reports, "aggregates": aggregates, "failures": failures}


_AGG_COLUMNS = ("dataset", "model", "noise", "per_class", "seeds",
                "avpr", "avpr_se", "smse_dirty", "smse_dirty_se",
                "smse_clean", "smse_clean_se")


def _write_aggregate_csv(path, rows: list[dict]) -> None:
    lines = [",".join(_AGG_COLUMNS)]
    for row in rows:
        lines.append(",".join(str(row[c]) for c in _AGG_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_report(sweep_dir) -> list[dict]:
    """Re-aggregate the per-cell reports under a sweep directory."""
    root = Path(sweep_dir)
    paths = sorted(root.glob("cells/*/report.json"))
    if not paths:
        raise ConfigError(f"no cell reports found under {root}")
    reports = [EvalReport.load(p) for p in paths]
    aggregates = aggregate_reports(reports)
    _write_aggregate_csv(root / "aggregate.csv", aggregates)
    return aggregates


def format_aggregate_table(rows: list[dict]) -> str:
    """Fixed-width table with mean (standard error) per metric."""
    header = f"{'dataset':<10} {'model':<12} {'noise':>6} {'pc':>4} " \
             f"{'AVPR':>15} {'SMSE dirty':>15} {'SMSE clean':>15}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r['dataset']:<10} {r['model']:<12} {r['noise']:>6g} {r['per_class']:>4} "
            f"{r['avpr_fmt']:>15} {r['smse_dirty_fmt']:>15} {r['smse_clean_fmt']:>15}"
        )
    return "\n".join(lines)
