"""Corrupted-dataset bundles persisted as a directory of flat files.

Layout: images.bin / clean.bin (float64 LE), masks.bin (uint8), y_true.csv
(per-instance ground truth), manifest.json (geometry, error classes, seed).
Writes are byte-deterministic so a rebuild with the same config is identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import CorruptedDataset, ErrorClass

_CSV_HEADER = "index,y_true,error_class_id,class_id,split"


def save_bundle(ds: CorruptedDataset, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds.images.astype("<f8").tofile(out / "images.bin")
    ds.clean_truth.astype("<f8").tofile(out / "clean.bin")
    ds.dirty_mask.astype(np.uint8).tofile(out / "masks.bin")
    rows = [_CSV_HEADER]
    for i in range(ds.n):
        rows.append(f"{i},{ds.y_true[i]},{ds.error_class_id[i]},{ds.class_id[i]},{ds.split[i]}")
    (out / "y_true.csv").write_text("\n".join(rows) + "\n")
    manifest = {
        "n": int(ds.n),
        "height": int(ds.height),
        "width": int(ds.width),
        "pixel_kind": ds.pixel_kind,
        "kind": ds.kind,
        "noise_level": float(ds.noise_level),
        "seed": int(ds.seed),
        "error_classes": [c.describe() for c in ds.error_classes],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def load_bundle(bundle_dir) -> CorruptedDataset:
    root = Path(bundle_dir)
    manifest = json.loads((root / "manifest.json").read_text())
    n = manifest["n"]
    d = manifest["height"] * manifest["width"]
    images = np.fromfile(root / "images.bin", dtype="<f8").reshape(n, d)
    clean = np.fromfile(root / "clean.bin", dtype="<f8").reshape(n, d)
    mask = np.fromfile(root / "masks.bin", dtype=np.uint8).reshape(n, d).astype(bool)
    table = np.loadtxt(root / "y_true.csv", delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    classes = [ErrorClass(**spec) for spec in manifest["error_classes"]]
    return CorruptedDataset(
        images=images, clean_truth=clean, y_true=table[:, 1],
        error_class_id=table[:, 2], dirty_mask=mask,
        class_id=table[:, 3], split=table[:, 4],
        height=manifest["height"], width=manifest["width"],
        pixel_kind=manifest["pixel_kind"], error_classes=classes,
        noise_level=manifest["noise_level"], seed=manifest["seed"],
        kind=manifest.get("kind", "shapes"),
    )
