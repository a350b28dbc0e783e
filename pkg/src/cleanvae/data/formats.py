"""External dataset containers: IDX ubyte files and flat pixel matrices."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import TRAIN, CleanDataset

IDX_MAGIC_IMAGES = 0x00000803
IDX_MAGIC_LABELS = 0x00000801


class FormatError(ValueError):
    """Malformed input file; message carries the failing byte offset where known."""


def read_idx(path) -> np.ndarray:
    """Read a big-endian IDX ubyte container of any rank."""
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise FormatError(f"{path}: truncated header at byte 0 (need 4 magic bytes)")
    magic = struct.unpack(">I", raw[:4])[0]
    if raw[0] != 0 or raw[1] != 0 or raw[2] != 0x08:
        raise FormatError(f"{path}: bad magic 0x{magic:08x} at byte 0 (want ubyte IDX)")
    ndim = raw[3]
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise FormatError(f"{path}: truncated dimension table at byte {len(raw)}")
    dims = struct.unpack(f">{ndim}I", raw[4:header_end])
    expected = int(np.prod(dims))
    body = np.frombuffer(raw, dtype=np.uint8, offset=header_end)
    if body.size != expected:
        raise FormatError(
            f"{path}: payload has {body.size} bytes at byte {header_end}, "
            f"expected {expected} for dims {dims}"
        )
    return body.reshape(dims)


def write_idx(path, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr, dtype=np.uint8)
    magic = IDX_MAGIC_IMAGES if arr.ndim == 3 else IDX_MAGIC_LABELS if arr.ndim == 1 else None
    if magic is None:
        raise ValueError("write_idx supports rank-3 image or rank-1 label arrays")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        for d in arr.shape:
            fh.write(struct.pack(">I", d))
        fh.write(arr.tobytes())


def _sibling_labels_path(images_path: Path) -> Path:
    name = images_path.name.replace("images", "labels").replace("idx3", "idx1")
    return images_path.with_name(name)


def load_idx(images_path, labels_path=None) -> CleanDataset:
    """Load an IDX image file (pixels scaled to [0,1]) plus its label file if present."""
    images_path = Path(images_path)
    imgs = read_idx(images_path)
    if imgs.ndim != 3:
        raise FormatError(f"{images_path}: expected a rank-3 image container, got rank {imgs.ndim}")
    n, height, width = imgs.shape
    flat = imgs.reshape(n, height * width).astype(np.float64) / 255.0
    if labels_path is None:
        cand = _sibling_labels_path(images_path)
        labels_path = cand if cand.exists() and cand != images_path else None
    if labels_path is not None:
        labels = read_idx(labels_path)
        if labels.ndim != 1 or labels.shape[0] != n:
            raise FormatError(f"{labels_path}: label count does not match {n} images")
        class_id = labels.astype(np.int64)
    else:
        class_id = np.zeros(n, dtype=np.int64)
    split = np.full(n, TRAIN, dtype=np.int64)
    return CleanDataset(flat, height, width, "continuous", class_id, split)


def load_matrix(path, height: int | None = None, width: int | None = None) -> CleanDataset:
    """Load a flat N x (H*W) pixel matrix from float64-LE binary or CSV.

    A sidecar ``<path>.json`` manifest ({n, height, width, pixel_kind}) supplies
    the geometry when the arguments are omitted.  Values in [0, 256] are
    rescaled to [0, 1].
    """
    path = Path(path)
    sidecar = path.with_name(path.name + ".json")
    pixel_kind = "continuous"
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        height = height or int(meta["height"])
        width = width or int(meta["width"])
        pixel_kind = meta.get("pixel_kind", pixel_kind)
    if height is None or width is None:
        raise FormatError(f"{path}: image geometry unknown (no arguments, no sidecar manifest)")
    if path.suffix == ".csv":
        values = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2).reshape(-1)
    else:
        values = np.fromfile(path, dtype="<f8")
    d = height * width
    if values.size == 0 or values.size % d != 0:
        raise FormatError(f"{path}: {values.size} values not divisible by {height}x{width}={d}")
    images = values.reshape(-1, d)
    if images.max() > 1.0:
        images = np.clip(images / 255.0, 0.0, 1.0)
    n = images.shape[0]
    return CleanDataset(images, height, width, pixel_kind,
                        np.zeros(n, dtype=np.int64), np.full(n, TRAIN, dtype=np.int64))
