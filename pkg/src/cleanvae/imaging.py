"""Binary PGM (P5) export and original/ground-truth/repair comparison grids."""

from __future__ import annotations

from pathlib import Path

import numpy as np

SEPARATOR_GRAY = 0.5


def write_pgm(path, image01: np.ndarray) -> Path:
    """Write a [0,1] float image as an 8-bit binary PGM."""
    img = np.asarray(image01, dtype=float)
    if img.ndim != 2:
        raise ValueError("PGM export expects a 2-D image")
    data = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())
    return Path(path)


def repair_grid(ds, indices, repairs: np.ndarray) -> np.ndarray:
    """Rows = instances; columns = original | ground truth | repair.

    Canvas is (rows*H + rows-1) x (3*W + 2) with one-pixel gray separators.
    """
    indices = np.asarray(indices)
    rows = len(indices)
    if rows == 0:
        raise ValueError("grid needs at least one instance")
    h, w = ds.height, ds.width
    canvas = np.full((rows * h + rows - 1, 3 * w + 2), SEPARATOR_GRAY)
    for r, idx in enumerate(indices):
        top = r * (h + 1)
        panels = (ds.images[idx], ds.clean_truth[idx], repairs[r])
        for c, panel in enumerate(panels):
            left = c * (w + 1)
            canvas[top:top + h, left:left + w] = panel.reshape(h, w)
    return canvas
