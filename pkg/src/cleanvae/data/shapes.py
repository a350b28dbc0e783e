"""Synthetic binary image dataset: one white filled shape per black frame.

Four balanced classes (circle, rectangle, ellipse, triangle) placed uniformly
at random, fully inside the frame, with an 80/10/10 train/val/test split.
Generation is a pure function of (n, seed).
"""

from __future__ import annotations

import numpy as np

from .core import TEST, TRAIN, VAL, CleanDataset

SHAPE_NAMES = ("circle", "rectangle", "ellipse", "triangle")


def _raster_circle(rng, height, width):
    r = int(rng.integers(4, 10))
    cy = int(rng.integers(r + 1, height - r - 1))
    cx = int(rng.integers(r + 1, width - r - 1))
    yy, xx = np.mgrid[0:height, 0:width]
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r


def _raster_rectangle(rng, height, width):
    h = int(rng.integers(6, 15))
    w = int(rng.integers(6, 15))
    top = int(rng.integers(1, height - h))
    left = int(rng.integers(1, width - w))
    img = np.zeros((height, width), dtype=bool)
    img[top:top + h, left:left + w] = True
    return img


def _raster_ellipse(rng, height, width):
    a = int(rng.integers(6, 11))          # x semi-axis
    b = int(rng.integers(3, a - 1))       # y semi-axis, strictly flatter than a circle
    if rng.random() < 0.5:
        a, b = b, a
    cy = int(rng.integers(b + 1, height - b - 1))
    cx = int(rng.integers(a + 1, width - a - 1))
    yy, xx = np.mgrid[0:height, 0:width]
    return ((yy - cy) / b) ** 2 + ((xx - cx) / a) ** 2 <= 1.0


def _raster_triangle(rng, height, width):
    w = int(rng.integers(8, 17))
    h = int(rng.integers(8, 17))
    top = int(rng.integers(1, height - h - 1))
    left = int(rng.integers(1, width - w - 1))
    apex_x = left + float(rng.uniform(0.2, 0.8)) * w
    v0 = np.array([top, apex_x])
    v1 = np.array([top + h, left])
    v2 = np.array([top + h, left + w])
    yy, xx = np.mgrid[0:height, 0:width]
    pts = np.stack([yy, xx], axis=-1).astype(float)

    def half_plane(a, b):
        return (b[0] - a[0]) * (pts[..., 1] - a[1]) - (b[1] - a[1]) * (pts[..., 0] - a[0])

    d0, d1, d2 = half_plane(v0, v1), half_plane(v1, v2), half_plane(v2, v0)
    inside = ((d0 <= 0) & (d1 <= 0) & (d2 <= 0)) | ((d0 >= 0) & (d1 >= 0) & (d2 >= 0))
    return inside


_RASTERIZERS = (_raster_circle, _raster_rectangle, _raster_ellipse, _raster_triangle)


def generate_shapes(n: int, seed: int, height: int = 28, width: int = 28) -> CleanDataset:
    if n <= 0:
        raise ValueError("n must be positive")
    if min(height, width) < 24:
        raise ValueError("shape size ranges need a frame of at least 24x24")
    rng = np.random.default_rng(seed)
    images = np.zeros((n, height * width), dtype=np.float64)
    class_id = np.arange(n, dtype=np.int64) % len(_RASTERIZERS)
    for i in range(n):
        img = _RASTERIZERS[class_id[i]](rng, height, width)
        images[i] = img.reshape(-1).astype(np.float64)
    split = np.full(n, TRAIN, dtype=np.int64)
    perm = rng.permutation(n)
    n_train = int(round(0.8 * n))
    n_val = int(round(0.1 * n))
    split[perm[n_train:n_train + n_val]] = VAL
    split[perm[n_train + n_val:]] = TEST
    return CleanDataset(images, height, width, "binary", class_id, split)
