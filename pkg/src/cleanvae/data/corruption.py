"""Systematic-error injection and trusted-set sampling.

Each error class owns a fixed pixel footprint and color, so every instance it
hits is corrupted in exactly the same way.  Outliers are drawn uniformly
without replacement and the classes are balanced over them round-robin after
a seeded shuffle.
"""

from __future__ import annotations

import numpy as np

from .core import TRAIN, CleanDataset, ConfigError, CorruptedDataset, ErrorClass, TrustedSet


class InsufficientClassMembers(ValueError):
    """A class cannot supply the requested number of trusted labels."""


def _seeded_lines(rng, height, width, colors: str) -> list[ErrorClass]:
    orientations = ["horizontal", "vertical", "diag-main", "diag-anti"]
    classes = []
    for orient in orientations:
        if orient == "horizontal":
            idx = int(rng.integers(3, height - 3))
        elif orient == "vertical":
            idx = int(rng.integers(3, width - 3))
        else:
            idx = None
        color = 1.0 if colors == "white" else float(rng.integers(0, 2))
        classes.append(ErrorClass(kind="line", color=color, orientation=orient, index=idx))
    return classes


def _seeded_squares(rng, height, width, count: int = 4, size: int = 6) -> list[ErrorClass]:
    classes = []
    for _ in range(count):
        top = int(rng.integers(0, height - size + 1))
        left = int(rng.integers(0, width - size + 1))
        color = float(rng.integers(0, 2))
        classes.append(ErrorClass(kind="square", color=color, top=top, left=left, size=size))
    return classes


def build_error_classes(dataset_kind: str, seed: int,
                        height: int = 28, width: int = 28) -> list[ErrorClass]:
    """Fixed error-class geometry per dataset family, deterministic per seed."""
    rng = np.random.default_rng([seed, 0xE5])
    if dataset_kind == "shapes":
        return _seeded_lines(rng, height, width, colors="white")
    if dataset_kind == "fashion":
        return _seeded_lines(rng, height, width, colors="random") + \
            _seeded_squares(rng, height, width)
    if dataset_kind == "frey":
        return _seeded_squares(rng, height, width)
    raise ConfigError(f"unknown dataset kind {dataset_kind!r}")


def corrupt(clean: CleanDataset, noise_level: float, classes: list[ErrorClass],
            seed: int, kind: str = "shapes") -> CorruptedDataset:
    """Overwrite the footprints of ~noise_level*N instances, keeping ground truth."""
    if not 0.0 <= noise_level < 1.0:
        raise ConfigError(f"noise level must be in [0, 1), got {noise_level}")
    rng = np.random.default_rng([seed, 0xC0])
    n = clean.n
    images = clean.images.copy()
    y_true = np.ones(n, dtype=np.int64)
    error_class_id = np.full(n, -1, dtype=np.int64)
    dirty_mask = np.zeros_like(images, dtype=bool)

    n_out = int(np.floor(noise_level * n))
    chosen = rng.choice(n, size=n_out, replace=False)
    rng.shuffle(chosen)
    footprints = [c.footprint(clean.height, clean.width) for c in classes]
    for rank, idx in enumerate(chosen):
        k = rank % len(classes)
        fp = footprints[k]
        images[idx, fp] = classes[k].color
        dirty_mask[idx, fp] = True
        error_class_id[idx] = k
        y_true[idx] = 0

    return CorruptedDataset(
        images=images, clean_truth=clean.images.copy(), y_true=y_true,
        error_class_id=error_class_id, dirty_mask=dirty_mask,
        class_id=clean.class_id.copy(), split=clean.split.copy(),
        height=clean.height, width=clean.width, pixel_kind=clean.pixel_kind,
        error_classes=list(classes), noise_level=noise_level, seed=seed, kind=kind,
    )


def _take_per_class(candidates: np.ndarray, per_class: int, seed_key: list, name: str):
    if len(candidates) < per_class:
        raise InsufficientClassMembers(
            f"class {name} has only {len(candidates)} train members, need {per_class}"
        )
    # per-class permutation prefix: smaller trusted sets nest inside bigger ones
    perm = np.random.default_rng(seed_key).permutation(len(candidates))
    return candidates[perm[:per_class]]


def sample_trusted_set(ds: CorruptedDataset, per_class: int, seed: int) -> TrustedSet:
    """per_class inlier labels per data class plus per_class outlier labels per error class."""
    if per_class == 0:
        return TrustedSet.empty()
    train = ds.split == TRAIN
    indices: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    for c in np.unique(ds.class_id):
        cand = np.flatnonzero(train & (ds.y_true == 1) & (ds.class_id == c))
        picked = _take_per_class(cand, per_class, [seed, 1, int(c)], f"data-{c}")
        indices.append(picked)
        labels.append(np.ones(per_class, dtype=np.int64))
    for k in range(len(ds.error_classes)):
        cand = np.flatnonzero(train & (ds.y_true == 0) & (ds.error_class_id == k))
        picked = _take_per_class(cand, per_class, [seed, 2, k], f"error-{k}")
        indices.append(picked)
        labels.append(np.zeros(per_class, dtype=np.int64))
    return TrustedSet(np.concatenate(indices), np.concatenate(labels), per_class)
