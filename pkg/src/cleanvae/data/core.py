"""Dataset containers shared by the generators, loaders, and bundle I/O."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TRAIN, VAL, TEST = 0, 1, 2
SPLIT_NAMES = {"train": TRAIN, "val": VAL, "test": TEST}


class ConfigError(ValueError):
    """Invalid experiment or dataset configuration."""


@dataclass
class CleanDataset:
    """Uncorrupted images as [N, H*W] rows in [0, 1]."""

    images: np.ndarray
    height: int
    width: int
    pixel_kind: str                 # "binary" | "continuous"
    class_id: np.ndarray
    split: np.ndarray               # TRAIN/VAL/TEST code per instance

    def __post_init__(self):
        if self.pixel_kind not in ("binary", "continuous"):
            raise ConfigError(f"unknown pixel kind {self.pixel_kind!r}")
        if self.images.ndim != 2 or self.images.shape[1] != self.height * self.width:
            raise ConfigError(
                f"images shape {self.images.shape} inconsistent with "
                f"{self.height}x{self.width}"
            )

    @property
    def n(self) -> int:
        return self.images.shape[0]


@dataclass(frozen=True)
class ErrorClass:
    """One systematic corruption: a fixed pixel footprint overwritten with one color."""

    kind: str                       # "line" | "square"
    color: float                    # pixel value written into the footprint
    orientation: str | None = None  # lines: horizontal|vertical|diag-main|diag-anti
    index: int | None = None        # lines: row or column for axis-aligned ones
    top: int | None = None          # squares: top-left corner
    left: int | None = None
    size: int = 6                   # squares: side length

    def footprint(self, height: int, width: int) -> np.ndarray:
        """Boolean [H*W] mask of affected pixels; deterministic per class."""
        mask = np.zeros((height, width), dtype=bool)
        if self.kind == "line":
            if self.orientation == "horizontal":
                mask[self.index, :] = True
            elif self.orientation == "vertical":
                mask[:, self.index] = True
            elif self.orientation == "diag-main":
                n = min(height, width)
                mask[np.arange(n), np.arange(n)] = True
            elif self.orientation == "diag-anti":
                n = min(height, width)
                mask[np.arange(n), width - 1 - np.arange(n)] = True
            else:
                raise ConfigError(f"unknown line orientation {self.orientation!r}")
        elif self.kind == "square":
            mask[self.top:self.top + self.size, self.left:self.left + self.size] = True
        else:
            raise ConfigError(f"unknown error kind {self.kind!r}")
        if self.kind == "square" and mask.sum() != self.size * self.size:
            raise ConfigError("square footprint extends outside the image")
        return mask.reshape(-1)

    def describe(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class CorruptedDataset:
    """Images after systematic-error injection, with full ground truth retained."""

    images: np.ndarray
    clean_truth: np.ndarray
    y_true: np.ndarray              # 1 inlier, 0 outlier
    error_class_id: np.ndarray      # index into error_classes; -1 for inliers
    dirty_mask: np.ndarray          # bool [N, D]; overwritten pixels
    class_id: np.ndarray
    split: np.ndarray
    height: int
    width: int
    pixel_kind: str
    error_classes: list[ErrorClass]
    noise_level: float
    seed: int
    kind: str = "shapes"

    @property
    def n(self) -> int:
        return self.images.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.images.shape[1]

    def indices(self, split: str | None) -> np.ndarray:
        if split is None or split == "all":
            return np.arange(self.n)
        return np.flatnonzero(self.split == SPLIT_NAMES[split])


@dataclass
class TrustedSet:
    """The only supervision: a few labelled indices into the train split."""

    indices: np.ndarray
    labels: np.ndarray              # y: 1 inlier, 0 outlier
    per_class: int = 0

    def __post_init__(self):
        if len(np.unique(self.indices)) != len(self.indices):
            raise ValueError("trusted indices must be unique")

    def __len__(self) -> int:
        return len(self.indices)

    @staticmethod
    def empty() -> "TrustedSet":
        return TrustedSet(np.array([], dtype=np.int64), np.array([], dtype=np.int64), 0)
