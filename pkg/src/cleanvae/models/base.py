"""Shared model building blocks: Gaussian encoders, pixel decoders, checkpoints."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..distributions import (
    STD_FLOOR,
    DiagGaussian,
    bernoulli_recon_nll,
    gaussian_recon_nll,
)
from ..nn import DenseLayer, dense, mlp_params

DECODER_LOGVAR_INIT = float(2.0 * np.log(0.1))  # decoder std starts at 0.1 of pixel range


@dataclass
class BatchData:
    """One optimization step's worth of instances."""

    x_unlabelled: np.ndarray
    x_labelled: np.ndarray
    y_labelled: np.ndarray
    y_unlabelled: np.ndarray | None = None   # ground truth, only for supervised baselines


@dataclass
class StepContext:
    """Schedule values and dataset-level counts for one step's loss."""

    rng: np.random.Generator
    kl_coef: float = 1.0
    lambda_t: float = 0.0
    omega: float = 1.0
    n_unlabelled: int = 0
    n_labelled: int = 0


def imbalance_weight(labels) -> float:
    """max{1, #inliers/#outliers} over the trusted labels; 1 when either side is empty."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return 1.0
    n1 = int((labels == 1).sum())
    n0 = int(labels.size - n1)
    if n0 == 0:
        return 1.0
    return max(1.0, n1 / n0)


class GaussianEncoder:
    """ReLU trunk with separate mean and std heads; std = softplus(raw) + floor."""

    def __init__(self, rng, in_dim: int, hidden: tuple[int, ...], out_dim: int, dtype=np.float64):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.trunk: list[DenseLayer] = []
        last = in_dim
        for h in hidden:
            self.trunk.append(dense(rng, last, h, init="kaiming", dtype=dtype))
            last = h
        self.mean_head = dense(rng, last, out_dim, init="xavier", dtype=dtype)
        self.std_head = dense(rng, last, out_dim, init="xavier", dtype=dtype)

    def __call__(self, x) -> DiagGaussian:
        h = ad.wrap(x)
        for layer in self.trunk:
            h = ad.relu(layer(h))
        mean = self.mean_head(h)
        std = ad.softplus(self.std_head(h)) + STD_FLOOR
        return DiagGaussian(mean, std)

    def params(self, prefix: str) -> dict[str, Tensor]:
        out = mlp_params(f"{prefix}.trunk", self.trunk)
        out.update(self.mean_head.params(f"{prefix}.mean"))
        out.update(self.std_head.params(f"{prefix}.std"))
        return out


class PixelDecoder:
    """ReLU stack ending in Bernoulli probs (binary) or a Gaussian mean with one
    shared learned log-variance (continuous)."""

    def __init__(self, rng, latent_dim: int, hidden: tuple[int, ...], out_dim: int,
                 pixel_kind: str, dtype=np.float64):
        self.latent_dim = latent_dim
        self.pixel_kind = pixel_kind
        self.layers: list[DenseLayer] = []
        last = latent_dim
        for h in hidden:
            self.layers.append(dense(rng, last, h, init="kaiming", dtype=dtype))
            last = h
        self.layers.append(dense(rng, last, out_dim, init="xavier", dtype=dtype))
        if pixel_kind == "continuous":
            self.logvar = Tensor(np.array(DECODER_LOGVAR_INIT, dtype=dtype), requires_grad=True)
        else:
            self.logvar = None

    def __call__(self, z) -> Tensor:
        h = ad.wrap(z)
        for layer in self.layers[:-1]:
            h = ad.relu(layer(h))
        h = self.layers[-1](h)
        if self.pixel_kind == "binary":
            return ad.sigmoid(h)
        return h

    def recon_nll(self, x, z) -> Tensor:
        out = self(z)
        if self.pixel_kind == "binary":
            return bernoulli_recon_nll(x, out)
        return gaussian_recon_nll(x, out, self.logvar)

    def nll_of_output(self, x, out) -> Tensor:
        if self.pixel_kind == "binary":
            return bernoulli_recon_nll(x, out)
        return gaussian_recon_nll(x, out, self.logvar)

    def params(self, prefix: str) -> dict[str, Tensor]:
        out = mlp_params(f"{prefix}.net", self.layers)
        if self.logvar is not None:
            out[f"{prefix}.logvar"] = self.logvar
        return out


def as_pixels(decoded: np.ndarray, pixel_kind: str) -> np.ndarray:
    return decoded if pixel_kind == "binary" else np.clip(decoded, 0.0, 1.0)


def chunks(n: int, size: int = 4096):
    for start in range(0, n, size):
        yield slice(start, min(start + size, n))


# ---------------------------------------------------------------------------
# checkpoints: manifest.json + little-endian float64 parameter blob

@dataclass
class Checkpoint:
    model_kind: str
    config: dict
    epoch: int
    seed: int
    arrays: dict[str, np.ndarray]
    rng_state: dict | None = None
    opt_state: dict | None = None


def save_checkpoint(out_dir, model, epoch: int, seed: int,
                    rng_state: dict | None = None, optimizer=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    arrays = {name: p.data for name, p in model.params().items()}
    opt_meta = None
    if optimizer is not None:
        state = optimizer.state()
        opt_meta = {"step_count": state["step_count"]}
        for name, arr in state["m"].items():
            arrays[f"__opt_m__.{name}"] = arr
        for name, arr in state["v"].items():
            arrays[f"__opt_v__.{name}"] = arr
    index = []
    offset = 0
    blobs = []
    for name, arr in arrays.items():
        flat = np.ascontiguousarray(arr, dtype="<f8")
        index.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(flat.tobytes())
        offset += flat.size
    manifest = {
        "model_kind": model.kind,
        "config": model.to_config(),
        "epoch": int(epoch),
        "seed": int(seed),
        "rng_state": rng_state,
        "opt": opt_meta,
        "tensors": index,
    }
    (out / "params.bin").write_bytes(b"".join(blobs))
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def load_checkpoint(ckpt_dir) -> Checkpoint:
    root = Path(ckpt_dir)
    manifest = json.loads((root / "manifest.json").read_text())
    blob = np.fromfile(root / "params.bin", dtype="<f8")
    arrays = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        arrays[entry["name"]] = blob[entry["offset"]:entry["offset"] + size].reshape(shape).copy()
    opt_state = None
    if manifest.get("opt"):
        m = {k[len("__opt_m__."):]: v for k, v in arrays.items() if k.startswith("__opt_m__.")}
        v = {k[len("__opt_v__."):]: a for k, a in arrays.items() if k.startswith("__opt_v__.")}
        arrays = {k: a for k, a in arrays.items() if not k.startswith("__opt_")}
        opt_state = {"step_count": manifest["opt"]["step_count"], "m": m, "v": v}
    return Checkpoint(
        model_kind=manifest["model_kind"], config=manifest["config"],
        epoch=manifest["epoch"], seed=manifest["seed"], arrays=arrays,
        rng_state=manifest.get("rng_state"), opt_state=opt_state,
    )


def restore_params(model, arrays: dict[str, np.ndarray]) -> None:
    params = model.params()
    missing = set(params) - set(arrays)
    if missing:
        raise ValueError(f"checkpoint is missing tensors: {sorted(missing)[:3]}...")
    for name, p in params.items():
        if tuple(arrays[name].shape) != p.data.shape:
            raise ValueError(f"tensor {name} shape {arrays[name].shape} != {p.data.shape}")
        p.data = arrays[name].astype(p.data.dtype)
