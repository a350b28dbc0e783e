import numpy as np

from .base import (
    BatchData,
    Checkpoint,
    StepContext,
    imbalance_weight,
    load_checkpoint,
    restore_params,
    save_checkpoint,
)
from .clsvae import CleanSubspaceVAE, ClsvaeHyper
from .cvae import ConditionalVAE, CvaeHyper
from .vae import VaeL2Hyper, WeightDecayVAE
from .vaegmm import MixturePriorVAE, VaegmmHyper

_HYPERS = {
    "clsvae": ClsvaeHyper,
    "clsvae-nodc": ClsvaeHyper,
    "vae-l2": VaeL2Hyper,
    "cvae": CvaeHyper,
    "vaegmm": VaegmmHyper,
}

_CLASSES = {
    "clsvae": CleanSubspaceVAE,
    "clsvae-nodc": CleanSubspaceVAE,
    "vae-l2": WeightDecayVAE,
    "cvae": ConditionalVAE,
    "vaegmm": MixturePriorVAE,
}

MODEL_KINDS = tuple(_CLASSES)


def hyper_from_dict(kind: str, config: dict):
    if kind not in _HYPERS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    cls = _HYPERS[kind]
    fields = {f for f in cls.__dataclass_fields__}
    unknown = set(config) - fields - {"kind", "n_pixels", "pixel_kind"}
    if unknown:
        raise ValueError(f"unknown {kind} hyperparameters: {sorted(unknown)}")
    kwargs = {k: v for k, v in config.items() if k in fields}
    for key in ("hidden", "classifier_hidden"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    hyper = cls(**kwargs)
    if kind == "clsvae-nodc":
        hyper.lambda_max = 0.0
    return hyper.validate()


def build_model(kind: str, n_pixels: int, pixel_kind: str, config: dict,
                rng: np.random.Generator, dtype=np.float64):
    hyper = hyper_from_dict(kind, config)
    model = _CLASSES[kind](n_pixels, pixel_kind, hyper, rng, dtype=dtype)
    model.kind = kind
    return model


def model_from_checkpoint(ckpt: Checkpoint, dtype=np.float64):
    cfg = dict(ckpt.config)
    n_pixels = cfg.pop("n_pixels")
    pixel_kind = cfg.pop("pixel_kind")
    model = build_model(ckpt.model_kind, n_pixels, pixel_kind, cfg,
                        np.random.default_rng(0), dtype=dtype)
    restore_params(model, ckpt.arrays)
    return model


__all__ = [
    "MODEL_KINDS",
    "BatchData", "StepContext", "Checkpoint",
    "CleanSubspaceVAE", "ClsvaeHyper",
    "WeightDecayVAE", "VaeL2Hyper",
    "ConditionalVAE", "CvaeHyper",
    "MixturePriorVAE", "VaegmmHyper",
    "build_model", "hyper_from_dict", "model_from_checkpoint",
    "imbalance_weight", "save_checkpoint", "load_checkpoint", "restore_params",
]
