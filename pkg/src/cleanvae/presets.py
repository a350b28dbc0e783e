"""Named experiment presets: per-dataset defaults for every model kind.

``shapes-fixture`` is a small fast variant for smoke tests and demos.
External image files (IDX containers, flat pixel matrices) must be pointed to
via the dataset paths before the frey/fashion presets are runnable.
"""

from __future__ import annotations

import copy

_SHAPES_MODELS = {
    "clsvae": dict(kind="clsvae", dim_clean=10, dim_dirty=5, sigma_c=0.5, sigma_d=5.0,
                   sigma_eps=0.5, alpha=0.6, beta=1000.0, lambda_max=100.0,
                   dc_ramp_ratio=0.5, kl_ramp_ratio=0.5, use_stop_gradient=False),
    "clsvae-nodc": dict(kind="clsvae-nodc", dim_clean=10, dim_dirty=5, sigma_c=0.5,
                        sigma_d=5.0, sigma_eps=0.5, alpha=0.6, beta=1000.0,
                        lambda_max=0.0, kl_ramp_ratio=0.5),
    "vae-l2": dict(kind="vae-l2", latent_dim=15, l2_coefficient=35.0),
    "cvae": dict(kind="cvae", latent_dim=15, prior_sigma=0.5),
    "vaegmm": dict(kind="vaegmm", latent_dim=15, sigma_y1=0.9, sigma_y0=5.0,
                   alpha=0.6, beta=1000.0),
}

_FREY_MODELS = {
    "clsvae": dict(kind="clsvae", dim_clean=10, dim_dirty=5, sigma_c=0.2, sigma_d=5.0,
                   sigma_eps=0.6, alpha=0.6, beta=1000.0, lambda_max=1000.0,
                   dc_ramp_ratio=0.5, kl_ramp_ratio=0.5, use_stop_gradient=False),
    "clsvae-nodc": dict(kind="clsvae-nodc", dim_clean=10, dim_dirty=5, sigma_c=0.2,
                        sigma_d=5.0, sigma_eps=0.6, alpha=0.6, beta=1000.0,
                        lambda_max=0.0, kl_ramp_ratio=0.5),
    "vae-l2": dict(kind="vae-l2", latent_dim=15, l2_coefficient=100.0),
    "cvae": dict(kind="cvae", latent_dim=15, prior_sigma=0.2),
    "vaegmm": dict(kind="vaegmm", latent_dim=15, sigma_y1=0.6, sigma_y0=5.0,
                   alpha=0.6, beta=1000.0),
}

_FASHION_MODELS = {
    "clsvae": dict(kind="clsvae", dim_clean=10, dim_dirty=5, sigma_c=0.2, sigma_d=5.0,
                   sigma_eps=0.1, alpha=0.6, beta=100.0, lambda_max=1000.0,
                   dc_ramp_ratio=0.5, kl_ramp_ratio=0.5, use_stop_gradient=False),
    "clsvae-nodc": dict(kind="clsvae-nodc", dim_clean=10, dim_dirty=5, sigma_c=0.2,
                        sigma_d=5.0, sigma_eps=0.1, alpha=0.6, beta=100.0,
                        lambda_max=0.0, kl_ramp_ratio=0.5),
    "vae-l2": dict(kind="vae-l2", latent_dim=15, l2_coefficient=100.0),
    "cvae": dict(kind="cvae", latent_dim=15, prior_sigma=0.5),
    "vaegmm": dict(kind="vaegmm", latent_dim=15, sigma_y1=0.5, sigma_y0=5.0,
                   alpha=0.6, beta=100.0),
}

PRESETS: dict[str, dict] = {
    "shapes-35": {
        "dataset": {"kind": "shapes", "n": 5000, "height": 28, "width": 28,
                    "noise_level": 0.35, "per_class": 10, "seed": 1},
        "model": _SHAPES_MODELS["clsvae"],
        "models": _SHAPES_MODELS,
        "train": {"epochs": 200, "batch_size": 64, "learning_rate": 0.001, "seed": 1},
        "eval": {"split": "train"},
        "sweep": {"models": ["clsvae", "vae-l2"], "noise_levels": [0.35],
                  "per_class": [10], "seeds": [1, 2, 3]},
    },
    "shapes-fixture": {
        "dataset": {"kind": "shapes", "n": 500, "height": 28, "width": 28,
                    "noise_level": 0.35, "per_class": 10, "seed": 1},
        "model": _SHAPES_MODELS["clsvae"],
        "models": _SHAPES_MODELS,
        "train": {"epochs": 20, "batch_size": 64, "learning_rate": 0.001, "seed": 1},
        "eval": {"split": "train"},
        "sweep": {"models": ["clsvae"], "noise_levels": [0.35],
                  "per_class": [5, 10], "seeds": [1, 2]},
    },
    "frey-35": {
        "dataset": {"kind": "frey", "height": 28, "width": 20, "matrix_path": None,
                    "noise_level": 0.35, "per_class": 10, "seed": 1},
        "model": _FREY_MODELS["clsvae"],
        "models": _FREY_MODELS,
        "train": {"epochs": 300, "batch_size": 64, "learning_rate": 0.001, "seed": 1},
        "eval": {"split": "train"},
        "sweep": {"models": ["clsvae", "vae-l2"], "noise_levels": [0.35],
                  "per_class": [10], "seeds": [1, 2, 3]},
    },
    "fashion-35": {
        "dataset": {"kind": "fashion", "height": 28, "width": 28,
                    "train_images": None, "train_labels": None,
                    "test_images": None, "test_labels": None,
                    "noise_level": 0.35, "per_class": 10, "seed": 1},
        "model": _FASHION_MODELS["clsvae"],
        "models": _FASHION_MODELS,
        "train": {"epochs": 100, "batch_size": 64, "learning_rate": 0.001, "seed": 1},
        "eval": {"split": "train"},
        "sweep": {"models": ["clsvae", "vae-l2"], "noise_levels": [0.35],
                  "per_class": [10], "seeds": [1, 2, 3]},
    },
}


def get_preset(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name])
