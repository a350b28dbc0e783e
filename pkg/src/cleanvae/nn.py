"""Dense layers, seeded initializers, and the Adam optimizer."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


class TrainingDiverged(RuntimeError):
    """Raised when a gradient or loss stops being finite."""

    def __init__(self, message: str, param_name: str | None = None):
        super().__init__(message)
        self.param_name = param_name


class DenseLayer:
    """Affine map with weight [out, in] and bias [out]."""

    def __init__(self, weight: Tensor, bias: Tensor):
        w, b = weight.data, bias.data
        if w.ndim != 2 or b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise ValueError(f"inconsistent dense shapes: weight {w.shape}, bias {b.shape}")
        self.weight = weight
        self.bias = bias

    @property
    def in_features(self) -> int:
        return self.weight.data.shape[1]

    @property
    def out_features(self) -> int:
        return self.weight.data.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        if x.data.ndim != 2 or x.data.shape[1] != self.in_features:
            raise ValueError(
                f"dense layer expects input width {self.in_features}, got shape {x.data.shape}"
            )
        return ad.matmul(x, ad.transpose(self.weight)) + self.bias

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.weight": self.weight, f"{prefix}.bias": self.bias}


def kaiming_uniform(rng: np.random.Generator, out_f: int, in_f: int, dtype=np.float64) -> np.ndarray:
    bound = np.sqrt(6.0 / in_f)
    return rng.uniform(-bound, bound, size=(out_f, in_f)).astype(dtype)


def xavier_uniform(rng: np.random.Generator, out_f: int, in_f: int, dtype=np.float64) -> np.ndarray:
    bound = np.sqrt(6.0 / (in_f + out_f))
    return rng.uniform(-bound, bound, size=(out_f, in_f)).astype(dtype)


def dense(rng: np.random.Generator, in_f: int, out_f: int, init: str = "kaiming",
          dtype=np.float64) -> DenseLayer:
    fn = kaiming_uniform if init == "kaiming" else xavier_uniform
    weight = Tensor(fn(rng, out_f, in_f, dtype), requires_grad=True)
    bias = Tensor(np.zeros(out_f, dtype=dtype), requires_grad=True)
    return DenseLayer(weight, bias)


def make_mlp(rng: np.random.Generator, sizes: tuple[int, ...], dtype=np.float64) -> list[DenseLayer]:
    """Stack of dense layers; kaiming init for hidden (ReLU) layers, xavier for the last."""
    layers = []
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        init = "kaiming" if i < len(sizes) - 2 else "xavier"
        layers.append(dense(rng, a, b, init=init, dtype=dtype))
    return layers


_OUTPUT_ACTIVATIONS = {
    "identity": lambda t: t,
    "relu": ad.relu,
    "sigmoid": ad.sigmoid,
    "softplus": ad.softplus,
}


def mlp_forward(layers: list[DenseLayer], x: Tensor, output_activation: str = "identity") -> Tensor:
    """ReLU between hidden layers; the final layer gets ``output_activation``."""
    if output_activation not in _OUTPUT_ACTIVATIONS:
        raise ValueError(f"unknown activation plan {output_activation!r}")
    h = ad.wrap(x)
    for layer in layers[:-1]:
        h = ad.relu(layer(h))
    h = layers[-1](h)
    return _OUTPUT_ACTIVATIONS[output_activation](h)


def mlp_params(prefix: str, layers: list[DenseLayer]) -> dict[str, Tensor]:
    out: dict[str, Tensor] = {}
    for i, layer in enumerate(layers):
        out.update(layer.params(f"{prefix}.{i}"))
    return out


class Adam:
    """Standard Adam with bias correction over a named parameter dict."""

    def __init__(self, params: dict[str, Tensor], learning_rate: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self) -> None:
        """Apply one update from the accumulated ``.grad`` fields, then clear them."""
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise TrainingDiverged(f"non-finite gradient for parameter {name!r}", name)
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data = p.data - self.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p.grad = None

    def state(self) -> dict:
        return {
            "step_count": self.step_count,
            "m": {k: v.copy() for k, v in self.m.items()},
            "v": {k: v.copy() for k, v in self.v.items()},
        }

    def load_state(self, state: dict) -> None:
        self.step_count = int(state["step_count"])
        for k in self.m:
            self.m[k] = np.array(state["m"][k])
            self.v[k] = np.array(state["v"][k])
