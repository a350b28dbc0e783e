import numpy as np
import pytest

from cleanvae.autodiff import Tape


def finite_difference_grads(loss_fn, params, h=1e-5):
    """Central finite differences of ``loss_fn()`` w.r.t. each named parameter.

    ``loss_fn`` must be a pure function of the current ``params[...].data``
    contents (re-run per probe); returns a name -> gradient array map.
    """
    grads = {}
    for name, p in params.items():
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = float(loss_fn())
            flat[i] = orig - h
            f_minus = float(loss_fn())
            flat[i] = orig
            gflat[i] = (f_plus - f_minus) / (2.0 * h)
        grads[name] = g
    return grads


def max_relative_error(analytic, numeric, floor=1e-8):
    err = 0.0
    for name in analytic:
        a, n = analytic[name], numeric[name]
        denom = np.maximum(floor, np.maximum(np.abs(a), np.abs(n)))
        err = max(err, float(np.max(np.abs(a - n) / denom)))
    return err


def check_gradients(loss_fn, params, h=1e-5, tol=1e-4):
    """Assert analytic gradients of ``loss_fn`` match central differences."""
    for p in params.values():
        p.grad = None
    with Tape() as tape:
        loss = loss_fn()
    analytic = tape.gradients(loss, params)
    numeric = finite_difference_grads(loss_fn, params, h=h)
    err = max_relative_error(analytic, numeric)
    assert err < tol, f"max relative gradient error {err:.3e} >= {tol:.0e}"
    return err


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
