"""Finite-difference verification of the analytic gradients.

Every check returns ``{tensor_name: max_relative_error}`` where the error of a
tensor is ``max|analytic - numeric| / max(max|analytic|, max|numeric|)``.
All arithmetic is float64.
"""

from __future__ import annotations

import numpy as np

from . import layers as L
from .model import ModelDef, backward_from_logits, forward, init_state, loss

STEP = 1e-3

REDUCED_DEF = ModelDef(input_shape=(1, 8, 8), conv_filters=(2, 3, 3, 3, 4, 4),
                       block_dropout=(0.0, 0.0, 0.0), dense_units=6, dense_dropout=0.0)


def numeric_grad(f, x: np.ndarray, h: float = STEP) -> np.ndarray:
    """Central differences of scalar ``f()`` w.r.t. every entry of ``x`` (mutated in place)."""
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        up = f()
        flat[i] = keep - h
        down = f()
        flat[i] = keep
        gflat[i] = (up - down) / (2.0 * h)
    return g


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def _projection(shape, rng):
    return rng.standard_normal(shape)


def check_conv(seed: int = 0, shape=(2, 6, 5, 3), c_out: int = 4) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    w = rng.standard_normal((3, 3, shape[-1], c_out)) * 0.5
    b = rng.standard_normal(c_out)
    r = _projection((*shape[:3], c_out), rng)

    def f():
        return float(np.sum(L.conv3x3_forward(x, w, b)[0] * r))

    _, cache = L.conv3x3_forward(x, w, b)
    dx, dw, db = L.conv3x3_backward(r, cache)
    return {"input": rel_error(dx, numeric_grad(f, x)),
            "weight": rel_error(dw, numeric_grad(f, w)),
            "bias": rel_error(db, numeric_grad(f, b))}


def check_dense(seed: int = 0, n_in: int = 7, n_out: int = 5) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((2, n_in))
    w = rng.standard_normal((n_in, n_out))
    b = rng.standard_normal(n_out)
    r = _projection((2, n_out), rng)

    def f():
        return float(np.sum(L.dense_forward(x, w, b)[0] * r))

    _, cache = L.dense_forward(x, w, b)
    dx, dw, db = L.dense_backward(r, cache)
    return {"input": rel_error(dx, numeric_grad(f, x)),
            "weight": rel_error(dw, numeric_grad(f, w)),
            "bias": rel_error(db, numeric_grad(f, b))}


def check_pool(seed: int = 0, shape=(2, 6, 8, 3)) -> dict[str, float]:
    # values on a 0.1 grid, shuffled: no two entries closer than 0.1 > 2h,
    # so no perturbation flips a window's argmax
    rng = np.random.default_rng(seed)
    x = rng.permutation(np.arange(np.prod(shape)) * 0.1).reshape(shape)
    r = _projection((shape[0], shape[1] // 2, shape[2] // 2, shape[3]), rng)

    def f():
        return float(np.sum(L.maxpool2x2_forward(x)[0] * r))

    _, cache = L.maxpool2x2_forward(x)
    return {"input": rel_error(L.maxpool2x2_backward(r, cache), numeric_grad(f, x))}


def check_relu(seed: int = 0, shape=(2, 4, 6)) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    x[np.abs(x) < 10 * STEP] = 0.5  # keep clear of the kink
    r = _projection(shape, rng)

    def f():
        return float(np.sum(L.relu_forward(x)[0] * r))

    _, mask = L.relu_forward(x)
    return {"input": rel_error(L.relu_backward(r, mask), numeric_grad(f, x))}


def check_dropout(seed: int = 0, shape=(2, 4, 6), rate: float = 0.5) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    r = _projection(shape, rng)
    _, scale = L.dropout_forward(x, rate, np.random.default_rng(seed + 1), True)

    def f():  # same mask every evaluation
        return float(np.sum(x * scale * r))

    out = {"train": rel_error(L.dropout_backward(r, scale), numeric_grad(f, x))}
    _, off = L.dropout_forward(x, rate, rng, False)

    def f_off():
        return float(np.sum(L.dropout_forward(x, rate, rng, False)[0] * r))

    out["eval"] = rel_error(L.dropout_backward(r, off), numeric_grad(f_off, x))
    return out


def activation_pattern(state) -> np.ndarray:
    """Every ReLU on/off bit and max-pool routing bit of the cached forward pass."""
    cache = state._cache
    bits = []
    for entry in cache["blocks"]:
        bits += [entry["relu1"].ravel(), entry["relu2"].ravel()]
        bits += [m.ravel() for m in entry["pool"][0]]
    bits.append(cache["relu_d"].ravel())
    return np.concatenate(bits)


def _pattern_stable(f, pattern, x: np.ndarray, h: float) -> bool:
    """True when no +/-h probe of any entry of ``x`` flips the activation pattern."""
    f()
    base = pattern()
    flat = x.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        for delta in (h, -h):
            flat[i] = keep + delta
            f()
            if not np.array_equal(pattern(), base):
                flat[i] = keep
                return False
        flat[i] = keep
    return True


def _model_instance(seed, model_def, batch):
    rng = np.random.default_rng(seed)
    state = init_state(model_def, seed, dtype=np.float64)
    for name in state.params:
        if name.endswith(".b"):
            # small positive biases keep most units away from the ReLU kink
            state.params[name] = rng.uniform(0.05, 0.3, state.params[name].shape)
    _, h, w = model_def.input_shape
    x = rng.uniform(0.0, 1.0, (batch, h, w))
    y = np.arange(batch) % model_def.n_outputs if model_def.head == "multiclass" else np.arange(batch) % 2
    return state, x, y


def check_model(seed: int = 0, model_def: ModelDef = REDUCED_DEF, batch: int = 2,
                max_draws: int = 200) -> dict[str, float]:
    """Whole-network check: every parameter tensor plus the input, 2-sample batch.

    Central differences are only meaningful where the function is smooth over
    [-h, h], so instances are redrawn until no probe crosses a ReLU kink or
    flips a pool argmax.  The seed actually used is returned under "draw".
    """
    for draw in range(max_draws):
        state, x, y = _model_instance(seed * max_draws + draw, model_def, batch)

        def f():
            return loss(forward(state, x, training=False), y)[0]

        def pattern():
            return activation_pattern(state)

        tensors = [*state.params.values(), x]
        if all(_pattern_stable(f, pattern, t, STEP) for t in tensors):
            break
    else:
        raise RuntimeError(f"no kink-free instance in {max_draws} draws")
    _, dlogits = loss(forward(state, x, training=False), y)
    grads, dinput = backward_from_logits(state, dlogits, input_grad=True)
    errors = {name: rel_error(grads[name], numeric_grad(f, state.params[name]))
              for name in state.params}
    errors["input"] = rel_error(dinput, numeric_grad(f, x))
    errors["draw"] = draw
    return errors


def check_all(seed: int = 0) -> dict[str, dict[str, float]]:
    return {"conv": check_conv(seed), "dense": check_dense(seed), "pool": check_pool(seed),
            "relu": check_relu(seed), "dropout": check_dropout(seed), "model": check_model(seed)}
