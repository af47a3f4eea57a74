"""CNN definition, parameter state, and the forward/backward passes.

The network is three conv blocks (two 3x3 same-padded convs, ReLU after each,
one 2x2 max pool, dropout), then dense -> ReLU -> dropout -> dense -> head.
Tensors are NHWC internally; callers pass spectrogram batches shaped
(B, H, W) or (B, 1, H, W).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import layers as L

HEADS = ("binary", "multiclass")
PROB_CLAMP = 1e-7


class NonFiniteGradientError(FloatingPointError):
    """A gradient or parameter went NaN/inf; ``layer`` names the culprit."""

    def __init__(self, layer: str, detail: str = ""):
        self.layer = layer
        super().__init__(f"non-finite values in {layer}" + (f": {detail}" if detail else ""))


@dataclass(frozen=True)
class ModelDef:
    input_shape: tuple[int, int, int] = (1, 64, 128)
    conv_filters: tuple[int, ...] = (32, 64, 64, 64, 128, 128)
    block_dropout: tuple[float, ...] = (0.25, 0.5, 0.5)
    dense_units: int = 128
    dense_dropout: float = 0.5
    head: str = "binary"
    n_classes: int = 2

    def __post_init__(self):
        if len(self.conv_filters) != 6:
            raise ValueError("exactly three conv blocks of two convs are required")
        if len(self.block_dropout) != 3:
            raise ValueError("one dropout rate per conv block is required")
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if self.head == "binary" and self.n_classes != 2:
            raise ValueError("binary head implies n_classes == 2")
        c, h, w = self.input_shape
        if c != 1:
            raise ValueError("input must be single-channel")
        if h % 8 or w % 8:
            raise ValueError("spatial dims must be divisible by 8 (three 2x2 pools)")
        for r in (*self.block_dropout, self.dense_dropout):
            if not 0.0 <= r < 1.0:
                raise ValueError(f"dropout rate {r} outside [0, 1)")

    @property
    def n_outputs(self) -> int:
        return 1 if self.head == "binary" else self.n_classes

    @property
    def flat_size(self) -> int:
        _, h, w = self.input_shape
        return (h // 8) * (w // 8) * self.conv_filters[-1]

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        c_in = self.input_shape[0]
        for i, c_out in enumerate(self.conv_filters, start=1):
            shapes[f"conv{i}.w"] = (3, 3, c_in, c_out)
            shapes[f"conv{i}.b"] = (c_out,)
            c_in = c_out
        shapes["dense1.w"] = (self.flat_size, self.dense_units)
        shapes["dense1.b"] = (self.dense_units,)
        shapes["dense2.w"] = (self.dense_units, self.n_outputs)
        shapes["dense2.b"] = (self.n_outputs,)
        return shapes

    def param_count(self) -> int:
        return sum(int(np.prod(s)) for s in self.param_shapes().values())

    def to_dict(self) -> dict:
        return {
            "input_shape": list(self.input_shape),
            "conv_filters": list(self.conv_filters),
            "block_dropout": list(self.block_dropout),
            "dense_units": self.dense_units,
            "dense_dropout": self.dense_dropout,
            "head": self.head,
            "n_classes": self.n_classes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelDef":
        return cls(
            input_shape=tuple(d["input_shape"]),
            conv_filters=tuple(d["conv_filters"]),
            block_dropout=tuple(d["block_dropout"]),
            dense_units=int(d["dense_units"]),
            dense_dropout=float(d["dense_dropout"]),
            head=d["head"],
            n_classes=int(d["n_classes"]),
        )


@dataclass
class ModelState:
    model_def: ModelDef
    params: dict[str, np.ndarray]
    accumulators: dict[str, np.ndarray]
    seed: int
    training: bool = False
    rng: np.random.Generator = field(default=None, repr=False)
    _cache: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng(self.seed)

    @property
    def dtype(self):
        return self.params["conv1.w"].dtype


def init_state(model_def: ModelDef, seed: int, dtype=np.float32) -> ModelState:
    """He-uniform weights, zero biases, zero RMSprop accumulators."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in model_def.param_shapes().items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape, dtype=dtype)
        else:
            fan_in = int(np.prod(shape[:-1]))
            limit = np.sqrt(6.0 / fan_in)
            params[name] = rng.uniform(-limit, limit, size=shape).astype(dtype)
    accumulators = {k: np.zeros_like(v) for k, v in params.items()}
    # dropout draws use a stream independent of the init stream
    return ModelState(model_def, params, accumulators, seed,
                      rng=np.random.default_rng([seed, 1]))


def _as_nhwc(batch: np.ndarray, model_def: ModelDef, dtype) -> np.ndarray:
    x = np.asarray(batch)
    c, h, w = model_def.input_shape
    if x.ndim == 4 and x.shape[1:] == (c, h, w):
        x = x[:, 0]
    if x.ndim != 3 or x.shape[1:] != (h, w):
        raise ValueError(f"expected batch of {c}x{h}x{w} inputs, got shape {np.shape(batch)}")
    return x.astype(dtype, copy=False)[..., None]


def forward(state: ModelState, batch: np.ndarray, training: bool = False) -> np.ndarray:
    """Class probabilities: shape (B,) for the binary head, (B, C) otherwise.

    The activations needed by :func:`backward` are kept on ``state``.
    """
    md = state.model_def
    p = state.params
    x = _as_nhwc(batch, md, state.dtype)
    state.training = training
    cache: dict = {"batch_size": x.shape[0], "blocks": []}
    for blk in range(3):
        entry = {}
        for j in (1, 2):
            k = 2 * blk + j
            x, entry[f"conv{j}"] = L.conv3x3_forward(x, p[f"conv{k}.w"], p[f"conv{k}.b"])
            x, entry[f"relu{j}"] = L.relu_forward(x)
        x, entry["pool"] = L.maxpool2x2_forward(x)
        x, entry["drop"] = L.dropout_forward(x, md.block_dropout[blk], state.rng, training)
        cache["blocks"].append(entry)
    cache["flat_shape"] = x.shape
    x = x.reshape(x.shape[0], -1)
    x, cache["dense1"] = L.dense_forward(x, p["dense1.w"], p["dense1.b"])
    x, cache["relu_d"] = L.relu_forward(x)
    x, cache["drop_d"] = L.dropout_forward(x, md.dense_dropout, state.rng, training)
    logits, cache["dense2"] = L.dense_forward(x, p["dense2.w"], p["dense2.b"])
    if md.head == "binary":
        probs = L.sigmoid(logits[:, 0])
    else:
        probs = L.softmax(logits)
    cache["probs"] = probs
    state._cache = cache
    return probs


def _label_matrix(pred: np.ndarray, labels) -> np.ndarray:
    y = np.asarray(labels)
    if pred.ndim == 1:
        if y.shape != pred.shape:
            raise ValueError(f"label shape {y.shape} does not match predictions {pred.shape}")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("binary labels must be 0 or 1")
        return y.astype(np.float64)
    n, c = pred.shape
    if y.ndim == 1:
        if y.shape[0] != n or not np.all((y >= 0) & (y < c)) or not np.all(y == np.round(y)):
            raise ValueError(f"integer labels must lie in [0, {c})")
        return np.eye(c)[y.astype(int)]
    if y.shape != pred.shape or not np.all((y == 0) | (y == 1)) or not np.all(y.sum(axis=1) == 1):
        raise ValueError("multiclass labels must be integer ids or one-hot rows")
    return y.astype(np.float64)


def loss(pred: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the pre-head logits.

    Binary predictions use binary cross-entropy, multiclass ones categorical
    cross-entropy; either way the fused gradient is (pred - label) / batch.
    """
    y = _label_matrix(pred, labels)
    pc = np.clip(pred.astype(np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    n = pred.shape[0]
    if pred.ndim == 1:
        value = -np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    else:
        value = -np.sum(y * np.log(pc)) / n
    grad = (pred - y.astype(pred.dtype)) / n
    if pred.ndim == 1:
        grad = grad[:, None]
    return float(value), grad.astype(pred.dtype)


def backward_from_logits(state: ModelState, dlogits: np.ndarray, input_grad: bool = False):
    """Backpropagate an arbitrary logit gradient through the cached forward pass.

    Returns ``(grads, dinput)``; ``dinput`` is None unless ``input_grad``.
    """
    cache = state._cache
    if cache is None:
        raise RuntimeError("backward called before forward")
    p = state.params
    grads: dict[str, np.ndarray] = {}
    dx, grads["dense2.w"], grads["dense2.b"] = L.dense_backward(dlogits, cache["dense2"])
    dx = L.dropout_backward(dx, cache["drop_d"])
    dx = L.relu_backward(dx, cache["relu_d"])
    dx, grads["dense1.w"], grads["dense1.b"] = L.dense_backward(dx, cache["dense1"])
    dx = dx.reshape(cache["flat_shape"])
    for blk in (2, 1, 0):
        entry = cache["blocks"][blk]
        dx = L.dropout_backward(dx, entry["drop"])
        dx = L.maxpool2x2_backward(dx, entry["pool"])
        for j in (2, 1):
            k = 2 * blk + j
            dx = L.relu_backward(dx, entry[f"relu{j}"])
            need = input_grad or k > 1
            dx, grads[f"conv{k}.w"], grads[f"conv{k}.b"] = L.conv3x3_backward(
                dx, entry[f"conv{j}"], need_input_grad=need)
    dinput = dx[..., 0] if input_grad else None
    return {k: grads[k] for k in p}, dinput


def backward(state: ModelState, batch: np.ndarray, labels) -> dict[str, np.ndarray]:
    """Parameter gradients of the mean loss for the batch last passed to forward."""
    cache = state._cache
    if cache is None:
        raise RuntimeError("backward called before forward")
    if np.shape(batch)[0] != cache["batch_size"]:
        raise ValueError("batch does not match the cached forward pass")
    _, dlogits = loss(cache["probs"], labels)
    grads, _ = backward_from_logits(state, dlogits)
    return grads


def rmsprop_step(state: ModelState, grads: dict[str, np.ndarray], learning_rate: float,
                 rms_decay: float, epsilon: float) -> ModelState:
    """In-place RMSprop update; returns ``state`` for chaining."""
    for name, g in grads.items():
        if name not in state.params:
            raise KeyError(f"unknown parameter {name}")
        if g.shape != state.params[name].shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape for {name}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(name.split(".")[0], f"gradient of {name}")
    for name, g in grads.items():
        acc = state.accumulators[name]
        acc *= rms_decay
        acc += (1.0 - rms_decay) * g * g
        state.params[name] -= (learning_rate * g / (np.sqrt(acc) + epsilon)).astype(acc.dtype)
        if not np.all(np.isfinite(state.params[name])):
            raise NonFiniteGradientError(name.split(".")[0], f"parameter {name} after update")
    return state
