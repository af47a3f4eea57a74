"""Mini-batch RMSprop training and evaluation."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from .metrics import Metrics, classification_metrics
from .model import ModelDef, ModelState, backward_from_logits, forward, init_state, loss, rmsprop_step

log = logging.getLogger(__name__)

EVAL_BATCH = 64


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    rms_decay: float = 0.9
    epsilon: float = 1e-7
    batch_size: int = 32
    epochs: int = 4
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.rms_decay < 1.0:
            raise ValueError("rms_decay must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**{k: d[k] for k in ("learning_rate", "rms_decay", "epsilon",
                                        "batch_size", "epochs", "seed") if k in d})


def _check_labels(model_def: ModelDef, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("labels must be a 1-D array of class ids")
    if model_def.head == "binary":
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("binary labels must be 0 or 1")
        if np.unique(y).size < 2:
            raise ValueError("binary training set holds a single class")
    elif not np.all((y >= 0) & (y < model_def.n_classes)):
        raise ValueError(f"labels must lie in [0, {model_def.n_classes})")
    return y.astype(np.int64)


def train(model_def: ModelDef, X: np.ndarray, y, cfg: TrainConfig,
          state: ModelState | None = None, dtype=np.float32):
    """Train from a seeded He-uniform init (or continue ``state``).

    Returns ``(state, losses)`` where ``losses[e]`` is the mean mini-batch
    loss of epoch ``e``.
    """
    X = np.asarray(X)
    if X.shape[0] == 0:
        raise ValueError("cannot train on an empty set")
    y = _check_labels(model_def, y)
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"{X.shape[0]} inputs but {y.shape[0]} labels")
    if state is None:
        state = init_state(model_def, cfg.seed, dtype=dtype)
    order_rng = np.random.default_rng([cfg.seed, 2])
    losses = []
    n = X.shape[0]
    for epoch in range(cfg.epochs):
        order = order_rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            pred = forward(state, X[idx], training=True)
            value, dlogits = loss(pred, y[idx])
            grads, _ = backward_from_logits(state, dlogits)
            rmsprop_step(state, grads, cfg.learning_rate, cfg.rms_decay, cfg.epsilon)
            total += value * idx.size
        losses.append(total / n)
        log.info("epoch %d/%d loss %.4f", epoch + 1, cfg.epochs, losses[-1])
    state.training = False
    state._cache = None
    return state, losses


def predict_proba(state: ModelState, X: np.ndarray, batch_size: int = EVAL_BATCH) -> np.ndarray:
    X = np.asarray(X)
    if X.shape[0] == 0:
        raise ValueError("cannot predict on an empty set")
    out = [forward(state, X[i:i + batch_size], training=False)
           for i in range(0, X.shape[0], batch_size)]
    state._cache = None
    return np.concatenate(out)


def decide(probs: np.ndarray) -> np.ndarray:
    """0.5 threshold for a binary head, argmax otherwise."""
    if probs.ndim == 1:
        return (probs >= 0.5).astype(np.int64)
    return np.argmax(probs, axis=1).astype(np.int64)


@dataclass
class Evaluation:
    metrics: Metrics
    predictions: np.ndarray
    labels: np.ndarray
    probabilities: np.ndarray


def evaluate(state: ModelState, X: np.ndarray, y) -> Evaluation:
    y = np.asarray(y, dtype=np.int64)
    if y.size == 0:
        raise ValueError("cannot evaluate an empty set")
    probs = predict_proba(state, X)
    pred = decide(probs)
    n_classes = 2 if state.model_def.head == "binary" else state.model_def.n_classes
    return Evaluation(classification_metrics(y, pred, n_classes), pred, y, probs)
