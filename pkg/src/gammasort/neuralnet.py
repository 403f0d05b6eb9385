"""Dense network math for the two classifier architectures.

Implements exactly two models: a linear map (W x + b) and a single tanh
hidden layer (W2 tanh(W1 x + b1) + b2).  Networks emit logits; softmax is
fused into the cross-entropy loss for numerical stability, and prediction is
argmax of the logits (equivalent to argmax of the softmax).  Gradients are
analytic; the optimizer is standard Adam with bias correction.  All math is
float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import seeding

ARCH_LINEAR = "linear"
ARCH_HIDDEN_TANH = "hidden_tanh"

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class AdamHyper:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass
class LinearParams:
    """Weights (n_classes x n_channels) and bias (n_classes,) of the linear model."""

    weights: np.ndarray
    bias: np.ndarray

    arch = ARCH_LINEAR

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ValueError(
                f"inconsistent shapes: weights {self.weights.shape}, bias {self.bias.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("parameters must be finite")

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_channels(self) -> int:
        return self.weights.shape[1]


@dataclass
class HiddenTanhParams:
    """Parameters of the single-hidden-layer tanh network."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    arch = ARCH_HIDDEN_TANH

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        width = self.w1.shape[0] if self.w1.ndim == 2 else -1
        ok = (
            self.w1.ndim == 2
            and self.b1.shape == (width,)
            and self.w2.ndim == 2
            and self.w2.shape[1] == width
            and self.b2.shape == (self.w2.shape[0],)
        )
        if not ok:
            raise ValueError(
                "inconsistent shapes: "
                f"w1 {self.w1.shape}, b1 {self.b1.shape}, w2 {self.w2.shape}, b2 {self.b2.shape}"
            )
        arrays = (self.w1, self.b1, self.w2, self.b2)
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise ValueError("parameters must be finite")

    @property
    def width(self) -> int:
        return self.w1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w2.shape[0]

    @property
    def n_channels(self) -> int:
        return self.w1.shape[1]


NetworkParams = Union[LinearParams, HiddenTanhParams]

# Gradients and Adam moments reuse the parameter containers: same shapes,
# same field order.
Gradients = NetworkParams


def _arrays(params: NetworkParams) -> list[np.ndarray]:
    if isinstance(params, LinearParams):
        return [params.weights, params.bias]
    return [params.w1, params.b1, params.w2, params.b2]


def _rebuild(template: NetworkParams, arrays: list[np.ndarray]) -> NetworkParams:
    if isinstance(template, LinearParams):
        return LinearParams(*arrays)
    return HiddenTanhParams(*arrays)


def zeros_like_params(params: NetworkParams) -> NetworkParams:
    return _rebuild(params, [np.zeros_like(a) for a in _arrays(params)])


def copy_params(params: NetworkParams) -> NetworkParams:
    return _rebuild(params, [a.copy() for a in _arrays(params)])


def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=(fan_out, fan_in))


def init_params(
    arch: str,
    n_channels: int,
    n_classes: int,
    seed: int,
    width: int = 64,
) -> NetworkParams:
    """Uniform Glorot weights, zero biases, deterministic per seed."""
    if n_channels < 1 or n_classes < 1:
        raise ValueError(f"need positive dimensions, got {n_channels} x {n_classes}")
    rng = seeding.rng(seed)
    if arch == ARCH_LINEAR:
        return LinearParams(_glorot(rng, n_classes, n_channels), np.zeros(n_classes))
    if arch == ARCH_HIDDEN_TANH:
        if width < 1:
            raise ValueError(f"hidden width must be positive, got {width}")
        w1 = _glorot(rng, width, n_channels)
        w2 = _glorot(rng, n_classes, width)
        return HiddenTanhParams(w1, np.zeros(width), w2, np.zeros(n_classes))
    raise ValueError(f"unknown architecture {arch!r}")


def _check_input(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.n_channels:
        raise ValueError(f"input has {x.shape[-1]} channels, model expects {params.n_channels}")
    return x


def forward_linear(params: LinearParams, x: np.ndarray) -> np.ndarray:
    """Logits W x + b; accepts one input vector or a (n, channels) batch."""
    if not isinstance(params, LinearParams):
        raise ValueError("forward_linear requires linear-architecture parameters")
    x = _check_input(params, x)
    return x @ params.weights.T + params.bias


def forward_hidden(params: HiddenTanhParams, x: np.ndarray) -> np.ndarray:
    """Logits W2 tanh(W1 x + b1) + b2; accepts a vector or a batch."""
    if not isinstance(params, HiddenTanhParams):
        raise ValueError("forward_hidden requires hidden-architecture parameters")
    x = _check_input(params, x)
    hidden = np.tanh(x @ params.w1.T + params.b1)
    return hidden @ params.w2.T + params.b2


def forward(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    if isinstance(params, LinearParams):
        return forward_linear(params, x)
    return forward_hidden(params, x)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-shifted softmax over the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits must be finite")
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    expz = np.exp(shifted)
    return expz / np.sum(expz, axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, one_hot: np.ndarray) -> float:
    """-log probability of the true class; mean over a batch.

    The picked probability is floored at 1e-12 so a confidently wrong
    prediction yields a large finite loss instead of infinity.
    """
    probs = np.asarray(probs, dtype=np.float64)
    one_hot = np.asarray(one_hot, dtype=np.float64)
    if probs.shape != one_hot.shape:
        raise ValueError(f"shape mismatch: probs {probs.shape} vs labels {one_hot.shape}")
    picked = np.sum(probs * one_hot, axis=-1)
    return float(np.mean(-np.log(np.maximum(picked, PROB_FLOOR))))


def backward(params: NetworkParams, x: np.ndarray, one_hot: np.ndarray):
    """Loss and analytic gradients of mean softmax cross-entropy.

    Accepts a single (x, label) pair or batched rows; gradients are of the
    mean loss, so batch and single-item conventions agree at n = 1.
    """
    x = _check_input(params, x)
    y = np.asarray(one_hot, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
        y = y[None, :]
    if y.shape != (x.shape[0], params.n_classes):
        raise ValueError(f"labels shape {y.shape} does not match batch x classes")
    n = x.shape[0]

    if isinstance(params, LinearParams):
        logits = x @ params.weights.T + params.bias
        probs = softmax(logits)
        loss = cross_entropy(probs, y)
        dlogits = (probs - y) / n
        grads = LinearParams(dlogits.T @ x, dlogits.sum(axis=0))
        return loss, grads

    z1 = x @ params.w1.T + params.b1
    y1 = np.tanh(z1)
    logits = y1 @ params.w2.T + params.b2
    probs = softmax(logits)
    loss = cross_entropy(probs, y)
    dlogits = (probs - y) / n
    dw2 = dlogits.T @ y1
    db2 = dlogits.sum(axis=0)
    dz1 = (dlogits @ params.w2) * (1.0 - y1 * y1)
    dw1 = dz1.T @ x
    db1 = dz1.sum(axis=0)
    return loss, HiddenTanhParams(dw1, db1, dw2, db2)


@dataclass
class AdamState:
    """First/second moment estimates and step counter for one parameter set."""

    m: NetworkParams
    v: NetworkParams
    t: int = 0
    hyper: AdamHyper = field(default_factory=AdamHyper)


def init_adam(params: NetworkParams, hyper: AdamHyper | None = None) -> AdamState:
    return AdamState(
        m=zeros_like_params(params),
        v=zeros_like_params(params),
        t=0,
        hyper=hyper or AdamHyper(),
    )


def adam_step(
    params: NetworkParams,
    grads: Gradients,
    state: AdamState,
) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam update; returns new params and advanced state."""
    h = state.hyper
    t = state.t + 1
    new_params, new_m, new_v = [], [], []
    for theta, g, m, v in zip(_arrays(params), _arrays(grads), _arrays(state.m), _arrays(state.v)):
        if theta.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {theta.shape}")
        m2 = h.beta1 * m + (1.0 - h.beta1) * g
        v2 = h.beta2 * v + (1.0 - h.beta2) * (g * g)
        m_hat = m2 / (1.0 - h.beta1**t)
        v_hat = v2 / (1.0 - h.beta2**t)
        new_params.append(theta - h.learning_rate * m_hat / (np.sqrt(v_hat) + h.epsilon))
        new_m.append(m2)
        new_v.append(v2)
    return (
        _rebuild(params, new_params),
        AdamState(_rebuild(params, new_m), _rebuild(params, new_v), t, h),
    )


def save_model(path: str | Path, params: NetworkParams, train_config: dict | None = None) -> None:
    """Write a model JSON; float values round-trip exactly (shortest repr)."""
    doc: dict = {
        "arch": params.arch,
        "n_channels": params.n_channels,
        "n_classes": params.n_classes,
    }
    if isinstance(params, LinearParams):
        doc["weights"] = params.weights.tolist()
        doc["bias"] = params.bias.tolist()
    else:
        doc["width"] = params.width
        doc["w1"] = params.w1.tolist()
        doc["b1"] = params.b1.tolist()
        doc["w2"] = params.w2.tolist()
        doc["b2"] = params.b2.tolist()
    if train_config is not None:
        doc["train_config"] = train_config
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model(path: str | Path) -> tuple[NetworkParams, dict]:
    """Read a model JSON back; returns (params, train_config dict)."""
    doc = json.loads(Path(path).read_text())
    arch = doc["arch"]
    if arch == ARCH_LINEAR:
        params: NetworkParams = LinearParams(np.array(doc["weights"]), np.array(doc["bias"]))
    elif arch == ARCH_HIDDEN_TANH:
        params = HiddenTanhParams(
            np.array(doc["w1"]), np.array(doc["b1"]), np.array(doc["w2"]), np.array(doc["b2"])
        )
    else:
        raise ValueError(f"unknown architecture {arch!r} in {path}")
    return params, doc.get("train_config", {})
