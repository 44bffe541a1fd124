"""Minimal feed-forward binary classifier with analytic gradients.

All strategies in the package operate on the layered parameter
representation defined here: a list of (weight, bias) pairs with ReLU
hidden activations and a sigmoid output. Everything is float64 numpy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericError

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class ModelArch:
    """Layer sizes of the classifier: input, one or more hidden, output 1."""

    layer_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 3:
            raise InvalidInputError("architecture needs input, >=1 hidden and output layer")
        if any(s <= 0 for s in sizes):
            raise InvalidInputError(f"layer sizes must be positive, got {sizes}")
        if sizes[-1] != 1:
            raise InvalidInputError("output layer size must be 1 for binary classification")

    @property
    def num_layers(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    def layer_param_counts(self) -> list[int]:
        """Scalar parameter count per layer (weights plus biases)."""
        sizes = self.layer_sizes
        return [sizes[i] * sizes[i + 1] + sizes[i + 1] for i in range(self.num_layers)]

    @property
    def param_count(self) -> int:
        return sum(self.layer_param_counts())


@dataclass
class LayeredParams:
    """Ordered per-layer (weight matrix [out x in], bias vector [out]) pairs."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def arch(self) -> ModelArch:
        sizes = [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]
        return ModelArch(tuple(sizes))

    def copy(self) -> "LayeredParams":
        return LayeredParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flatten(self) -> np.ndarray:
        chunks = []
        for w, b in zip(self.weights, self.biases):
            chunks.append(w.ravel())
            chunks.append(b.ravel())
        return np.concatenate(chunks)

    def same_shape(self, other: "LayeredParams") -> bool:
        return (
            len(self.weights) == len(other.weights)
            and all(a.shape == b.shape for a, b in zip(self.weights, other.weights))
            and all(a.shape == b.shape for a, b in zip(self.biases, other.biases))
        )


def init_params(arch: ModelArch, rng: np.random.Generator) -> LayeredParams:
    """He-style initialization; biases start at zero."""
    weights, biases = [], []
    sizes = arch.layer_sizes
    for i in range(arch.num_layers):
        fan_in, fan_out = sizes[i], sizes[i + 1]
        scale = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, scale, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return LayeredParams(weights, biases)


def zeros_like(params: LayeredParams) -> LayeredParams:
    return LayeredParams(
        [np.zeros_like(w) for w in params.weights],
        [np.zeros_like(b) for b in params.biases],
    )


def param_axpy(a: float, x: LayeredParams, y: LayeredParams) -> LayeredParams:
    """a*x + y, element-wise over all layers."""
    if not x.same_shape(y):
        raise InvalidInputError("parameter shapes differ in axpy")
    return LayeredParams(
        [a * wx + wy for wx, wy in zip(x.weights, y.weights)],
        [a * bx + by for bx, by in zip(x.biases, y.biases)],
    )


def param_scale(a: float, x: LayeredParams) -> LayeredParams:
    return LayeredParams([a * w for w in x.weights], [a * b for b in x.biases])


def param_mean(items: list[LayeredParams]) -> LayeredParams:
    if not items:
        raise InvalidInputError("param_mean of empty list")
    first = items[0]
    for p in items[1:]:
        if not p.same_shape(first):
            raise InvalidInputError("parameter shapes differ in param_mean")
    n = len(items)
    weights = [sum(p.weights[i] for p in items) / n for i in range(first.num_layers)]
    biases = [sum(p.biases[i] for p in items) / n for i in range(first.num_layers)]
    return LayeredParams(weights, biases)


def _forward_cached(params: LayeredParams, batch: np.ndarray):
    """Returns (probabilities, per-layer activations incl. input)."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2:
        raise InvalidInputError(f"batch must be 2-D, got shape {batch.shape}")
    if batch.shape[1] != params.weights[0].shape[1]:
        raise InvalidInputError(
            f"batch has {batch.shape[1]} features, model expects {params.weights[0].shape[1]}"
        )
    acts = [batch]
    a = batch
    last = params.num_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        a = 1.0 / (1.0 + np.exp(-z)) if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return acts[-1][:, 0], acts


def forward(params: LayeredParams, batch: np.ndarray) -> np.ndarray:
    """Probability of the anomalous class, one entry per batch row."""
    probs, _ = _forward_cached(params, batch)
    return probs


def _backprop(params: LayeredParams, acts: list[np.ndarray], delta_out: np.ndarray) -> LayeredParams:
    """Backpropagate an output-layer delta (dLoss/dz_out) through the net."""
    gw = [None] * params.num_layers
    gb = [None] * params.num_layers
    delta = delta_out[:, None]
    for i in range(params.num_layers - 1, -1, -1):
        gw[i] = delta.T @ acts[i]
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i]) * (acts[i] > 0)
    return LayeredParams(gw, gb)


def bce_loss_and_grad(
    params: LayeredParams, batch: np.ndarray, labels: np.ndarray
) -> tuple[float, LayeredParams]:
    """Mean binary cross-entropy over the batch and its analytic gradient."""
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if labels.size == 0:
        raise InvalidInputError("empty batch in bce_loss_and_grad")
    probs, acts = _forward_cached(params, batch)
    if probs.shape[0] != labels.shape[0]:
        raise InvalidInputError("batch and labels disagree in length")
    p = np.clip(probs, PROB_FLOOR, 1.0 - PROB_FLOOR)
    loss = float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))
    # With the sigmoid output, dLoss/dz = (p - y)/n.
    delta = (probs - labels) / labels.size
    return loss, _backprop(params, acts, delta)


def kl_loss_and_grad(
    student: LayeredParams, batch: np.ndarray, teacher_probs: np.ndarray
) -> tuple[float, LayeredParams]:
    """Mean binary KL divergence from teacher soft labels to student output."""
    t = np.asarray(teacher_probs, dtype=np.float64).ravel()
    if t.size == 0:
        raise InvalidInputError("empty batch in kl_loss_and_grad")
    if np.any(t <= 0.0) or np.any(t >= 1.0):
        t = np.clip(t, PROB_FLOOR, 1.0 - PROB_FLOOR)
        if np.any(t <= 0.0) or np.any(t >= 1.0):
            raise InvalidInputError("teacher probabilities outside (0,1)")
    probs, acts = _forward_cached(student, batch)
    if probs.shape[0] != t.shape[0]:
        raise InvalidInputError("batch and teacher probabilities disagree in length")
    p = np.clip(probs, PROB_FLOOR, 1.0 - PROB_FLOOR)
    loss = float(np.mean(t * np.log(t / p) + (1.0 - t) * np.log((1.0 - t) / (1.0 - p))))
    # Same sigmoid-output shortcut as BCE, with teacher probs as targets.
    delta = (probs - t) / t.size
    return loss, _backprop(student, acts, delta)


def proximal_term_grad(params: LayeredParams, anchor: LayeredParams, mu: float) -> LayeredParams:
    """Gradient contribution mu*(params - anchor) of the proximal penalty."""
    if not params.same_shape(anchor):
        raise InvalidInputError("params and anchor shapes differ")
    if mu < 0:
        raise InvalidInputError("mu must be non-negative")
    return LayeredParams(
        [mu * (w - aw) for w, aw in zip(params.weights, anchor.weights)],
        [mu * (b - ab) for b, ab in zip(params.biases, anchor.biases)],
    )


class Optimizer:
    """SGD or Adam over LayeredParams. Holds moment buffers for Adam."""

    def __init__(
        self,
        kind: str = "adam",
        learning_rate: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if kind not in ("sgd", "adam"):
            raise InvalidInputError(f"unknown optimizer kind {kind!r}")
        if learning_rate <= 0:
            raise InvalidInputError("learning rate must be positive")
        self.kind = kind
        self.lr = float(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m: LayeredParams | None = None
        self._v: LayeredParams | None = None
        self._t = 0

    def clone(self) -> "Optimizer":
        """A fresh optimizer with the same hyperparameters and empty state."""
        return Optimizer(self.kind, self.lr, self.beta1, self.beta2, self.eps)

    def step(self, params: LayeredParams, grad: LayeredParams) -> LayeredParams:
        if not params.same_shape(grad):
            raise InvalidInputError("gradient shapes differ from parameters")
        for g in grad.weights + grad.biases:
            if not np.all(np.isfinite(g)):
                raise NumericError("non-finite gradient in optimizer step")
        if self.kind == "sgd":
            return param_axpy(-self.lr, grad, params)

        if self._m is None:
            self._m = zeros_like(params)
            self._v = zeros_like(params)
        self._t += 1
        b1, b2 = self.beta1, self.beta2
        new_w, new_b = [], []
        for attr, out in (("weights", new_w), ("biases", new_b)):
            for i, g in enumerate(getattr(grad, attr)):
                m = getattr(self._m, attr)[i]
                v = getattr(self._v, attr)[i]
                m[:] = b1 * m + (1 - b1) * g
                v[:] = b2 * v + (1 - b2) * g * g
                m_hat = m / (1 - b1**self._t)
                v_hat = v / (1 - b2**self._t)
                out.append(getattr(params, attr)[i] - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))
        return LayeredParams(new_w, new_b)
