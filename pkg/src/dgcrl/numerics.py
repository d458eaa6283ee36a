"""Dense feedforward networks with hand-written backprop and Adam.

Weights are stored as (out, in) matrices; batches are row-major (batch, features).
Hidden layers use ReLU, the output layer is identity or tanh.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rng import Stream


class ContractError(ValueError):
    """A precondition on shapes or arguments was violated."""


@dataclass
class Mlp:
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output_activation: str = "identity"

    def __post_init__(self):
        if self.output_activation not in ("identity", "tanh"):
            raise ContractError(f"unknown output activation {self.output_activation!r}")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_sizes[l + 1], self.layer_sizes[l])
            if w.shape != expected or b.shape != (expected[0],):
                raise ContractError(f"layer {l}: weight {w.shape} / bias {b.shape}, expected {expected}")

    @classmethod
    def init(cls, layer_sizes, stream: Stream, output_activation="identity") -> "Mlp":
        """Uniform(+-1/sqrt(fan_in)) initialisation for weights and biases."""
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ContractError(f"invalid layer sizes {sizes}")
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(stream.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(stream.uniform(-bound, bound, size=fan_out))
        return cls(sizes, weights, biases, output_activation)

    @classmethod
    def zeros(cls, layer_sizes, output_activation="identity") -> "Mlp":
        sizes = [int(s) for s in layer_sizes]
        return cls(
            sizes,
            [np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])],
            [np.zeros(o) for o in sizes[1:]],
            output_activation,
        )

    def params(self) -> list[np.ndarray]:
        """Flat parameter list: w0, b0, w1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "Mlp":
        return Mlp(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.output_activation,
        )

    def same_architecture(self, other: "Mlp") -> bool:
        return (
            self.layer_sizes == other.layer_sizes
            and self.output_activation == other.output_activation
        )


def _as_batch(net: Mlp, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.layer_sizes[0]:
        raise ContractError(
            f"input length mismatch: expected {net.layer_sizes[0]}, got {x.shape[-1]}"
        )
    return x, single


def forward_cache(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward pass keeping the input to every layer (needed by `backward`)."""
    acts = [x]
    h = x
    last = len(net.weights) - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T + b
        if l < last:
            h = np.maximum(z, 0.0)
        elif net.output_activation == "tanh":
            h = np.tanh(z)
        else:
            h = z
        acts.append(h)
    return h, acts


def mlp_forward(net: Mlp, x) -> np.ndarray:
    x, single = _as_batch(net, x)
    y, _ = forward_cache(net, x)
    return y[0] if single else y


def backward(net: Mlp, acts: list[np.ndarray], grad_out: np.ndarray):
    """Backpropagate dL/d(output) through a cached forward pass.

    Returns (parameter grads in `Mlp.params` order, dL/d(input)).
    """
    n_layers = len(net.weights)
    g = grad_out
    if net.output_activation == "tanh":
        g = g * (1.0 - acts[-1] ** 2)
    grads: list[np.ndarray] = [None] * (2 * n_layers)  # type: ignore[list-item]
    for l in range(n_layers - 1, -1, -1):
        grads[2 * l] = g.T @ acts[l]
        grads[2 * l + 1] = g.sum(axis=0)
        g = g @ net.weights[l]
        if l > 0:
            g = g * (acts[l] > 0.0)
    return grads, g


def mlp_gradients(net: Mlp, x, loss: Callable[[np.ndarray], tuple[float, np.ndarray]]):
    """Gradient of a scalar loss of the network outputs w.r.t. every parameter.

    `loss` maps the (batch, out) output array to (value, dvalue/doutput).
    Returns (value, grads) with grads in `Mlp.params` order.
    """
    x, _ = _as_batch(net, x)
    y, acts = forward_cache(net, x)
    value, grad_y = loss(y)
    grad_y = np.asarray(grad_y, dtype=np.float64)
    if grad_y.shape != y.shape:
        raise ContractError(f"loss gradient shape {grad_y.shape} != output shape {y.shape}")
    grads, _ = backward(net, acts, grad_y)
    return float(value), grads


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0

    @classmethod
    def for_params(cls, params, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        return cls(
            [np.zeros_like(p) for p in params],
            [np.zeros_like(p) for p in params],
            lr, beta1, beta2, eps,
        )

    def reset(self):
        for a in self.m + self.v:
            a.fill(0.0)
        self.t = 0


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState):
    """In-place bias-corrected Adam update (gradient descent direction)."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ContractError("parameter, gradient and optimizer state counts differ")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise ContractError(f"param {i}: shape {p.shape} vs grad {g.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in layer {i // 2}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    step = state.lr / c1
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= step * m / (np.sqrt(v / c2) + state.eps)
    return params, state


def soft_update(target: Mlp, online: Mlp, tau: float) -> Mlp:
    """Polyak averaging: target <- (1 - tau) * target + tau * online, in place."""
    if not 0.0 <= tau <= 1.0:
        raise ContractError(f"tau must be in [0, 1], got {tau}")
    if not target.same_architecture(online):
        raise ContractError(
            f"architecture mismatch: {target.layer_sizes} vs {online.layer_sizes}"
        )
    for pt, po in zip(target.params(), online.params()):
        pt *= 1.0 - tau
        pt += tau * po
    return target
