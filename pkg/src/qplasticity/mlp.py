"""Dense feed-forward baselines with exact backprop.

Weights are stored input-major (``fan_in x fan_out``) so a layer computes
``x @ W + b`` on a ``(batch, fan_in)`` array.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .rng import stream

ACTIVATIONS = ("relu", "sin")


@dataclass(frozen=True)
class MLPSpec:
    input_dim: int
    hidden: tuple[int, ...]
    output_dim: int
    activations: tuple[str, ...] = ()
    bias: bool = True

    def __post_init__(self):
        if not self.hidden:
            raise ValueError("an MLP needs at least one hidden layer")
        if min(self.widths) < 1:
            raise ValueError("layer widths must be positive")
        acts = self.activations or ("relu",) * len(self.hidden)
        if len(acts) == 1 and len(self.hidden) > 1:
            acts = acts * len(self.hidden)
        if len(acts) != len(self.hidden) or any(a not in ACTIVATIONS for a in acts):
            raise ValueError(f"need one activation from {ACTIVATIONS} per hidden layer")
        object.__setattr__(self, "activations", tuple(acts))
        object.__setattr__(self, "hidden", tuple(self.hidden))

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden, self.output_dim)

    @property
    def n_params(self) -> int:
        w = self.widths
        return sum(a * b + (b if self.bias else 0) for a, b in zip(w[:-1], w[1:]))


@dataclass
class MLPParams:
    spec: MLPSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray] = field(default_factory=list)

    def flat(self) -> np.ndarray:
        parts = [w.ravel() for w in self.weights]
        if self.spec.bias:
            parts += [b.ravel() for b in self.biases]
        return np.concatenate(parts)

    def with_flat(self, vec: np.ndarray) -> "MLPParams":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.spec.n_params,):
            raise DimensionError(f"expected {self.spec.n_params} parameters, got {vec.shape}")
        w, pos = [], 0
        for m in self.weights:
            w.append(vec[pos : pos + m.size].reshape(m.shape).copy())
            pos += m.size
        b = []
        if self.spec.bias:
            for m in self.biases:
                b.append(vec[pos : pos + m.size].copy())
                pos += m.size
        return MLPParams(self.spec, w, b)

    def copy(self) -> "MLPParams":
        return MLPParams(self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases])


def mlp_init(spec: MLPSpec, seed: int) -> MLPParams:
    """Glorot-uniform weights, zero biases."""
    rng = stream(seed, "init", "mlp")
    w = spec.widths
    weights = []
    for fan_in, fan_out in zip(w[:-1], w[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
    biases = [np.zeros(b) for b in w[1:]] if spec.bias else []
    return MLPParams(spec, weights, biases)


def _act(name, z):
    return np.maximum(z, 0.0) if name == "relu" else np.sin(z)


def _act_grad(name, z):
    # ReLU subgradient at 0 is 0
    return (z > 0.0).astype(float) if name == "relu" else np.cos(z)


def _forward_cache(params: MLPParams, x: np.ndarray):
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != params.spec.input_dim:
        raise DimensionError(f"inputs must have shape (batch, {params.spec.input_dim})")
    acts, pre = [x], []
    h = x
    n_layers = len(params.weights)
    for i, w in enumerate(params.weights):
        z = h @ w
        if params.spec.bias:
            z = z + params.biases[i]
        if i < n_layers - 1:
            pre.append(z)
            h = _act(params.spec.activations[i], z)
            acts.append(h)
        else:
            h = z
    return h, acts, pre


def mlp_forward(params: MLPParams, x) -> np.ndarray:
    """Logits for one input vector or a ``(batch, d)`` array."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    out, _, _ = _forward_cache(params, x[None, :] if single else x)
    return out[0] if single else out


def _deltas(params: MLPParams, acts, pre, dlogits):
    """Backward pass; yields ``(layer, delta)`` from the output layer down."""
    delta = np.asarray(dlogits, dtype=float)
    if delta.ndim == 1:
        delta = delta[:, None]
    out = []
    for i in range(len(params.weights) - 1, -1, -1):
        out.append((i, delta))
        if i > 0:
            delta = (delta @ params.weights[i].T) * _act_grad(params.spec.activations[i - 1], pre[i - 1])
    return out


def mlp_backward(params: MLPParams, x, dlogits) -> MLPParams:
    """Gradient of ``sum_b dlogits[b] . logits[b]``, shaped like the params."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
        dlogits = np.atleast_2d(dlogits)
    _, acts, pre = _forward_cache(params, x)
    gw = [None] * len(params.weights)
    gb = [None] * len(params.weights) if params.spec.bias else []
    for i, delta in _deltas(params, acts, pre, dlogits):
        gw[i] = acts[i].T @ delta
        if params.spec.bias:
            gb[i] = delta.sum(axis=0)
    return MLPParams(params.spec, gw, gb)


def mlp_per_sample_sq_norms(params: MLPParams, x, dlogits) -> np.ndarray:
    """``||grad_b||^2`` of each sample's term, without materializing per-sample grads.

    Uses ``||a delta^T||_F^2 = ||a||^2 ||delta||^2`` for each layer.
    """
    _, acts, pre = _forward_cache(params, x)
    total = np.zeros(acts[0].shape[0])
    for i, delta in _deltas(params, acts, pre, dlogits):
        d2 = np.sum(delta**2, axis=1)
        total += np.sum(acts[i] ** 2, axis=1) * d2
        if params.spec.bias:
            total += d2
    return total


def scale_weights(params: MLPParams, lam: float) -> MLPParams:
    """Copy with every weight and bias multiplied by ``lam``."""
    if not lam > 0:
        raise ValueError("scale factor must be positive")
    return MLPParams(params.spec, [lam * w for w in params.weights], [lam * b for b in params.biases])
