"""Models, Adam, and the per-task train/evaluate loop.

Both model kinds expose the same small surface used by the loop and the
metrics: ``prepare`` (inputs -> model features, done once per dataset),
``logits``, ``loss_and_grad``, ``per_sample``, and flat ``params``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import CircuitSpec, check_params, run_circuit_batch
from .gradients import CotangentSpec, adjoint_batch
from .mlp import MLPParams, _deltas, _forward_cache, mlp_per_sample_sq_norms
from .readout import LOSSES, ClassicalLogits, LogProbTop10, ZQubitSigmoid, predict
from .rng import stream
from .statevector import amplitude_encode_batch, encode_complex_batch, probabilities_batch


@dataclass
class PerSample:
    """Per-sample quantities on a batch: losses, logits, and score norms."""

    losses: np.ndarray
    logits: np.ndarray
    sq_grad_norms: np.ndarray  # ||d loss_b / d theta||^2


class QNNModel:
    """Circuit + readout. ``encoding`` is ``"amplitude"`` (real features) or ``"complex"``."""

    kind = "qnn"

    def __init__(self, spec: CircuitSpec, params, readout, encoding: str = "amplitude"):
        if encoding not in ("amplitude", "complex"):
            raise ValueError("encoding must be 'amplitude' or 'complex'")
        readout.check(spec.n_qubits)
        self.spec = spec
        self.params = check_params(spec, params).copy()
        self.readout = readout
        self.encoding = encoding

    @property
    def loss(self) -> str:
        return self.readout.loss

    @property
    def n_params(self) -> int:
        return self.spec.n_params

    def prepare(self, inputs) -> np.ndarray:
        if self.encoding == "complex":
            return encode_complex_batch(inputs, self.spec.n_qubits)
        return amplitude_encode_batch(inputs, self.spec.n_qubits)

    def probs(self, psi: np.ndarray) -> np.ndarray:
        return probabilities_batch(run_circuit_batch(self.spec, self.params, psi))

    def logits(self, psi: np.ndarray) -> np.ndarray:
        return self.readout.logits(self.probs(psi), self.spec.n_qubits)

    def _adjoint(self, psi, labels, loss=None):
        cot = CotangentSpec(self.readout, loss or self.loss, labels)
        return adjoint_batch(self.spec, self.params, psi, cot)

    def loss_and_grad(self, psi, labels):
        res = self._adjoint(psi, labels)
        return float(np.mean(res.losses)), res.grads.mean(axis=0), res.logits

    def per_sample(self, psi, labels, loss=None) -> PerSample:
        res = self._adjoint(psi, labels, loss)
        return PerSample(res.losses, res.logits, np.sum(res.grads**2, axis=1))

    def per_sample_grads(self, psi, labels, loss=None) -> np.ndarray:
        return self._adjoint(psi, labels, loss).grads

    def weight_norm(self) -> float:
        return float(np.linalg.norm(self.params))

    def state_dict(self) -> dict:
        return {"params": self.params.copy()}

    def load_state_dict(self, state: dict) -> None:
        self.params = check_params(self.spec, state["params"]).copy()


class MLPModel:
    """Dense net; a single output unit means a sigmoid/BCE head, otherwise softmax/CCE."""

    kind = "mlp"
    readout = ClassicalLogits()

    def __init__(self, params: MLPParams):
        self.mlp = params.copy()

    @property
    def loss(self) -> str:
        return "bce" if self.mlp.spec.output_dim == 1 else "cce"

    @property
    def n_params(self) -> int:
        return self.mlp.spec.n_params

    @property
    def params(self) -> np.ndarray:
        return self.mlp.flat()

    @params.setter
    def params(self, vec) -> None:
        self.mlp = self.mlp.with_flat(vec)

    def prepare(self, inputs) -> np.ndarray:
        x = np.asarray(inputs)
        if np.iscomplexobj(x):
            raise TypeError("MLP inputs must be real; convert complex states to features first")
        return np.ascontiguousarray(x, dtype=float)

    def _squeeze(self, out):
        return out[:, 0] if self.mlp.spec.output_dim == 1 else out

    def logits(self, x) -> np.ndarray:
        return self._squeeze(_forward_cache(self.mlp, x)[0])

    def _backprop(self, x, labels, loss=None):
        out, acts, pre = _forward_cache(self.mlp, x)
        logits = self._squeeze(out)
        losses, dlogits = LOSSES[loss or self.loss](logits, labels)
        return logits, losses, dlogits, acts, pre

    def loss_and_grad(self, x, labels):
        logits, losses, dlogits, acts, pre = self._backprop(x, labels)
        n = len(losses)
        gw = [None] * len(self.mlp.weights)
        gb = [None] * len(self.mlp.weights)
        for i, delta in _deltas(self.mlp, acts, pre, dlogits / n):
            gw[i] = acts[i].T @ delta
            gb[i] = delta.sum(axis=0)
        parts = [g.ravel() for g in gw]
        if self.mlp.spec.bias:
            parts += [g.ravel() for g in gb]
        return float(np.mean(losses)), np.concatenate(parts), logits

    def per_sample(self, x, labels, loss=None) -> PerSample:
        logits, losses, dlogits, _, _ = self._backprop(x, labels, loss)
        return PerSample(losses, logits, mlp_per_sample_sq_norms(self.mlp, x, dlogits))

    def weight_norm(self) -> float:
        """Mean Frobenius norm of the weight matrices; biases excluded."""
        return float(np.mean([np.linalg.norm(w) for w in self.mlp.weights]))

    def state_dict(self) -> dict:
        return {"params": self.params}

    def load_state_dict(self, state: dict) -> None:
        self.params = state["params"]


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **hyper) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0, **hyper)


def adam_step(params: np.ndarray, grad: np.ndarray, state: AdamState, lr: float):
    """One bias-corrected Adam update; returns new ``(params, state)``."""
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new = params - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new, AdamState(m, v, t, state.beta1, state.beta2, state.eps)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    batch_size: int
    epochs: int
    optimizer_reset: str = "never"
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning rate must be non-negative")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch size and epochs must be positive")
        if self.optimizer_reset not in ("never", "per_task"):
            raise ValueError("optimizer_reset must be 'never' or 'per_task'")


@dataclass
class TaskMetrics:
    train_accuracy: float
    test_accuracy: float
    grad_norm: float
    mean_loss: float = field(default=float("nan"))


def loss_and_grad(model, features, labels):
    """Mean loss and mean gradient over a batch of prepared features."""
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise ValueError("empty batch")
    loss, grad, _ = model.loss_and_grad(features, labels)
    return loss, grad


def accuracy_from_logits(logits: np.ndarray, labels) -> float:
    return float(np.mean(predict(logits) == np.asarray(labels)))


def evaluate(model, dataset, features=None) -> float:
    if len(dataset.labels) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    if features is None:
        features = model.prepare(dataset.inputs)
    return accuracy_from_logits(model.logits(features), dataset.labels)


def train_task(model, train, test, config: TrainConfig, opt_state: AdamState | None = None,
               task_index: int = 0, rng=None):
    """Shuffled minibatch Adam on one task, then train/test evaluation.

    Returns ``(model, opt_state, TaskMetrics)``; ``model`` is updated in place.
    ``grad_norm`` is the mean minibatch gradient norm over the task's steps.
    """
    n = len(train.labels)
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    if opt_state is None or config.optimizer_reset == "per_task":
        opt_state = AdamState.zeros(model.n_params)
    if rng is None:
        rng = stream(config.seed, "shuffle", task_index)
    feats = model.prepare(train.inputs)
    labels = np.asarray(train.labels)
    params = model.params
    norms, losses = [], []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grad, _ = model.loss_and_grad(feats[idx], labels[idx])
            params, opt_state = adam_step(params, grad, opt_state, config.learning_rate)
            model.params = params
            norms.append(float(np.linalg.norm(grad)))
            losses.append(loss)
    train_acc = evaluate(model, train, feats)
    test_acc = evaluate(model, test)
    return model, opt_state, TaskMetrics(train_acc, test_acc, float(np.mean(norms)), float(np.mean(losses)))


__all__ = [
    "AdamState",
    "LogProbTop10",
    "MLPModel",
    "QNNModel",
    "TaskMetrics",
    "TrainConfig",
    "ZQubitSigmoid",
    "adam_step",
    "evaluate",
    "loss_and_grad",
    "train_task",
]
