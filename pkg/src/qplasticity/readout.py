"""Readout heads and losses.

Quantum readouts are functions of the measurement probabilities ``p`` only,
so each head provides ``logits(p)`` and the pull-back ``dprobs(p, dlogits)``
of a logit cotangent to ``dL/dp``. The adjoint sweep then starts from the
state cotangent ``2 * dL/dp * psi``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .statevector import z_signs

EPS_CLAMP = 1e-12


@dataclass(frozen=True)
class LogProbTop10:
    """Class logits ``log(max(p_c, eps))`` of the first ``n_classes`` basis states."""

    n_classes: int = 10
    eps_clamp: float = EPS_CLAMP
    loss: str = "cce"

    def check(self, n_qubits: int) -> None:
        if (1 << n_qubits) < self.n_classes:
            raise ValueError(f"{n_qubits} qubits hold fewer than {self.n_classes} basis states")

    def logits(self, p: np.ndarray, n_qubits: int) -> np.ndarray:
        return np.log(np.maximum(p[:, : self.n_classes], self.eps_clamp))

    def dprobs(self, p: np.ndarray, dlogits: np.ndarray, n_qubits: int) -> np.ndarray:
        out = np.zeros_like(p)
        head = p[:, : self.n_classes]
        live = head > self.eps_clamp
        out[:, : self.n_classes] = np.where(live, dlogits / np.where(live, head, 1.0), 0.0)
        return out


@dataclass(frozen=True)
class ZQubitSigmoid:
    """Binary logit ``s * <Z_q>``; ``qubit=-1`` means the last qubit."""

    qubit: int = -1
    scale: float = 1.0
    loss: str = "bce"

    def resolve(self, n_qubits: int) -> int:
        q = self.qubit % n_qubits if self.qubit < 0 else self.qubit
        if not 0 <= q < n_qubits:
            raise IndexError(f"readout qubit {self.qubit} out of range")
        return q

    def check(self, n_qubits: int) -> None:
        self.resolve(n_qubits)

    def logits(self, p: np.ndarray, n_qubits: int) -> np.ndarray:
        return self.scale * (p @ z_signs(self.resolve(n_qubits), n_qubits))

    def dprobs(self, p: np.ndarray, dlogits: np.ndarray, n_qubits: int) -> np.ndarray:
        z = z_signs(self.resolve(n_qubits), n_qubits)
        return (self.scale * np.asarray(dlogits))[:, None] * z[None, :]


@dataclass(frozen=True)
class ClassicalLogits:
    loss: str = "cce"

    def logits(self, out: np.ndarray, n_qubits: int | None = None) -> np.ndarray:
        return out


def readout_logits(values: np.ndarray, kind, n_qubits: int | None = None) -> np.ndarray:
    """Logits for a batch: probabilities for quantum heads, raw outputs otherwise."""
    return kind.logits(np.atleast_2d(values), n_qubits)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def cce(logits: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample categorical cross-entropy and its logit gradient."""
    labels = np.asarray(labels)
    k = logits.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    logp = log_softmax(logits)
    rows = np.arange(len(labels))
    losses = -logp[rows, labels]
    dlogits = np.exp(logp)
    dlogits[rows, labels] -= 1.0
    return losses, dlogits


def bce(f: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample sigmoid binary cross-entropy on scalar logits."""
    labels = np.asarray(labels, dtype=float)
    if labels.size and not np.all((labels == 0) | (labels == 1)):
        raise ValueError("binary labels must be 0 or 1")
    losses = np.logaddexp(0.0, f) - labels * f
    return losses, expit(f) - labels


def expval(f: np.ndarray, labels=None) -> tuple[np.ndarray, np.ndarray]:
    """Treat the logit itself as the loss (for plain ``d f / d theta``)."""
    return np.asarray(f, dtype=float).copy(), np.ones_like(f, dtype=float)


LOSSES = {"cce": cce, "bce": bce, "expval": expval}


def predict(logits: np.ndarray) -> np.ndarray:
    """Argmax with ties to the lowest index; scalar logits: class 1 iff sigmoid >= 0.5."""
    if logits.ndim == 1:
        return (logits >= 0.0).astype(int)
    return np.argmax(logits, axis=1)
