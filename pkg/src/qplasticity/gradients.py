"""Exact circuit gradients.

The workhorse is :func:`adjoint_batch`: one forward pass, then a reverse sweep
that un-applies each gate to recover the state before it while pulling the
loss cotangent back through the same gate. Each gate contributes
``Re sum_ij dU[i, j] M[b, i, j]`` where ``M`` is the per-sample local outer
product of cotangent and state (see ``kernels.outer_*``). Derivatives of the
SU(4) exponential map come from the Daleckii-Krein formula on the eigenbasis
of the Hermitian generator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .ansatz import (
    SU4_GENERATORS,
    CircuitSpec,
    GateKind,
    check_params,
    materialize,
    rotation_derivative,
    run_circuit_batch,
    su4_eig,
)
from .errors import DimensionError, UnsupportedGateError
from .readout import LOSSES
from .statevector import QState, probabilities_batch

DEGENERACY_TOL = 1e-12
FD_STEP = 1e-5


def _divided_differences(lam: np.ndarray) -> np.ndarray:
    """``Phi[i, j] = (e^{-i l_i} - e^{-i l_j}) / (l_i - l_j)``, confluent ``-i e^{-i l_i}``.

    Written as ``-i e^{-i (l_i + l_j)/2} sin(d/2) / (d/2)`` with ``d = l_i - l_j``,
    which has no cancellation for close eigenvalues. Broadcasts over leading axes.
    """
    li, lj = lam[..., :, None], lam[..., None, :]
    d = li - lj
    phi = -1j * np.exp(-0.5j * (li + lj)) * np.sinc(d / (2 * np.pi))
    confluent = np.abs(d) < DEGENERACY_TOL
    return np.where(confluent, -1j * np.exp(-1j * li), phi)


def _derivatives_from_eig(lam: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``(G, 15, 4, 4)`` gate derivatives from ``(G, 4)`` eigenvalues and ``(G, 4, 4)`` eigenvectors."""
    phi = _divided_differences(lam)[:, None]
    q = q[:, None]
    qh = np.swapaxes(q.conj(), -1, -2)
    # generator of theta_k in the eigenbasis: Q^dag (G_k / 2) Q
    gk = 0.5 * (qh @ SU4_GENERATORS[None] @ q)
    return q @ (phi * gk) @ qh


def su4_gate_derivatives(theta) -> np.ndarray:
    """All 15 partial derivatives ``dV/dtheta_k``, shape ``(15, 4, 4)``."""
    lam, q = su4_eig(theta)
    return _derivatives_from_eig(lam[None], q[None])[0]


def su4_gate_derivative(theta, k: int) -> np.ndarray:
    if not 0 <= k < 15:
        raise IndexError("SU(4) parameter index must be in [0, 15)")
    return su4_gate_derivatives(theta)[k]


@dataclass(frozen=True)
class CotangentSpec:
    """Scalar per-sample loss on a quantum readout.

    ``loss`` is ``"cce"``, ``"bce"`` or ``"expval"`` (the logit itself, which
    gives ``d f / d theta``).
    """

    readout: object
    loss: str
    labels: np.ndarray | None = None

    def evaluate(self, p: np.ndarray, n_qubits: int):
        logits = self.readout.logits(p, n_qubits)
        labels = None if self.labels is None else np.asarray(self.labels)
        losses, dlogits = LOSSES[self.loss](logits, labels)
        return losses, dlogits, logits


@dataclass
class AdjointResult:
    losses: np.ndarray  # (B,)
    logits: np.ndarray  # (B,) or (B, K)
    grads: np.ndarray  # (B, M) per-sample gradients
    probs: np.ndarray  # (B, 2**n)


def _derivative_matrices(spec: CircuitSpec, params: np.ndarray, eig) -> list[np.ndarray]:
    out: list = [None] * len(spec.placements)
    su4, lam, q = eig
    if su4:
        for du, i in zip(_derivatives_from_eig(lam, q), su4):
            out[i] = du
    for i, p in enumerate(spec.placements):
        if out[i] is None:
            out[i] = rotation_derivative(p.kind, params[p.slot])[None]
    return out


def adjoint_batch(spec: CircuitSpec, params, psi: np.ndarray, cot: CotangentSpec) -> AdjointResult:
    """Per-sample losses and exact parameter gradients for a batch of input states."""
    params = check_params(spec, params)
    n = spec.n_qubits
    if psi.ndim != 2 or psi.shape[1] != 1 << n:
        raise DimensionError(f"states must have shape (batch, {1 << n})")
    gates, eig = materialize(spec, params, return_eig=True)
    derivs = _derivative_matrices(spec, params, eig)
    state = run_circuit_batch(spec, params, psi, gates)
    probs = probabilities_batch(state)
    losses, dlogits, logits = cot.evaluate(probs, n)
    g = np.ascontiguousarray(2.0 * cot.readout.dprobs(probs, dlogits, n) * state)

    grads = np.zeros((psi.shape[0], spec.n_params))
    for placement, u, du in zip(reversed(spec.placements), reversed(gates), reversed(derivs)):
        udag = np.ascontiguousarray(u.conj().T)
        qs = placement.qubits
        if len(qs) == 1:
            kernels.apply_1q(state, udag, qs[0], n)
            m = kernels.outer_1q(g, state, qs[0], n)
            kernels.apply_1q(g, udag, qs[0], n)
        else:
            kernels.apply_2q(state, udag, qs[0], qs[1], n)
            m = kernels.outer_2q(g, state, qs[0], qs[1], n)
            kernels.apply_2q(g, udag, qs[0], qs[1], n)
        # sum_ij dU[k, i, j] M[b, i, j]
        grads[:, placement.slot : placement.stop] = (m.reshape(len(m), -1) @ du.reshape(len(du), -1).T).real
    return AdjointResult(losses, logits, grads, probs)


def adjoint_gradient(spec: CircuitSpec, params, state: QState, cot: CotangentSpec) -> np.ndarray:
    """Gradient of the scalar loss of one input state."""
    if state.n_qubits != spec.n_qubits:
        raise DimensionError("state and circuit disagree on qubit count")
    one = cot
    if cot.labels is not None:
        one = CotangentSpec(cot.readout, cot.loss, np.atleast_1d(cot.labels)[:1])
    return adjoint_batch(spec, params, state.amplitudes[None, :], one).grads[0]


def _loss_from_probs(cot: CotangentSpec, p: np.ndarray, n: int):
    losses, dlogits, _ = cot.evaluate(p, n)
    return losses, cot.readout.dprobs(p, dlogits, n)


def parameter_shift_gradient(spec: CircuitSpec, params, state: QState, cot: CotangentSpec) -> np.ndarray:
    """Two-term shift rule on every RY/RZ angle, chained through ``dL/dp``."""
    for p in spec.placements:
        if p.kind not in (GateKind.RY, GateKind.RZ):
            raise UnsupportedGateError(f"parameter shift does not support {p.kind.name} gates")
    params = check_params(spec, params)
    n = spec.n_qubits
    psi = state.amplitudes[None, :]
    p0 = probabilities_batch(run_circuit_batch(spec, params, psi))
    labels = None if cot.labels is None else np.atleast_1d(cot.labels)[:1]
    _, dldp = _loss_from_probs(CotangentSpec(cot.readout, cot.loss, labels), p0, n)
    grad = np.zeros(spec.n_params)
    for k in range(spec.n_params):
        shifted = []
        for sign in (1.0, -1.0):
            th = params.copy()
            th[k] += sign * np.pi / 2
            shifted.append(probabilities_batch(run_circuit_batch(spec, th, psi))[0])
        grad[k] = dldp[0] @ (0.5 * (shifted[0] - shifted[1]))
    return grad


def finite_diff_gradient(fn: Callable[[np.ndarray], float], params, h: float = FD_STEP) -> np.ndarray:
    """Central differences ``(f(x + h e_k) - f(x - h e_k)) / 2h``."""
    if not 1e-8 <= h <= 1e-3:
        raise ValueError("finite-difference step must lie in [1e-8, 1e-3]")
    x = np.asarray(params, dtype=float)
    grad = np.zeros_like(x)
    for k in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp.flat[k] += h
        xm.flat[k] -= h
        grad.flat[k] = (fn(xp) - fn(xm)) / (2 * h)
    return grad


def circuit_loss(spec: CircuitSpec, state: QState, cot: CotangentSpec) -> Callable[[np.ndarray], float]:
    """Closure ``params -> scalar loss`` for one input, used with the FD oracle."""
    labels = None if cot.labels is None else np.atleast_1d(cot.labels)[:1]
    one = CotangentSpec(cot.readout, cot.loss, labels)

    def f(params):
        p = probabilities_batch(run_circuit_batch(spec, params, state.amplitudes[None, :]))
        return float(one.evaluate(p, spec.n_qubits)[0][0])

    return f
