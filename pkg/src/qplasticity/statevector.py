"""Exact double-precision statevectors.

Basis convention: index ``b = sum_q bit(q) * 2**(n-1-q)``, so qubit 0 is the
most significant bit and "the first K bitstrings" are indices ``0..K-1``.

The single-state API (:class:`QState` and friends) is value-semantic. Training
code works on batches, plain ``(batch, 2**n)`` complex arrays, through the
``*_batch`` helpers, which share the same kernels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, EncodingError, UnitarityError

UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class QState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DimensionError("n_qubits must be positive")
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise DimensionError(
                f"expected {1 << self.n_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def basis_state(index: int, n_qubits: int) -> QState:
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return QState(n_qubits, amps)


def amplitude_encode(data, n_qubits: int) -> QState:
    """Zero-pad a real vector to ``2**n_qubits`` entries and L2-normalize it."""
    return QState(n_qubits, amplitude_encode_batch(np.asarray(data, dtype=float)[None, :], n_qubits)[0])


def amplitude_encode_batch(data: np.ndarray, n_qubits: int) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise DimensionError("expected a (batch, features) array")
    dim = 1 << n_qubits
    if data.shape[1] > dim:
        raise DimensionError(f"{data.shape[1]} features do not fit in {n_qubits} qubits")
    norms = np.linalg.norm(data, axis=1)
    if np.any(norms == 0.0):
        raise EncodingError("cannot amplitude-encode an all-zero vector")
    out = np.zeros((data.shape[0], dim), dtype=np.complex128)
    out[:, : data.shape[1]] = data / norms[:, None]
    return out


def encode_complex(state_in, n_qubits: int) -> QState:
    """Load a complex vector verbatim as a register, renormalized to unit norm."""
    v = np.asarray(state_in, dtype=np.complex128)
    if v.shape != (1 << n_qubits,):
        raise DimensionError(f"expected {1 << n_qubits} amplitudes, got {v.shape}")
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise EncodingError("cannot encode the zero vector")
    return QState(n_qubits, v / nrm)


def encode_complex_batch(states: np.ndarray, n_qubits: int) -> np.ndarray:
    v = np.asarray(states, dtype=np.complex128)
    if v.ndim != 2 or v.shape[1] != 1 << n_qubits:
        raise DimensionError(f"expected (batch, {1 << n_qubits}) amplitudes, got {v.shape}")
    norms = np.linalg.norm(v, axis=1)
    if np.any(norms == 0.0):
        raise EncodingError("cannot encode the zero vector")
    return np.ascontiguousarray(v / norms[:, None])


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> None:
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if not dev < tol:
        raise UnitarityError(f"matrix is not unitary (max deviation {dev:.3e})")


def _check_qubit(q: int, n: int) -> None:
    if not 0 <= q < n:
        raise IndexError(f"qubit index {q} out of range for {n} qubits")


def _as_gate(u, size: int) -> np.ndarray:
    u = np.ascontiguousarray(u, dtype=np.complex128)
    if u.shape != (size, size):
        raise DimensionError(f"expected a {size}x{size} gate, got {u.shape}")
    return u


def apply_single_qubit(state: QState, u, q: int, validate: bool = False) -> QState:
    _check_qubit(q, state.n_qubits)
    u = _as_gate(u, 2)
    if validate:
        check_unitary(u)
    psi = state.amplitudes.astype(np.complex128, copy=True)[None, :]
    kernels.apply_1q(psi, u, q, state.n_qubits)
    return QState(state.n_qubits, psi[0])


def apply_two_qubit(state: QState, u, q_a: int, q_b: int, validate: bool = False) -> QState:
    n = state.n_qubits
    _check_qubit(q_a, n)
    _check_qubit(q_b, n)
    if q_a == q_b:
        raise IndexError("two-qubit gate needs distinct qubits")
    u = _as_gate(u, 4)
    if validate:
        check_unitary(u)
    psi = state.amplitudes.astype(np.complex128, copy=True)[None, :]
    kernels.apply_2q(psi, u, q_a, q_b, n)
    return QState(n, psi[0])


def probabilities(state: QState) -> np.ndarray:
    return probabilities_batch(state.amplitudes[None, :])[0]


def probabilities_batch(psi: np.ndarray) -> np.ndarray:
    return psi.real**2 + psi.imag**2


def z_signs(q: int, n: int) -> np.ndarray:
    """+1 where bit ``q`` of the basis index is 0, -1 where it is 1."""
    bits = (np.arange(1 << n) >> (n - 1 - q)) & 1
    return 1.0 - 2.0 * bits


def expect_z(state: QState, q: int) -> float:
    _check_qubit(q, state.n_qubits)
    return float(expect_z_batch(state.amplitudes[None, :], q, state.n_qubits)[0])


def expect_z_batch(psi: np.ndarray, q: int, n: int) -> np.ndarray:
    return probabilities_batch(psi) @ z_signs(q, n)
