"""Randomized oracle suites for circuit gradients and SU(4) gates.

These back the ``gradcheck`` CLI command and the acceptance tests.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .ansatz import (
    SU4_GENERATORS,
    CircuitSpec,
    GateKind,
    GatePlacement,
    Layout,
    build_circuit,
    su4_matrix,
)
from .gradients import (
    CotangentSpec,
    adjoint_gradient,
    circuit_loss,
    finite_diff_gradient,
    parameter_shift_gradient,
    su4_gate_derivatives,
)
from .readout import LogProbTop10, ZQubitSigmoid
from .rng import stream
from .statevector import QState

GRAD_FLOOR = 1e-8  # coordinates below this are light-cone zeros and skipped
READOUTS = ("cce_top10", "bce_z", "expval_z")


def _cotangent(name: str, rng, n_qubits: int) -> CotangentSpec:
    if name == "cce_top10":
        return CotangentSpec(LogProbTop10(), "cce", np.array([int(rng.integers(10))]))
    if name == "bce_z":
        return CotangentSpec(ZQubitSigmoid(-1, float(rng.uniform(0.5, 3.0))), "bce",
                             np.array([int(rng.integers(2))]))
    if name == "expval_z":
        return CotangentSpec(ZQubitSigmoid(int(rng.integers(n_qubits)), 1.0), "expval")
    raise ValueError(f"unknown readout {name!r}")


def random_state(rng, n_qubits: int) -> QState:
    dim = 1 << n_qubits
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return QState(n_qubits, v / np.linalg.norm(v))


def rotation_circuit(n_qubits: int, depth: int) -> CircuitSpec:
    """Alternating RY / RZ layers on every qubit."""
    placements, slot = [], 0
    for layer in range(depth):
        kind = GateKind.RY if layer % 2 == 0 else GateKind.RZ
        for q in range(n_qubits):
            placements.append(GatePlacement(kind, (q,), slot))
            slot += 1
    return CircuitSpec(n_qubits, tuple(placements), None, depth)


@dataclass
class GradcheckReport:
    n_circuits: int
    max_rel_error_fd: float
    max_rel_error_by_readout: dict
    checked_coordinates: int
    max_abs_error_shift: float
    n_shift_circuits: int

    def passed(self, fd_tol: float = 1e-5, shift_tol: float = 1e-8) -> bool:
        return self.max_rel_error_fd < fd_tol and self.max_abs_error_shift < shift_tol

    def to_dict(self) -> dict:
        return asdict(self)


def gradcheck_suite(n: int = 60, seed: int = 0, h: float = 1e-5) -> GradcheckReport:
    """Adjoint vs central differences on ``n`` random circuits, cycling readouts.

    Circuits have at most 4 qubits and depth at most 3; the top-10 readout
    always uses 4 qubits. ``n`` RY/RZ circuits also compare parameter shift
    against the adjoint.
    """
    if n < 1:
        raise ValueError("need at least one circuit")
    layouts = list(Layout)
    worst = {r: 0.0 for r in READOUTS}
    checked = 0
    for i in range(n):
        rng = stream(seed, "gradcheck", i)
        readout = READOUTS[i % len(READOUTS)]
        nq = 4 if readout == "cce_top10" else int(rng.integers(2, 5))
        spec = build_circuit(layouts[int(rng.integers(len(layouts)))], nq, int(rng.integers(1, 4)))
        params = rng.uniform(0, 2 * np.pi, size=spec.n_params)
        state = random_state(rng, nq)
        cot = _cotangent(readout, rng, nq)
        adj = adjoint_gradient(spec, params, state, cot)
        fd = finite_diff_gradient(circuit_loss(spec, state, cot), params, h)
        mask = np.abs(fd) > GRAD_FLOOR
        checked += int(mask.sum())
        if mask.any():
            rel = np.abs(adj[mask] - fd[mask]) / np.abs(fd[mask])
            worst[readout] = max(worst[readout], float(rel.max()))

    shift_err = 0.0
    for i in range(n):
        rng = stream(seed, "shiftcheck", i)
        nq = int(rng.integers(1, 5))
        spec = rotation_circuit(nq, int(rng.integers(1, 4)))
        params = rng.uniform(0, 2 * np.pi, size=spec.n_params)
        state = random_state(rng, nq)
        readout = "cce_top10" if nq == 4 and i % 3 == 0 else ("bce_z", "expval_z")[i % 2]
        cot = _cotangent(readout, rng, nq)
        diff = parameter_shift_gradient(spec, params, state, cot) - adjoint_gradient(spec, params, state, cot)
        shift_err = max(shift_err, float(np.max(np.abs(diff))))
    return GradcheckReport(n, max(worst.values()), worst, checked, shift_err, n)


def degenerate_su4_params(rng, pattern=(2, 2)) -> np.ndarray:
    """Parameters whose generator has eigenvalue multiplicities ``pattern``."""
    levels = rng.uniform(-2, 2, size=len(pattern))
    lam = np.repeat(levels, pattern)
    lam -= lam.mean()
    z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    q, _ = np.linalg.qr(z)
    a = (q * lam) @ q.conj().T
    # A = (1/2) sum theta_k G_k and Tr(G_k G_l) = 4 delta_kl
    return 0.5 * np.einsum("kab,ba->k", SU4_GENERATORS, a).real


def su4_fd_error(theta, h: float = 1e-6) -> float:
    """Max elementwise gap between analytic and central-difference ``dV/dtheta_k``."""
    analytic = su4_gate_derivatives(theta)
    worst = 0.0
    for k in range(15):
        e = np.zeros(15)
        e[k] = h
        fd = (su4_matrix(theta + e) - su4_matrix(theta - e)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - analytic[k]))))
    return worst


@dataclass
class SU4Report:
    n_gates: int
    max_unitarity_error: float
    max_fd_error_random: float
    max_fd_error_degenerate: float
    n_derivative_checks: int

    def passed(self, unit_tol: float = 1e-10, fd_tol: float = 1e-6) -> bool:
        return (self.max_unitarity_error < unit_tol
                and max(self.max_fd_error_random, self.max_fd_error_degenerate) < fd_tol)

    def to_dict(self) -> dict:
        return asdict(self)


def su4_suite(n_gates: int = 1000, n_derivative: int = 50, seed: int = 0) -> SU4Report:
    """Unitarity of random gates and derivative checks on random and degenerate spectra.

    Degenerate cases cover multiplicities (2, 2), (2, 1, 1), (3, 1), (4,),
    each also perturbed by ~1e-9 to sit just beside the confluent branch.
    """
    eye = np.eye(4)
    unit_err = 0.0
    for i in range(n_gates):
        theta = stream(seed, "su4-unitary", i).uniform(-2 * np.pi, 2 * np.pi, size=15)
        v = su4_matrix(theta)
        unit_err = max(unit_err, float(np.max(np.abs(v.conj().T @ v - eye))))
    rand_err = 0.0
    for i in range(n_derivative):
        theta = stream(seed, "su4-deriv", i).uniform(-np.pi, np.pi, size=15)
        rand_err = max(rand_err, su4_fd_error(theta))
    deg_err = 0.0
    patterns = ((2, 2), (2, 1, 1), (3, 1), (4,))
    for i in range(n_derivative):
        rng = stream(seed, "su4-degenerate", i)
        theta = degenerate_su4_params(rng, patterns[i % len(patterns)])
        if i % 2:
            theta = theta + 1e-9 * rng.standard_normal(15)
        deg_err = max(deg_err, su4_fd_error(theta))
    return SU4Report(n_gates, unit_err, rand_err, deg_err, 2 * n_derivative)
