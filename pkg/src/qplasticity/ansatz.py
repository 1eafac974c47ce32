"""Parameterized circuit templates and gate materialization.

Three layouts are provided: a brickwall and a ladder of general two-qubit
SU(4) gates, and a hardware-efficient ring of CRX entanglers followed by
Ry-Rz-Ry rotations on every qubit. Parameters live in a single flat float
array; each :class:`GatePlacement` owns a contiguous slot of it.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .errors import DimensionError
from .rng import stream
from .statevector import QState

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = (I2, X, Y, Z)

# sigma_a (x) sigma_b for (a, b) != (0, 0), ordered by k = 4a + b - 1.
SU4_GENERATORS = np.array(
    [np.kron(PAULIS[a], PAULIS[b]) for a in range(4) for b in range(4) if (a, b) != (0, 0)]
)
SU4_LABELS = tuple("IXYZ"[a] + "IXYZ"[b] for a in range(4) for b in range(4) if (a, b) != (0, 0))

_P1 = np.diag([0.0, 1.0]).astype(np.complex128)  # |1><1| on the control


class GateKind(enum.Enum):
    SU4 = ("su4", 15, 2)
    RY = ("ry", 1, 1)
    RZ = ("rz", 1, 1)
    CRX = ("crx", 1, 2)

    def __init__(self, tag, arity, n_qubits):
        self.tag = tag
        self.arity = arity
        self.n_qubits = n_qubits

    @property
    def single_generator(self) -> bool:
        return self is not GateKind.SU4


class Layout(enum.Enum):
    BRICKWALL = "brickwall"
    LADDER = "ladder"
    HEA_RING = "hea_ring"


@dataclass(frozen=True)
class GatePlacement:
    kind: GateKind
    qubits: tuple[int, ...]
    slot: int  # first parameter index

    @property
    def stop(self) -> int:
        return self.slot + self.kind.arity


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    placements: tuple[GatePlacement, ...]
    layout: Layout | None = None
    depth: int = 0

    @cached_property
    def n_params(self) -> int:
        return sum(p.kind.arity for p in self.placements)

    @property
    def single_generator(self) -> bool:
        return all(p.kind.single_generator for p in self.placements)

    def to_json(self, seed: int | None = None) -> str:
        doc = {
            "layout": self.layout.value if self.layout else None,
            "n_qubits": self.n_qubits,
            "depth": self.depth,
            "seed": seed,
        }
        return json.dumps(doc, sort_keys=True)


def circuit_from_json(text: str) -> tuple[CircuitSpec, int | None]:
    doc = json.loads(text)
    spec = build_circuit(Layout(doc["layout"]), doc["n_qubits"], doc["depth"])
    return spec, doc.get("seed")


def _layer_pairs(layout: Layout, n: int) -> list[tuple[int, int]]:
    if layout is Layout.BRICKWALL:
        return [(i, i + 1) for i in range(0, n - 1, 2)] + [(i, i + 1) for i in range(1, n - 1, 2)]
    if layout is Layout.LADDER:
        return [(i, i + 1) for i in range(n - 1)]
    return [(i, (i + 1) % n) for i in range(n)]


def build_circuit(layout: Layout | str, n_qubits: int, depth: int) -> CircuitSpec:
    layout = Layout(layout)
    if n_qubits < 2:
        raise ValueError("circuits need at least 2 qubits")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    placements = []
    slot = 0

    def add(kind, qubits):
        nonlocal slot
        placements.append(GatePlacement(kind, qubits, slot))
        slot += kind.arity

    for _ in range(depth):
        pairs = _layer_pairs(layout, n_qubits)
        if layout is Layout.HEA_RING:
            for pair in pairs:
                add(GateKind.CRX, pair)
            for q in range(n_qubits):
                add(GateKind.RY, (q,))
                add(GateKind.RZ, (q,))
                add(GateKind.RY, (q,))
        else:
            for pair in pairs:
                add(GateKind.SU4, pair)
    return CircuitSpec(n_qubits, tuple(placements), layout, depth)


def empty_circuit(n_qubits: int) -> CircuitSpec:
    return CircuitSpec(n_qubits, (), None, 0)


def su4_generator(theta) -> np.ndarray:
    """Hermitian ``A = (1/2) sum_k theta_k G_k``; the gate is ``exp(-iA)``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (15,):
        raise DimensionError("SU(4) gates take 15 parameters")
    if not np.all(np.isfinite(theta)):
        raise ValueError("SU(4) parameters must be finite")
    return 0.5 * np.tensordot(theta, SU4_GENERATORS, axes=1)


def su4_eig(theta) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh(su4_generator(theta))


def su4_eig_batch(thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of the generators of a ``(G, 15)`` stack of gates."""
    return np.linalg.eigh(0.5 * np.tensordot(thetas, SU4_GENERATORS, axes=1))


def su4_from_eig(lam: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``Q diag(exp(-i lam)) Q^dag``; broadcasts over leading axes."""
    return (q * np.exp(-1j * lam)[..., None, :]) @ np.swapaxes(q.conj(), -1, -2)


def su4_matrix(theta) -> np.ndarray:
    return su4_from_eig(*su4_eig(theta))


def rotation_matrix(kind: GateKind | str, theta: float) -> np.ndarray:
    """``exp(-i theta P / 2)``; CRX applies RX on the second qubit when the first is 1."""
    if isinstance(kind, str):
        kind = GateKind[kind.upper()]
    theta = float(theta)
    if not np.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if kind is GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind is GateKind.RZ:
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]], dtype=np.complex128)
    if kind is GateKind.CRX:
        u = np.eye(4, dtype=np.complex128)
        u[2:, 2:] = [[c, -1j * s], [-1j * s, c]]
        return u
    raise ValueError(f"{kind} is not a single-parameter rotation")


def rotation_derivative(kind: GateKind, theta: float) -> np.ndarray:
    if kind is GateKind.RY:
        return -0.5j * Y @ rotation_matrix(kind, theta)
    if kind is GateKind.RZ:
        return -0.5j * Z @ rotation_matrix(kind, theta)
    if kind is GateKind.CRX:
        d = np.zeros((4, 4), dtype=np.complex128)
        d[2:, 2:] = -0.5j * X @ rotation_matrix(GateKind.CRX, theta)[2:, 2:]
        return d
    raise ValueError(f"{kind} is not a single-parameter rotation")


def gate_matrix(placement: GatePlacement, params: np.ndarray) -> np.ndarray:
    if placement.kind is GateKind.SU4:
        return su4_matrix(params[placement.slot : placement.stop])
    return rotation_matrix(placement.kind, params[placement.slot])


def materialize(spec: CircuitSpec, params: np.ndarray, return_eig: bool = False):
    """Gate matrices in placement order.

    All SU(4) gates are diagonalized in one batched call; with ``return_eig``
    their ``(lam, Q)`` stacks and placement positions are returned as well.
    """
    params = check_params(spec, params)
    gates: list = [None] * len(spec.placements)
    su4 = [i for i, p in enumerate(spec.placements) if p.kind is GateKind.SU4]
    lam = q = None
    if su4:
        thetas = np.stack([params[spec.placements[i].slot : spec.placements[i].stop] for i in su4])
        lam, q = su4_eig_batch(thetas)
        for u, i in zip(su4_from_eig(lam, q), su4):
            gates[i] = u
    for i, p in enumerate(spec.placements):
        if gates[i] is None:
            gates[i] = rotation_matrix(p.kind, params[p.slot])
    if return_eig:
        return gates, (su4, lam, q)
    return gates


INIT_SCHEMES = ("uniform_0_2pi", "uniform_pm0.1", "normal", "zeros")


def init_params(spec: CircuitSpec, scheme: str, seed: int) -> np.ndarray:
    rng = stream(seed, "init", "qnn")
    m = spec.n_params
    if scheme == "uniform_0_2pi":
        return rng.uniform(0.0, 2 * np.pi, size=m)
    if scheme == "uniform_pm0.1":
        return rng.uniform(-0.1, 0.1, size=m)
    if scheme == "normal":
        return rng.standard_normal(m)
    if scheme == "zeros":
        return np.zeros(m)
    raise ValueError(f"unknown init scheme {scheme!r}; expected one of {INIT_SCHEMES}")


def check_params(spec: CircuitSpec, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.n_params,):
        raise DimensionError(f"expected {spec.n_params} parameters, got shape {params.shape}")
    if not np.all(np.isfinite(params)):
        raise ValueError("circuit parameters must be finite")
    return params


def apply_gate_batch(psi: np.ndarray, placement: GatePlacement, u: np.ndarray, n: int) -> None:
    if placement.kind.n_qubits == 1:
        kernels.apply_1q(psi, u, placement.qubits[0], n)
    else:
        kernels.apply_2q(psi, u, placement.qubits[0], placement.qubits[1], n)


def run_circuit_batch(spec: CircuitSpec, params, psi: np.ndarray, gates=None) -> np.ndarray:
    """Evolve a ``(batch, 2**n)`` array of states; the input is not modified."""
    if psi.ndim != 2 or psi.shape[1] != 1 << spec.n_qubits:
        raise DimensionError(f"states must have shape (batch, {1 << spec.n_qubits})")
    if gates is None:
        gates = materialize(spec, params)
    out = np.array(psi, dtype=np.complex128, order="C", copy=True)
    for placement, u in zip(spec.placements, gates):
        apply_gate_batch(out, placement, u, spec.n_qubits)
    return out


def run_circuit(spec: CircuitSpec, params, state: QState) -> QState:
    if state.n_qubits != spec.n_qubits:
        raise DimensionError("state and circuit disagree on qubit count")
    return QState(spec.n_qubits, run_circuit_batch(spec, params, state.amplitudes[None, :])[0])


def dense_unitary(spec: CircuitSpec, params) -> np.ndarray:
    """Full ``2**n x 2**n`` circuit matrix; small registers only (oracle use)."""
    dim = 1 << spec.n_qubits
    cols = run_circuit_batch(spec, params, np.eye(dim, dtype=np.complex128))
    return cols.T
