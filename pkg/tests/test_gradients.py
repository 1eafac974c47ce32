import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qplasticity.ansatz import SU4_GENERATORS, GateKind, GatePlacement, CircuitSpec, build_circuit, su4_matrix
from qplasticity.errors import UnsupportedGateError
from qplasticity.gradients import (
    CotangentSpec,
    adjoint_batch,
    adjoint_gradient,
    circuit_loss,
    finite_diff_gradient,
    parameter_shift_gradient,
    su4_gate_derivative,
    su4_gate_derivatives,
)
from qplasticity.readout import LogProbTop10, ZQubitSigmoid
from qplasticity.statevector import QState, basis_state
from qplasticity.verification import (
    GRAD_FLOOR,
    degenerate_su4_params,
    gradcheck_suite,
    rotation_circuit,
    su4_fd_error,
)

from conftest import random_state

EXPVAL_Z0 = CotangentSpec(ZQubitSigmoid(0, 1.0), "expval")


def single_ry():
    return CircuitSpec(1, (GatePlacement(GateKind.RY, (0,), 0),))


def test_single_ry_closed_form(backend):
    theta = np.array([np.pi / 3])
    g = adjoint_gradient(single_ry(), theta, basis_state(0, 1), EXPVAL_Z0)
    assert abs(g[0] + np.sqrt(3) / 2) < 1e-14
    g2 = parameter_shift_gradient(single_ry(), theta, basis_state(0, 1), EXPVAL_Z0)
    assert abs(g2[0] + np.sqrt(3) / 2) < 1e-14


def test_su4_derivative_at_zero():
    d = su4_gate_derivatives(np.zeros(15))
    np.testing.assert_allclose(d, -0.5j * SU4_GENERATORS, atol=1e-15)
    with pytest.raises(IndexError):
        su4_gate_derivative(np.zeros(15), 15)


def test_su4_derivative_commuting_case():
    # only ZI, IZ, ZZ: the gate is diagonal and derivatives follow the product rule
    rng = np.random.default_rng(5)
    theta = np.zeros(15)
    idx = {"IZ": 2, "ZI": 11, "ZZ": 14}
    for k in idx.values():
        theta[k] = rng.uniform(-3, 3)
    v = su4_matrix(theta)
    np.testing.assert_allclose(v, np.diag(np.diag(v)), atol=1e-14)
    for k in idx.values():
        np.testing.assert_allclose(su4_gate_derivative(theta, k), -0.5j * SU4_GENERATORS[k] @ v, atol=1e-13)


@given(seed=st.integers(0, 2**32 - 1))
def test_su4_derivative_matches_fd(seed):
    theta = np.random.default_rng(seed).uniform(-np.pi, np.pi, 15)
    assert su4_fd_error(theta) < 1e-6


@pytest.mark.parametrize("pattern", [(2, 2), (2, 1, 1), (3, 1), (4,)])
def test_su4_derivative_degenerate_spectra(pattern):
    rng = np.random.default_rng(len(pattern))
    theta = degenerate_su4_params(rng, pattern)
    lam = np.linalg.eigvalsh(0.5 * np.tensordot(theta, SU4_GENERATORS, axes=1))
    assert np.sum(np.abs(np.diff(lam)) < 1e-9) == 4 - len(pattern)
    assert su4_fd_error(theta) < 1e-6
    assert su4_fd_error(theta + 1e-10 * rng.standard_normal(15)) < 1e-6


def _check_fd(spec, params, state, cot):
    adj = adjoint_gradient(spec, params, state, cot)
    fd = finite_diff_gradient(circuit_loss(spec, state, cot), params, 1e-5)
    mask = np.abs(fd) > GRAD_FLOOR
    assert mask.any()
    rel = np.abs(adj[mask] - fd[mask]) / np.abs(fd[mask])
    assert rel.max() < 1e-5
    np.testing.assert_allclose(adj[~mask], 0.0, atol=1e-7)


@pytest.mark.parametrize("readout", ["cce", "bce", "expval"])
def test_depth3_su4_against_fd(readout, backend):
    rng = np.random.default_rng(11)
    spec = build_circuit("brickwall", 4, 3)
    params = rng.uniform(0, 2 * np.pi, spec.n_params)
    state = QState(4, random_state(rng, 4))
    cot = {
        "cce": CotangentSpec(LogProbTop10(), "cce", np.array([3])),
        "bce": CotangentSpec(ZQubitSigmoid(-1, 2.0), "bce", np.array([1])),
        "expval": CotangentSpec(ZQubitSigmoid(1, 1.0), "expval"),
    }[readout]
    _check_fd(spec, params, state, cot)


def test_hea_zero_params_crx_gradients_vanish(backend):
    spec = build_circuit("hea_ring", 4, 2)
    psi = basis_state(0, 4)
    g = adjoint_gradient(spec, np.zeros(spec.n_params), psi, EXPVAL_Z0)
    crx = [p.slot for p in spec.placements if p.kind is GateKind.CRX]
    np.testing.assert_allclose(g[crx], 0.0, atol=1e-15)
    fd = finite_diff_gradient(circuit_loss(spec, psi, EXPVAL_Z0), np.zeros(spec.n_params))
    np.testing.assert_allclose(fd[crx], 0.0, atol=1e-10)


def test_batch_gradients_match_single(rng):
    spec = build_circuit("ladder", 3, 2)
    params = rng.uniform(0, 2 * np.pi, spec.n_params)
    psi = np.stack([random_state(rng, 3) for _ in range(4)])
    labels = np.array([0, 1, 1, 0])
    cot = CotangentSpec(ZQubitSigmoid(), "bce", labels)
    res = adjoint_batch(spec, params, psi, cot)
    for b in range(4):
        one = adjoint_gradient(spec, params, QState(3, psi[b]), CotangentSpec(ZQubitSigmoid(), "bce", labels[b:b + 1]))
        np.testing.assert_allclose(res.grads[b], one, atol=1e-14)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), depth=st.integers(1, 3))
def test_parameter_shift_agrees_with_adjoint(seed, n, depth):
    rng = np.random.default_rng(seed)
    spec = rotation_circuit(n, depth)
    params = rng.uniform(0, 2 * np.pi, spec.n_params)
    state = QState(n, random_state(rng, n))
    cot = CotangentSpec(ZQubitSigmoid(-1, 1.5), "bce", np.array([int(rng.integers(2))]))
    a = adjoint_gradient(spec, params, state, cot)
    s = parameter_shift_gradient(spec, params, state, cot)
    np.testing.assert_allclose(s, a, atol=1e-8)


def test_parameter_shift_rejects_other_gates():
    for layout in ("brickwall", "hea_ring"):
        spec = build_circuit(layout, 2, 1)
        with pytest.raises(UnsupportedGateError):
            parameter_shift_gradient(spec, np.zeros(spec.n_params), basis_state(0, 2), EXPVAL_Z0)


def test_finite_diff_examples():
    g = finite_diff_gradient(lambda x: float(x[0] ** 2), np.array([3.0]), 1e-5)
    assert abs(g[0] - 6.0) < 1e-6
    assert np.all(finite_diff_gradient(lambda x: 1.0, np.ones(4)) == 0)
    for h in (1e-9, 1e-2):
        with pytest.raises(ValueError):
            finite_diff_gradient(lambda x: 0.0, np.ones(1), h)


def test_gradient_bound_on_single_generator_circuits(rng):
    s = 2.5
    spec = build_circuit("hea_ring", 3, 2)
    cot = CotangentSpec(ZQubitSigmoid(-1, s), "expval")
    for _ in range(20):
        params = rng.uniform(0, 2 * np.pi, spec.n_params)
        psi = np.stack([random_state(rng, 3) for _ in range(4)])
        assert np.max(np.abs(adjoint_batch(spec, params, psi, cot).grads)) <= s + 1e-9


def test_gradcheck_suite_small():
    rep = gradcheck_suite(9, seed=3)
    assert rep.passed()
    assert set(rep.max_rel_error_by_readout) == {"cce_top10", "bce_z", "expval_z"}
