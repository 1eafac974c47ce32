import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qplasticity import kernels
from qplasticity.errors import DimensionError, EncodingError, UnitarityError
from qplasticity.statevector import (
    QState,
    amplitude_encode,
    amplitude_encode_batch,
    apply_single_qubit,
    apply_two_qubit,
    basis_state,
    check_unitary,
    encode_complex,
    expect_z,
    probabilities,
    z_signs,
)

from conftest import embed, random_state, random_unitary

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
SWAP = np.eye(4)[[0, 2, 1, 3]]
PLUS = QState(1, np.array([1, 1]) / np.sqrt(2))


def test_qstate_validates_length():
    with pytest.raises(DimensionError):
        QState(2, np.ones(3))


def test_amplitude_encode_examples():
    assert np.array_equal(amplitude_encode([1, 0, 0, 0], 2).amplitudes, [1, 0, 0, 0])
    np.testing.assert_allclose(amplitude_encode([3, 4], 1).amplitudes, [0.6, 0.8])
    s = amplitude_encode(np.arange(1, 785, dtype=float), 10)
    assert s.dim == 1024
    assert np.all(s.amplitudes[784:] == 0)
    assert np.all(s.amplitudes.imag == 0)


def test_amplitude_encode_errors():
    with pytest.raises(EncodingError):
        amplitude_encode([0, 0], 1)
    with pytest.raises(DimensionError):
        amplitude_encode([1, 2, 3], 1)
    with pytest.raises(DimensionError):
        amplitude_encode_batch(np.ones(4), 2)


def test_encode_complex_examples():
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    np.testing.assert_allclose(encode_complex(singlet, 2).amplitudes, singlet, atol=1e-15)
    np.testing.assert_allclose(encode_complex([0, 1, -1, 0], 2).amplitudes, singlet, atol=1e-15)
    with pytest.raises(EncodingError):
        encode_complex(np.zeros(4), 2)
    with pytest.raises(DimensionError):
        encode_complex(np.ones(3), 2)


def test_hadamard_and_identity(backend):
    out = apply_single_qubit(basis_state(0, 1), H, 0)
    np.testing.assert_allclose(out.amplitudes, PLUS.amplitudes, atol=1e-15)
    s = QState(2, random_state(np.random.default_rng(0), 2))
    assert np.array_equal(apply_single_qubit(s, np.eye(2), 1).amplitudes, s.amplitudes)
    assert np.array_equal(apply_two_qubit(s, np.eye(4), 0, 1).amplitudes, s.amplitudes)


def test_swap_permutes_basis(backend):
    out = apply_two_qubit(basis_state(0b01, 2), SWAP, 0, 1)
    assert np.array_equal(out.amplitudes, basis_state(0b10, 2).amplitudes)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), data=st.data())
def test_single_qubit_matches_dense_oracle(seed, n, data):
    rng = np.random.default_rng(seed)
    q = data.draw(st.integers(0, n - 1))
    u, psi = random_unitary(rng, 2), random_state(rng, n)
    for name in kernels.available_backends():
        kernels.use_backend(name)
        out = apply_single_qubit(QState(n, psi), u, q).amplitudes
        np.testing.assert_allclose(out, embed(u, [q], n) @ psi, atol=1e-12)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 4), data=st.data())
def test_two_qubit_matches_dense_oracle(seed, n, data):
    rng = np.random.default_rng(seed)
    qa, qb = data.draw(st.permutations(range(n)))[:2]
    u, psi = random_unitary(rng, 4), random_state(rng, n)
    for name in kernels.available_backends():
        kernels.use_backend(name)
        out = apply_two_qubit(QState(n, psi), u, qa, qb).amplitudes
        np.testing.assert_allclose(out, embed(u, [qa, qb], n) @ psi, atol=1e-12)
        assert abs(np.linalg.norm(out) - 1) < 1e-12


def test_three_qubit_oracle_fixed(backend, rng):
    u, psi = random_unitary(rng, 4), random_state(rng, 3)
    out = apply_two_qubit(QState(3, psi), u, 2, 0).amplitudes
    np.testing.assert_allclose(out, embed(u, [2, 0], 3) @ psi, atol=1e-12)


def test_gate_errors():
    s = basis_state(0, 2)
    with pytest.raises(IndexError):
        apply_two_qubit(s, np.eye(4), 0, 0)
    with pytest.raises(IndexError):
        apply_single_qubit(s, np.eye(2), 2)
    with pytest.raises(UnitarityError):
        apply_single_qubit(s, np.array([[1, 1], [0, 1]]), 0, validate=True)
    with pytest.raises(DimensionError):
        apply_single_qubit(s, np.eye(4), 0)
    check_unitary(np.eye(4))


def test_probabilities_examples():
    np.testing.assert_allclose(probabilities(basis_state(0, 2)), [1, 0, 0, 0])
    np.testing.assert_allclose(probabilities(PLUS), [0.5, 0.5])


def test_expect_z_examples():
    assert expect_z(basis_state(0, 1), 0) == 1.0
    assert expect_z(basis_state(1, 1), 0) == -1.0
    assert abs(expect_z(PLUS, 0)) < 1e-15
    with pytest.raises(IndexError):
        expect_z(PLUS, 1)


def test_msb_first_endianness():
    # exhaustive 3-qubit basis states: bit q of the index is qubit q counted from the MSB
    n = 3
    for b in range(8):
        s = basis_state(b, n)
        for q in range(n):
            bit = (b >> (n - 1 - q)) & 1
            assert expect_z(s, q) == (1.0 if bit == 0 else -1.0)
        assert np.argmax(probabilities(s)) == b
    assert list(z_signs(0, 2)) == [1, 1, -1, -1]


@given(seed=st.integers(0, 2**32 - 1))
def test_norm_preserved_over_gate_sequences(seed):
    rng = np.random.default_rng(seed)
    s = QState(3, random_state(rng, 3))
    for _ in range(30):
        if rng.random() < 0.5:
            s = apply_single_qubit(s, random_unitary(rng, 2), int(rng.integers(3)))
        else:
            qa, qb = rng.choice(3, 2, replace=False)
            s = apply_two_qubit(s, random_unitary(rng, 4), int(qa), int(qb))
    assert abs(s.norm() - 1) < 1e-9
    p = probabilities(s)
    assert np.all(p >= 0) and abs(p.sum() - 1) < 1e-9
    assert -1 <= expect_z(s, 1) <= 1
