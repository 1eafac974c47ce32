import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qplasticity import _pykernels, kernels

from conftest import random_unitary


def brute_outer(g, psi, qubits, n):
    """M[b, i, j] = sum over the other bits of conj(g[b, i]) psi[b, j]."""
    k = len(qubits)
    m = np.zeros((g.shape[0], 1 << k, 1 << k), dtype=complex)
    for idx_i in range(1 << n):
        sub_i = sum(((idx_i >> (n - 1 - q)) & 1) << (k - 1 - t) for t, q in enumerate(qubits))
        for sub_j in range(1 << k):
            idx_j = idx_i
            for t, q in enumerate(qubits):
                bit = (sub_j >> (k - 1 - t)) & 1
                idx_j = (idx_j & ~(1 << (n - 1 - q))) | (bit << (n - 1 - q))
            m[:, sub_i, sub_j] += np.conj(g[:, idx_i]) * psi[:, idx_j]
    return m


def batch(rng, b, n):
    v = rng.standard_normal((b, 1 << n)) + 1j * rng.standard_normal((b, 1 << n))
    return np.ascontiguousarray(v)


def test_backend_switching():
    names = kernels.available_backends()
    assert "python" in names
    prev = kernels.backend_name()
    for name in names:
        kernels.use_backend(name)
        assert kernels.backend_name() == name
    kernels.use_backend(prev)
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5), data=st.data())
def test_backends_agree(seed, n, data):
    rng = np.random.default_rng(seed)
    q = data.draw(st.integers(0, n - 1))
    qa, qb = data.draw(st.permutations(range(n)))[:2]
    psi, g = batch(rng, 3, n), batch(rng, 3, n)
    u1, u2 = random_unitary(rng, 2), random_unitary(rng, 4)
    ref = psi.copy()
    _pykernels.apply_1q(ref, u1, q, n)
    _pykernels.apply_2q(ref, u2, qa, qb, n)
    for name in kernels.available_backends():
        kernels.use_backend(name)
        out = psi.copy()
        kernels.apply_1q(out, u1, q, n)
        kernels.apply_2q(out, u2, qa, qb, n)
        np.testing.assert_allclose(out, ref, atol=1e-13)
        np.testing.assert_allclose(kernels.outer_1q(g, psi, q, n), brute_outer(g, psi, [q], n), atol=1e-12)
        np.testing.assert_allclose(kernels.outer_2q(g, psi, qa, qb, n), brute_outer(g, psi, [qa, qb], n),
                                   atol=1e-12)


def test_outer_product_gives_gradient_pairing(backend, rng):
    # Re sum_ij dU_ij M_ij equals Re <g | dU_full | psi>
    n, qa, qb = 3, 2, 0
    psi, g = batch(rng, 2, n), batch(rng, 2, n)
    du = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    m = kernels.outer_2q(g, psi, qa, qb, n)
    full = psi.copy()
    kernels.apply_2q(full, du, qa, qb, n)
    direct = np.einsum("bi,bi->b", g.conj(), full)
    np.testing.assert_allclose(np.einsum("ij,bij->b", du, m), direct, atol=1e-12)


def test_fallback_selected_at_import():
    code = "from qplasticity import kernels; print(kernels.backend_name())"
    env = {**os.environ, "QPLASTICITY_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
