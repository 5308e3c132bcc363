import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import loggamma

from bsphases.errors import DomainError
from bsphases.numeric import (
    abs_gamma_squared,
    eig_herm,
    log_gamma,
    phase_fix,
    product_stack,
    unitarity_defect,
)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


def random_unitary(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_eig_identity():
    w, v = eig_herm(np.eye(3))
    assert np.allclose(w, 1.0)
    assert np.allclose(v.conj().T @ v, np.eye(3), atol=1e-12)


def test_eig_swap():
    w, _ = eig_herm([[0, 1], [1, 0]])
    assert np.allclose(w, [-1, 1], atol=1e-15)


def test_eig_reconstruction_random():
    rng = np.random.default_rng(5)
    m = random_hermitian(rng, 5)
    w, v = eig_herm(m)
    assert np.max(np.abs((v * w) @ v.conj().T - m)) <= 1e-12 * max(1, np.abs(m).max())
    assert np.all(np.diff(w) >= 0)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 16), seed=st.integers(0, 2**31))
def test_eig_properties(n, seed):
    m = random_hermitian(np.random.default_rng(seed), n)
    w, v = eig_herm(m)
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(v.conj().T @ v - np.eye(n))) <= 1e-12


def test_eig_rejects_non_hermitian():
    with pytest.raises(DomainError):
        eig_herm([[0, 1], [0, 0]])


def test_log_gamma_special_values():
    assert abs(log_gamma(1)) < 1e-15
    assert abs(log_gamma(0.5) - math.log(math.sqrt(math.pi))) < 1e-14
    g2 = math.exp(2 * log_gamma(1 + 1j).real)
    assert abs(g2 - math.pi / math.sinh(math.pi)) < 1e-14


def test_log_gamma_matches_scipy():
    for z in [0.3, 2.5, 1 + 0.01j, 1 + 3j, 1 + 20j, 1 + 50j, 7.5 - 2j]:
        assert abs(log_gamma(z) - loggamma(z)) < 1e-12


def test_log_gamma_reflection_random():
    rng = np.random.default_rng(0)
    for x in rng.uniform(1e-6, 50, 100):
        val = abs_gamma_squared(x) * math.sinh(math.pi * x) / (math.pi * x)
        assert abs(val - 1) <= 1e-12


def test_log_gamma_domain():
    for z in [0, -1, -3.0, -0.5, float("nan")]:
        with pytest.raises(DomainError):
            log_gamma(z)


def test_unitarity_defect_examples():
    assert unitarity_defect(np.eye(4)) == 0.0
    assert unitarity_defect([[1, 1], [0, 1]]) == 1.0


def test_composition_stability():
    rng = np.random.default_rng(1)
    for n in (2, 5, 16):
        u = random_unitary(rng, n)
        v = random_unitary(rng, n)
        du, dv = unitarity_defect(u), unitarity_defect(v)
        assert unitarity_defect(u @ v) <= 4 * (du + dv) + 1e-15


def test_phase_fix_convention():
    rng = np.random.default_rng(2)
    v = random_unitary(rng, 4)
    f = phase_fix(v)
    for j in range(4):
        k = np.argmax(np.abs(f[:, j]))
        assert abs(f[k, j].imag) < 1e-15 and f[k, j].real > 0
    assert np.allclose(np.abs(f), np.abs(v))


def test_product_stack_order():
    rng = np.random.default_rng(3)
    ms = np.array([random_unitary(rng, 3) for _ in range(7)])
    ref = np.eye(3)
    for m in ms:
        ref = m @ ref
    assert np.allclose(product_stack(ms), ref, atol=1e-13)
