import math

import numpy as np
import pytest

from bsphases.errors import DomainError
from bsphases.landau_zener import lz_matrix, lz_matrix_direct, stokes_phase
from bsphases.numeric import unitarity_defect

DELTAS = [0, 1e-6, 0.01, 0.1, 1, 5, 20, 50]


@pytest.mark.parametrize("delta", DELTAS)
def test_unitarity_and_magnitudes(delta):
    h = 0.1
    s = lz_matrix(delta * h, h)
    t = s.t_matrix
    assert unitarity_defect(t) <= 1e-12
    assert abs(abs(t[0, 0]) - math.exp(-math.pi * delta)) <= 1e-12
    assert abs(abs(t[1, 1]) - math.exp(-math.pi * delta)) <= 1e-12
    off = math.sqrt(1 - math.exp(-2 * math.pi * delta))
    assert abs(abs(t[0, 1]) - off) <= 1e-12
    assert abs(abs(t[1, 0]) - off) <= 1e-12


@pytest.mark.parametrize("delta", DELTAS[1:])
def test_amplitude_identities(delta):
    s = lz_matrix(delta * 0.05, 0.05)
    a, b = s.a_amp, s.b_amp
    # relative: |A|^2 grows like 1 / (2 pi delta) for small delta
    assert abs(abs(a) ** 2 - abs(b) ** 2 - 1) <= 1e-12 * abs(a) ** 2
    assert abs(a * np.conj(b) - np.conj(a) * b) <= 1e-12 * abs(a) ** 2
    assert abs(abs(b / a) - math.exp(-math.pi * delta)) <= 1e-14


@pytest.mark.parametrize("delta", [0.01, 0.3, 1, 3])
def test_closed_form_matches_literal(delta):
    for h, arg in ((0.05, 0.0), (0.01, 1.3)):
        assert np.max(np.abs(lz_matrix(delta * h, h, arg).t_matrix - lz_matrix_direct(delta * h, h, arg))) < 1e-12


def test_half_transmission():
    h = 0.2
    s = lz_matrix(h * math.log(2) / math.pi, h)
    assert abs(abs(s.t_matrix[0, 0]) - 0.5) < 1e-14


def test_delta_one_offdiagonal():
    s = lz_matrix(0.07, 0.07)
    assert abs(abs(s.t_matrix[0, 1]) ** 2 - (1 - math.exp(-2 * math.pi))) < 1e-14
    assert abs(1 - math.exp(-2 * math.pi) - 0.998132) < 1e-6


def test_flush_beyond_fifty():
    s = lz_matrix(60.0, 1.0)
    assert s.flushed and s.t_matrix[0, 0] == 0
    assert s.a_amp is None
    assert unitarity_defect(s.t_matrix) < 1e-15


def test_zero_gamma():
    s = lz_matrix(0.0, 0.3)
    assert np.array_equal(s.t_matrix, -np.eye(2))


def test_gauge_magnitude_invariance():
    rng = np.random.default_rng(0)
    base = np.abs(lz_matrix(0.03, 0.05).t_matrix)
    for phi in rng.uniform(-math.pi, math.pi, 100):
        t = lz_matrix(0.03, 0.05, phi).t_matrix
        assert np.allclose(np.abs(t), base, atol=1e-14)


def test_gauge_covariance_is_diagonal_conjugation():
    t0 = lz_matrix(0.03, 0.05, 0.0).t_matrix
    t1 = lz_matrix(0.03, 0.05, 0.8).t_matrix
    d = np.diag([np.exp(-0.4j), np.exp(0.4j)])
    assert np.allclose(d.conj() @ t0 @ d, t1, atol=1e-14) or np.allclose(d @ t0 @ d.conj(), t1, atol=1e-14)


def test_small_delta_limit():
    t = lz_matrix(1e-10, 0.1).t_matrix
    assert np.allclose(np.abs(t), np.eye(2), atol=1e-4)


def test_monotone_transmission():
    deltas = np.linspace(0, 3, 40)
    tau = [abs(lz_matrix(d * 0.1, 0.1).t_matrix[0, 0]) for d in deltas]
    assert np.all(np.diff(tau) < 0)


def test_errors():
    with pytest.raises(DomainError):
        lz_matrix(-0.1, 0.1)
    with pytest.raises(DomainError):
        lz_matrix(0.1, 0.0)


def test_stokes_phase_limits():
    assert stokes_phase(0.0) == pytest.approx(math.pi / 4)
    assert abs(stokes_phase(1e-9) - math.pi / 4) < 1e-7
    # large delta: Stirling makes the phase vanish like 1 / (12 delta)
    assert abs(stokes_phase(40.0)) < 1e-2
