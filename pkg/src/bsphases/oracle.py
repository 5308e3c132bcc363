"""Brute-force reference propagator for (h/i) X' = A(t) X.

Exponential midpoint steps ``U_k = exp(i dt A(t_k + dt/2) / h)`` are exactly
unitary for Hermitian generators.  The step count is doubled until two
successive approximations agree; with a second-order scheme the discrepancy
divided by 3 estimates the error of the finer one.

Step products are accumulated pairwise in chunks, and each chunk product is
replaced by its nearest unitary (SVD polar factor).  This only removes the
rounding drift of very long products (~1e-12 after 1e6 steps); it does not
change the discretization error.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegeneracyError, DomainError
from .numeric import eigh_stack, phase_fix, product_stack, unitarity_defect

MAX_STEPS = 20_000_000
H_MIN, H_MAX = 1e-5, 1.0
STEPS_PER_PERIOD = 20
CHUNK = 1 << 17
ENDPOINT_GAP_TOL = 1e-10


@dataclass
class OracleResult:
    s_raw: np.ndarray
    s_channel: np.ndarray | None
    h: float
    mu: np.ndarray
    est_error: float
    steps: int
    interval: tuple

    @property
    def defect(self):
        return unitarity_defect(self.s_raw)


def expi_herm(m, s):
    """``exp(i s m)`` for a stack of Hermitian matrices (last two axes).

    2x2 stacks use the closed form through the Pauli decomposition; larger
    ones go through a batched eigendecomposition.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape[-1] == 2:
        a0 = 0.5 * (m[..., 0, 0] + m[..., 1, 1]).real
        az = 0.5 * (m[..., 0, 0] - m[..., 1, 1]).real
        ax = m[..., 0, 1].real
        ay = -m[..., 0, 1].imag
        r = np.sqrt(ax * ax + ay * ay + az * az)
        c = np.cos(s * r)
        safe = np.where(r > 0, r, 1.0)
        sn = np.where(r > 0, np.sin(s * r) / safe, s)
        ph = np.exp(1j * s * a0)
        out = np.empty(m.shape, dtype=complex)
        out[..., 0, 0] = ph * (c + 1j * sn * az)
        out[..., 1, 1] = ph * (c - 1j * sn * az)
        out[..., 0, 1] = ph * 1j * sn * (ax - 1j * ay)
        out[..., 1, 0] = ph * 1j * sn * (ax + 1j * ay)
        return out
    w, v = eigh_stack(m)
    return (v * np.exp(1j * s * w)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _flow(mat, t0, t1, h, steps):
    """Midpoint product from t0 to t1 (t1 < t0 integrates backwards)."""
    dt = (t1 - t0) / steps
    n = mat.n
    res = np.eye(n, dtype=complex)
    for start in range(0, steps, CHUNK):
        k = np.arange(start, min(steps, start + CHUNK))
        mids = mat(t0 + (k + 0.5) * dt)
        res = _nearest_unitary(product_stack(expi_herm(mids, dt / h)) @ res)
    return res


def _nearest_unitary(m):
    """Polar factor of ``m``; removes rounding drift accumulated over many steps."""
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def _norm_bound(mat, t0, t1):
    ts = np.linspace(min(t0, t1), max(t0, t1), 1025)
    w = np.linalg.eigvalsh(mat(ts))
    return float(np.max(np.abs(w)))


def endpoint_basis(mat, t):
    """Ascending eigenvalues and phase-fixed eigenvectors at ``t``.

    Raises :class:`DegeneracyError` if two eigenvalues coincide.
    """
    w, v = np.linalg.eigh(mat(float(t)))
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.min(np.diff(w)) <= ENDPOINT_GAP_TOL * scale:
        raise DegeneracyError(f"degenerate spectrum at endpoint t = {t}")
    return w, phase_fix(v)


def propagate(f, mu, h, tol=1e-9, interval=None, reverse=False, max_steps=MAX_STEPS):
    """Integrate the adiabatic equation and return an :class:`OracleResult`.

    ``s_raw`` maps X(a) to X(b) (or X(b) to X(a) when ``reverse``).  The
    returned matrix is the finer of the last two step-halving iterates and
    ``est_error`` is their max-entry discrepancy divided by 3.
    """
    h = float(h)
    if not H_MIN <= h <= H_MAX:
        raise DomainError(f"h = {h} outside the supported range [{H_MIN}, {H_MAX}]")
    if tol <= 0:
        raise DomainError("tol must be positive")
    a, b = interval if interval is not None else f.domain
    if not f.domain[0] <= a < b <= f.domain[1]:
        raise DomainError(f"interval [{a}, {b}] not inside domain {f.domain}")
    mat = f.at(mu)
    endpoint_basis(mat, a)
    endpoint_basis(mat, b)
    t0, t1 = (b, a) if reverse else (a, b)

    norm = max(_norm_bound(mat, a, b), 1e-300)
    # at least STEPS_PER_PERIOD steps per period 2 pi h / ||A||
    steps = int(np.ceil(STEPS_PER_PERIOD * norm * (b - a) / (2 * np.pi * h)))
    steps = max(64, 1 << int(np.ceil(np.log2(max(steps, 1)))))
    if steps > max_steps:
        raise ConvergenceError(f"resolving 1/h needs {steps} steps, over budget", np.inf)
    coarse = _flow(mat, t0, t1, h, steps)
    est = np.inf
    while 2 * steps <= max_steps:
        steps *= 2
        fine = _flow(mat, t0, t1, h, steps)
        est = float(np.max(np.abs(fine - coarse))) / 3.0
        coarse = fine
        if est <= tol:
            mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
            return OracleResult(coarse, None, h, mu_arr, est, steps, (a, b))
    raise ConvergenceError(f"tol {tol:g} not reached within {max_steps} steps", est)


def to_channel_basis(r: OracleResult, f, mu):
    """``V_b^* s_raw V_a`` with phase-fixed ascending eigenbases at the ends.

    Entry ``(k, j)`` is the amplitude from in-channel ``j`` to out-channel
    ``k``.  The phase convention fixes the largest-modulus eigenvector
    component real positive; it makes results reproducible, nothing more.
    """
    mat = f.at(mu)
    a, b = r.interval
    _, va = endpoint_basis(mat, a)
    _, vb = endpoint_basis(mat, b)
    s = vb.conj().T @ r.s_raw @ va
    r.s_channel = s
    return s


def oracle_channel(f, mu, h, tol=1e-9, interval=None):
    """Convenience: propagate then frame in the channel basis."""
    r = propagate(f, mu, h, tol=tol, interval=interval)
    to_channel_basis(r, f, mu)
    return r
