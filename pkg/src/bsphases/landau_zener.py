"""Local 2x2 scattering matrix of the Landau-Zener normal form.

With delta = gamma/h, alpha = sqrt(gamma) exp(i arg_alpha) and

    A = i h^(1/2 + i delta) Gamma(1 + i delta) exp(pi delta / 2) / (sqrt(2 pi) alpha)
    B = A exp(-pi delta)

the matrix is T = (1/A) [[-B, 1], [B^2 - A^2, -B]].  It acts on incoming
amplitudes ordered (y+, y-) and produces outgoing ones ordered (z-, z+),
where "+" labels the branch with the larger vanishing eigenvalue before
the crossing.

Entries are evaluated through the closed forms

    T11 = T22 = -tau,   T12 = rho e^{-i arg A},   T21 = -rho e^{i arg A}

with tau = exp(-pi delta) and rho = sqrt(1 - tau^2).  These follow from
|A|^2 = |B|^2 + 1 and avoid the overflow of |A| ~ exp(pi delta / 2).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numeric import log_gamma

DELTA_MAX = 50.0
_HALF_LN_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LocalScattering:
    delta: float
    arg_alpha: float
    t_matrix: np.ndarray
    a_amp: complex | None
    b_amp: complex | None
    flushed: bool = False  # True when exp(-pi delta) was replaced by 0

    @property
    def tau(self):
        return abs(self.t_matrix[0, 0])


def stokes_phase(delta):
    """pi/4 + delta (ln delta - 1) + arg Gamma(1 - i delta); 0 limit value pi/4."""
    if delta < 0:
        raise DomainError("delta must be >= 0")
    if delta == 0:
        return math.pi / 4
    return math.pi / 4 + delta * (math.log(delta) - 1.0) - log_gamma(complex(1.0, delta)).imag


def arg_a(delta, h, arg_alpha=0.0):
    """Phase of A: pi/2 + delta ln h + arg Gamma(1 + i delta) - arg_alpha."""
    return math.pi / 2 + delta * math.log(h) + log_gamma(complex(1.0, delta)).imag - arg_alpha


def lz_matrix(gamma, h, arg_alpha=0.0):
    """Local scattering matrix for coupling ``gamma >= 0`` at semiclassical ``h``.

    At ``gamma = 0`` the matrix is ``-I`` (full transmission) and the
    amplitudes A, B are undefined (``None``).  For delta > 50 the
    transmission exp(-pi delta) is flushed to 0 and ``flushed`` is set; A and
    B are then reported as ``None`` as well since |A| overflows.
    """
    gamma = float(gamma)
    h = float(h)
    if not gamma >= 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    if not h > 0:
        raise DomainError(f"h must be > 0, got {h}")
    delta = gamma / h
    if delta == 0.0:
        return LocalScattering(0.0, arg_alpha, -np.eye(2, dtype=complex), None, None)
    flushed = delta > DELTA_MAX
    tau = 0.0 if flushed else math.exp(-math.pi * delta)
    rho = math.sqrt(-math.expm1(-2.0 * math.pi * delta))
    ph = arg_a(delta, h, arg_alpha)
    t = np.array(
        [[-tau, rho * np.exp(-1j * ph)], [-rho * np.exp(1j * ph), -tau]], dtype=complex
    )
    a_amp = b_amp = None
    if not flushed:
        # |A| = sqrt(h) |Gamma(1 + i delta)| e^{pi delta / 2} / (sqrt(2 pi) |alpha|)
        log_mod = (
            0.5 * math.log(h)
            + log_gamma(complex(1.0, delta)).real
            + 0.5 * math.pi * delta
            - _HALF_LN_2PI
            - 0.5 * math.log(gamma)
        )
        a_amp = complex(np.exp(log_mod + 1j * ph))
        b_amp = a_amp * tau
    return LocalScattering(delta, arg_alpha, t, a_amp, b_amp, flushed)


def lz_matrix_direct(gamma, h, arg_alpha=0.0):
    """Literal (1/A)[[-B, 1], [B^2 - A^2, -B]]; only sensible for moderate delta."""
    delta = gamma / h
    alpha = math.sqrt(gamma) * np.exp(1j * arg_alpha)
    g = np.exp(log_gamma(complex(1.0, delta)))
    pre = 1j * np.exp((0.5 + 1j * delta) * math.log(h)) * g / (math.sqrt(2 * math.pi) * alpha)
    a = pre * math.exp(math.pi * delta / 2)
    b = pre * math.exp(-math.pi * delta / 2)
    return np.array([[-b, 1.0], [b * b - a * a, -b]], dtype=complex) / a
