"""Small dense linear algebra and the complex log-Gamma function.

Matrices are plain ``numpy`` arrays.  A "Hermitian matrix" is a square complex
array equal to its conjugate transpose up to rounding; a "unitary matrix" is a
square array whose :func:`unitarity_defect` is below the tolerance declared by
the operation that produced it.
"""

import cmath
import math

import numpy as np

from .errors import ConvergenceError, DomainError

HERMITIAN_TOL = 1e-14
RECONSTRUCTION_TOL = 1e-12
MAX_DIM = 16

# Lanczos approximation, g = 671/128 with 14 terms.  The error is below
# 1e-15 (relative, on Gamma itself) uniformly on Re(z) >= 1/2.
_LANCZOS_G = 671.0 / 128.0
_LANCZOS_COEF = (
    57.1562356658629235,
    -59.5979603554754912,
    14.1360979747417471,
    -0.491913816097620199,
    0.339946499848118887e-4,
    0.465236289270485756e-4,
    -0.983744753048795646e-4,
    0.158088703224912494e-3,
    -0.210264441724104883e-3,
    0.217439618115212643e-3,
    -0.164318106536763890e-3,
    0.844182239838527433e-4,
    -0.261908384015814087e-4,
    0.368991826595316234e-5,
)
_LANCZOS_C0 = 0.999999999999997092
_SQRT_2PI = 2.5066282746310005


def hermitian_defect(m):
    """Max-entry norm of ``m - m^*``."""
    m = np.asarray(m)
    return float(np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2))), initial=0.0))


def as_hermitian(m, tol=HERMITIAN_TOL):
    """Validate ``m`` as a Hermitian matrix and return it as a complex array.

    The tolerance is relative to ``max(1, max|m_ij|)``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if hermitian_defect(m) > tol * scale:
        raise DomainError(f"matrix is not Hermitian (defect {hermitian_defect(m):.3e})")
    return m


def eig_herm(m):
    """Eigen-decomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as orthonormal columns.  Raises :class:`ConvergenceError` if
    ``V diag(w) V^*`` does not reproduce ``m`` to ``1e-12 * ||m||``.
    """
    m = as_hermitian(m)
    n = m.shape[0]
    if not 1 <= n <= MAX_DIM:
        raise DomainError(f"dimension {n} outside supported range 1..{MAX_DIM}")
    w, v = np.linalg.eigh(m)
    norm = max(float(np.max(np.abs(m), initial=0.0)), np.finfo(float).tiny)
    residual = float(np.max(np.abs((v * w) @ v.conj().T - m)))
    if residual > RECONSTRUCTION_TOL * max(norm, 1.0):
        raise ConvergenceError(
            f"eigendecomposition residual {residual:.3e} exceeds tolerance", residual
        )
    return w, v


def eigh_stack(ms):
    """Batched ascending eigen-decomposition of a stack of Hermitian matrices.

    No validation; used on matrices produced by :mod:`bsphases.model`, which
    are Hermitian by construction.
    """
    return np.linalg.eigh(ms)


def unitarity_defect(m):
    """``max_ij |(m^* m - I)_ij|``; zero exactly for a unitary matrix."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


def phase_fix(v):
    """Rephase vector(s) so the largest-modulus component is real positive.

    Works on a single vector or on the columns of a matrix (last axis is the
    column index, as returned by ``eigh``).  Ties are broken by the first
    index, which is what ``argmax`` returns.
    """
    v = np.asarray(v, dtype=complex)
    if v.ndim == 1:
        k = int(np.argmax(np.abs(v)))
        return v * np.exp(-1j * np.angle(v[k]))
    k = np.argmax(np.abs(v), axis=-2)
    pivots = np.take_along_axis(v, k[..., None, :], axis=-2)
    return v * np.exp(-1j * np.angle(pivots))


def log_gamma(z):
    """Principal branch of log Gamma(z) for Re(z) > 0.

    Lanczos approximation; no reflection formula, so the left half-plane is
    rejected.  The imaginary part is the continuous branch that vanishes on
    the positive real axis (same convention as ``scipy.special.loggamma``).
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"log_gamma argument must be finite, got {z!r}")
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise DomainError(f"log_gamma has a pole at {z.real:g}")
    if z.real <= 0.0:
        raise DomainError("log_gamma requires Re(z) > 0")
    tmp = z + _LANCZOS_G
    tmp = (z + 0.5) * cmath.log(tmp) - tmp
    ser = _LANCZOS_C0
    y = z
    for c in _LANCZOS_COEF:
        y += 1.0
        ser += c / y
    return tmp + cmath.log(_SQRT_2PI * ser / z)


def abs_gamma_squared(x):
    """|Gamma(1 + i x)|^2 evaluated through :func:`log_gamma`."""
    return math.exp(2.0 * log_gamma(complex(1.0, x)).real)


def product_stack(ms):
    """Ordered product ``ms[-1] @ ... @ ms[1] @ ms[0]`` by pairwise reduction.

    Pairwise (tree) reduction keeps the rounding error growth logarithmic in
    the number of factors.
    """
    ms = np.asarray(ms)
    if ms.shape[0] == 0:
        return np.eye(ms.shape[-1], dtype=complex)
    eye = np.eye(ms.shape[-1], dtype=ms.dtype)[None]
    while ms.shape[0] > 1:
        if ms.shape[0] % 2:
            ms = np.concatenate([ms, eye])
        ms = ms[1::2] @ ms[0::2]
    return ms[0]
