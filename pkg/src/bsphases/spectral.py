"""Eigenvalue crossings of A_0(t) and avoided-crossing parameters.

Sorted eigenvalue branches kink at a crossing, so crossings are detected by
following the smooth (diabatic) continuations: consecutive grid points are
paired by maximal eigenvector overlap, and a pair of adjacent sorted indices
that swap partners marks a crossing inside that grid cell.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, TransversalityError, UnsupportedConfigurationError, WindowError

POINTS_PER_UNIT = 2048
BISECT_TOL = 1e-12
TRANSVERSAL_TOL = 1e-6
DEGENERATE_TOL = 1e-13
TRIPLE_TOL = 1e-8
DEFAULT_WINDOW = 0.25
WINDOW_SCAN = 513


@dataclass(frozen=True)
class Crossing:
    t_star: float
    branch_pair: tuple
    lambda_star: float
    slope_minus: float  # smooth branch entering as the lower one
    slope_plus: float  # smooth branch entering as the upper one

    @property
    def slope_gap(self):
        return abs(self.slope_plus - self.slope_minus)


@dataclass(frozen=True)
class AvoidedParams:
    crossing: Crossing
    mu: tuple
    gap: float
    gamma0: float
    t_min: float


def _zero_mu(f):
    return np.zeros(f.d)


def _pairing(v_left, v_right):
    """perm[k] = sorted index on the right continuing sorted index k on the left."""
    ov = np.abs(v_right.conj().T @ v_left)
    perm = np.argmax(ov, axis=0)
    if len(set(perm.tolist())) != len(perm):
        return None
    return perm


def _adjacent_swaps(perm):
    """Decompose a permutation into disjoint adjacent transpositions, or None."""
    swaps = []
    k = 0
    n = len(perm)
    while k < n:
        if perm[k] == k:
            k += 1
        elif k + 1 < n and perm[k] == k + 1 and perm[k + 1] == k:
            swaps.append(k)
            k += 2
        else:
            return None
    return swaps


def _scale(w):
    return max(1.0, float(np.max(np.abs(w))))


def _locate(mat, j, tl, tr, vl):
    """Bisect the crossing of sorted branches (j, j+1) inside [tl, tr].

    The left end ``vl`` holds eigenvectors on the pre-crossing side; a midpoint
    belongs to that side when its sorted pair (j, j+1) still continues the
    left pair without a swap.
    """
    while tr - tl > BISECT_TOL:
        tm = 0.5 * (tl + tr)
        w, v = np.linalg.eigh(mat(tm))
        if w[j + 1] - w[j] <= DEGENERATE_TOL * _scale(w):
            return tm
        ov = np.abs(v[:, [j, j + 1]].conj().T @ vl[:, [j, j + 1]])
        if ov[0, 0] * ov[1, 1] >= ov[0, 1] * ov[1, 0]:
            tl, vl = tm, v
        else:
            tr = tm
    return 0.5 * (tl + tr)


def _slopes(mat, t, j):
    """Slopes of the two smooth branches through a crossing at ``t``.

    Degenerate perturbation theory: eigenvalues of Q^* A'(t) Q with Q the
    eigenvectors of the crossing pair.  Returned ascending.
    """
    _, v = np.linalg.eigh(mat(t))
    q = v[:, [j, j + 1]]
    red = q.conj().T @ mat.derivative(t) @ q
    return np.linalg.eigvalsh(0.5 * (red + red.conj().T))


def find_crossings(f, interval=None, points_per_unit=POINTS_PER_UNIT):
    """All transversal crossings of adjacent eigenbranches of A_0 on the interval.

    Every crossing is bisected to 1e-12 and carries slopes computed by
    degenerate perturbation theory.  ``slope_minus`` belongs to the smooth
    branch that enters as the lower of the pair (so it exceeds
    ``slope_plus``).
    """
    a, b = interval if interval is not None else f.domain
    if not f.domain[0] <= a < b <= f.domain[1]:
        raise DomainError(f"interval [{a}, {b}] not inside domain {f.domain}")
    mat = f.at(_zero_mu(f))
    m = int(np.ceil(points_per_unit * (b - a))) + 1
    ts = np.linspace(a, b, m)
    w, v = np.linalg.eigh(mat(ts))
    gaps = np.diff(w, axis=1)
    scales = np.maximum(1.0, np.max(np.abs(w), axis=1))
    degenerate = gaps <= DEGENERATE_TOL * scales[:, None]
    # the scan never starts or ends on a degeneracy
    if degenerate[0].any() or degenerate[-1].any():
        raise UnsupportedConfigurationError("degenerate spectrum at an interval endpoint")

    found = []
    k = 0
    while k < m - 1:
        # skip grid points lying exactly on a degeneracy
        r = k + 1
        while r < m - 1 and degenerate[r].any():
            r += 1
        if r > k + 1:
            for j in np.flatnonzero(degenerate[k + 1 : r].any(axis=0)):
                ti = k + 1 + int(np.argmax(degenerate[k + 1 : r, j]))
                found.append((float(ts[ti]), int(j)))
            k = r
            continue
        perm = _pairing(v[k], v[r])
        if perm is None or not np.array_equal(perm, np.arange(f.n)):
            swaps = _adjacent_swaps(perm) if perm is not None else None
            if swaps is None:
                raise UnsupportedConfigurationError(
                    f"non-pairwise branch exchange in [{ts[k]:.6g}, {ts[r]:.6g}]"
                )
            for j in swaps:
                found.append((_locate(mat, j, ts[k], ts[r], v[k]), j))
        k = r

    out = []
    for t_star, j in sorted(found):
        wv = np.linalg.eigvalsh(mat(t_star))
        scale = _scale(wv)
        lam = 0.5 * (wv[j] + wv[j + 1])
        for o in (j - 1, j + 2):
            if 0 <= o < f.n and abs(wv[o] - lam) <= TRIPLE_TOL * scale:
                raise UnsupportedConfigurationError(
                    f"triple degeneracy at t = {t_star:.12g} (branches {j - 1}..{j + 2})"
                )
        lo, hi = _slopes(mat, t_star, j)
        if hi - lo < TRANSVERSAL_TOL * max(1.0, abs(lo), abs(hi)):
            raise TransversalityError(f"tangential crossing at t = {t_star:.12g}")
        out.append(Crossing(float(t_star), (j, j + 1), float(lam), float(hi), float(lo)))
    return out


def pair_gap(mat, j, t):
    """lambda_{j+1}(t) - lambda_j(t) for scalar or array ``t``."""
    w = np.linalg.eigvalsh(mat(t))
    return w[..., j + 1] - w[..., j]


def avoided_params(f, c: Crossing, mu, window=DEFAULT_WINDOW):
    """Minimal gap of the avoided crossing near ``c`` and the parameter gamma_0.

    The gap is minimised over ``|t - t_star| <= window`` by a dense scan
    followed by bounded Brent refinement.  A minimum on the window boundary
    means the crossing is not localised and raises :class:`WindowError`.
    """
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    if f.d == 0:
        mu_arr = np.zeros(0)
    j = c.branch_pair[0]
    if not np.any(mu_arr):
        return AvoidedParams(c, tuple(mu_arr.tolist()), 0.0, 0.0, c.t_star)
    mat = f.at(mu_arr)
    lo = max(c.t_star - window, f.domain[0])
    hi = min(c.t_star + window, f.domain[1])
    ts = np.linspace(lo, hi, WINDOW_SCAN)
    g = pair_gap(mat, j, ts)
    k = int(np.argmin(g))
    if k == 0 or k == WINDOW_SCAN - 1:
        raise WindowError(
            f"gap minimum for crossing at t = {c.t_star:.6g} sits on the window edge"
        )
    res = minimize_scalar(
        lambda t: pair_gap(mat, j, t),
        bounds=(ts[k - 1], ts[k + 1]),
        method="bounded",
        options={"xatol": BISECT_TOL},
    )
    t_min, gap = float(res.x), float(res.fun)
    if g[k] < gap:
        t_min, gap = float(ts[k]), float(g[k])
    gap = max(gap, 0.0)
    gamma0 = gap * gap / (4.0 * c.slope_gap)
    return AvoidedParams(c, tuple(mu_arr.tolist()), gap, gamma0, t_min)
