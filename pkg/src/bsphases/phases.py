"""Edge and cycle phases: actions, Berry transport, Maslov data, holonomies.

Functions taking ``(f, mu, ...)`` accept anything with ``f.at(mu)`` returning
a vectorised matrix function ``m(t)`` (and ``m.derivative(t)`` where a
derivative is needed), so non-polynomial test families can be plugged in.

Vertex legs.  At a vertex joining sorted branches j (lower) and j+1 (upper)
the four legs carry the factors

    lower in   1
    lower out  exp(i psi)
    upper in   kappa_in exp(-i psi)
    upper out  -conj(kappa_out)

with psi = -sigma gamma (ln gamma - 1) / h + m pi / 2 and kappa the phase of
the coupling <v_l, A' v_u> at the vertex.  Together with the local matrix
they reproduce the Landau-Zener connection in the parallel-transported
adiabatic basis; the counter-term cancels the delta ln h phase of the local
matrix so predictions are h-stable.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .calibration import resolve
from .errors import ConvergenceError, DegeneracyError, StructuralError
from .numeric import phase_fix

TWO_PI = 2.0 * math.pi
ACTION_TOL = 1e-11
BERRY_TOL = 1e-8
BERRY_MAX_ANGLE = 1e-3
BERRY_MAX_POINTS = 4_000_000
DEGENERACY_TOL = 1e-12


def wrap(phi):
    """Reduce to [0, 2 pi)."""
    r = math.fmod(phi, TWO_PI)
    if r < 0:
        r += TWO_PI
    return 0.0 if r >= TWO_PI else r


def counter_term(gamma):
    """gamma (ln gamma - 1), with the limit value 0 at gamma = 0."""
    return 0.0 if gamma <= 0.0 else gamma * (math.log(gamma) - 1.0)


def _check_simple(mat, branch, t1, t2, n=257):
    ts = np.linspace(t1, t2, n)[1:-1]
    if ts.size == 0:
        return
    w = np.linalg.eigvalsh(mat(ts))
    scale = np.maximum(1.0, np.max(np.abs(w), axis=1))
    for o in (branch - 1, branch + 1):
        if 0 <= o < w.shape[1]:
            if np.any(np.abs(w[:, o] - w[:, branch]) <= DEGENERACY_TOL * scale):
                raise DegeneracyError(f"branch {branch} degenerate inside [{t1}, {t2}]")


def _branch_value(mat, branch):
    return lambda t: float(np.linalg.eigvalsh(mat(t))[branch])


def dynamical_action(f, mu, branch, t1, t2, tol=ACTION_TOL, points=None):
    """Integral of the sorted eigenvalue ``lambda_branch`` from t1 to t2.

    Adaptive Gauss-Kronrod quadrature.  The branch must stay simple inside the
    interval; degeneracies at the endpoints (exact crossings) are fine.
    """
    if t1 == t2:
        return 0.0
    mat = f.at(mu)
    lo, hi = min(t1, t2), max(t1, t2)
    _check_simple(mat, branch, lo, hi)
    val, err = quad(
        _branch_value(mat, branch), lo, hi, epsabs=tol, epsrel=1e-13, limit=500, points=points
    )
    if err > 10 * tol:
        raise ConvergenceError(f"action quadrature error {err:.2e} above tolerance", err)
    return val if t2 > t1 else -val


def action_gauss(f, mu, branch, t1, t2, panels, order=2):
    """Composite Gauss-Legendre rule (``order`` nodes per panel)."""
    mat = f.at(mu)
    x, wq = leggauss(order)
    edges = np.linspace(t1, t2, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    ts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    lam = np.linalg.eigvalsh(mat(ts))[:, branch].reshape(panels, order)
    return float(np.sum(half[:, None] * wq[None, :] * lam))


def gap_action(f, mu, j, t1, t2, points=None):
    """Integral of lambda_{j+1} - lambda_j over [t1, t2] (the enclosed area)."""
    mat = f.at(mu)

    def gap(t):
        w = np.linalg.eigvalsh(mat(t))
        return float(w[j + 1] - w[j])

    val, err = quad(gap, t1, t2, epsabs=ACTION_TOL, epsrel=1e-13, limit=500, points=points)
    if err > 10 * ACTION_TOL:
        raise ConvergenceError(f"area quadrature error {err:.2e} above tolerance", err)
    return val


def reference_vector(mat, branch, t):
    """Phase-fixed eigenvector of the sorted branch at ``t``."""
    _, v = np.linalg.eigh(mat(float(t)))
    return phase_fix(v[:, branch])


def _vectors(mat, branch, ts):
    _, v = np.linalg.eigh(mat(ts))
    return v[..., branch]


def _refine(mat, branch, ts, vs):
    """Bisect grid cells until neighbouring eigenvectors differ by < 1e-3 rad."""
    while True:
        ov = np.abs(np.sum(np.conj(vs[1:]) * vs[:-1], axis=1))
        ang = np.arccos(np.clip(ov, 0.0, 1.0))
        bad = np.flatnonzero(ang > BERRY_MAX_ANGLE)
        if bad.size == 0:
            return ts, vs
        if ts.size + bad.size > BERRY_MAX_POINTS:
            raise ConvergenceError("Berry transport grid exceeded its point budget", float(ang.max()))
        mids = 0.5 * (ts[bad] + ts[bad + 1])
        mv = _vectors(mat, branch, mids)
        ts = np.insert(ts, bad + 1, mids)
        vs = np.insert(vs, bad + 1, mv, axis=0)


def _overlap_phase(vs, start, end):
    vs = vs.copy()
    vs[0] = start
    vs[-1] = end
    ov = np.sum(np.conj(vs[1:]) * vs[:-1], axis=1)
    return float(np.sum(np.angle(ov)))


def transport_phase(mat, branch, t1, t2):
    """Parallel-transport phase from the reference vector at t1 to the one at t2.

    The transported vector ends as exp(i theta) times the phase-fixed
    eigenvector at t2; theta is returned unwrapped.  Discrete transport:
    theta accumulates arg <v_{k+1}, v_k> on an adaptive grid, and the grid
    is halved until successive values agree to 1e-8.
    """
    if t1 == t2:
        return 0.0
    start = reference_vector(mat, branch, t1)
    end = reference_vector(mat, branch, t2)
    n0 = max(65, int(64 * abs(t2 - t1)) + 1)
    ts = np.linspace(t1, t2, n0)
    vs = _vectors(mat, branch, ts)
    ts, vs = _refine(mat, branch, ts, vs)
    prev = _overlap_phase(vs, start, end)
    while True:
        mids = 0.5 * (ts[1:] + ts[:-1])
        mv = _vectors(mat, branch, mids)
        fine_t = np.empty(2 * ts.size - 1)
        fine_t[0::2], fine_t[1::2] = ts, mids
        fine_v = np.empty((fine_t.size, vs.shape[1]), dtype=complex)
        fine_v[0::2], fine_v[1::2] = vs, mv
        cur = _overlap_phase(fine_v, start, end)
        diff = math.remainder(cur - prev, TWO_PI)
        if abs(diff) <= BERRY_TOL:
            return cur + diff / 3.0
        if fine_t.size > BERRY_MAX_POINTS:
            raise ConvergenceError("Berry phase did not converge under step halving", abs(diff))
        ts, vs, prev = fine_t, fine_v, cur


def berry_phase(f, mu, branch, t1, t2):
    """Berry phase of the sorted branch along [t1, t2], in [0, 2 pi).

    The phase compares the parallel-transported endpoint vector with the
    phase-fixed eigenvector field (largest component real positive).
    """
    mat = f.at(mu)
    lo, hi = min(t1, t2), max(t1, t2)
    _check_simple(mat, branch, lo, hi)
    return wrap(transport_phase(mat, branch, t1, t2))


def coupling_phase(mat, j, t):
    """Unit phase of <v_j, A'(t) v_{j+1}> in the phase-fixed gauge at ``t``."""
    _, v = np.linalg.eigh(mat(float(t)))
    v = phase_fix(v)
    c = np.vdot(v[:, j], mat.derivative(float(t)) @ v[:, j + 1])
    if abs(c) == 0.0:
        raise DegeneracyError(f"vanishing coupling at t = {t}")
    return complex(c / abs(c))


def crossing_overlaps(mat, j, t, eps):
    """kappa_in, kappa_out for an exact crossing at ``t``.

    Built from phase-fixed eigenvectors at t -+ eps so that
    ``-conj(kappa_out) = -<v_u(t+eps), v_l(t-eps)>`` and
    ``kappa_in = -<v_l(t+eps), v_u(t-eps)>``.
    """
    _, vm = np.linalg.eigh(mat(t - eps))
    _, vp = np.linalg.eigh(mat(t + eps))
    vm, vp = phase_fix(vm), phase_fix(vp)
    out = np.vdot(vp[:, j + 1], vm[:, j])
    inn = -np.vdot(vp[:, j], vm[:, j + 1])
    return complex(inn / abs(inn)), complex(np.conj(out) / abs(out))


@dataclass(frozen=True)
class VertexData:
    """Vertex quantities needed by edge and cycle phases (all at fixed mu)."""

    index: int
    pair: tuple
    t_c: float  # location of the minimal gap (t_star for exact crossings)
    gamma0: float
    kappa_in: complex
    kappa_out: complex
    exact: bool
    eps: float = 0.0  # offset of the reference points when exact


@dataclass(frozen=True)
class EdgePhase:
    """Phase data of one branch arc.

    The factor applied to an amplitude traversing the arc is
    ``exp(i ((action + counter) / h + berry + maslov_halves pi / 4))``.
    ``berry`` holds the transport phase plus the coupling phases of the
    vertex legs; ``maslov_halves`` counts +-1/2 Maslov units (pi / 4 each),
    where the sign flip of an upper outgoing leg counts as 4.
    """

    action: float
    berry: float
    maslov_halves: int
    counter: float = 0.0
    transport: float = 0.0

    def factor(self, h):
        return np.exp(1j * ((self.action + self.counter) / h + self.berry + self.maslov_halves * math.pi / 4))


def leg_phase(v: VertexData, leg: str, calibration=None):
    """(counter, maslov_halves, berry) contribution of a vertex leg.

    ``leg`` is one of lower_in, lower_out, upper_in, upper_out.
    """
    cal = resolve(calibration)
    c = cal.counter_sign * counter_term(v.gamma0)
    halves = int(round(2 * cal.leg_maslov_half))
    if leg == "lower_in":
        return 0.0, 0, 0.0
    if leg == "lower_out":
        return -c, halves, 0.0
    if leg == "upper_in":
        return c, -halves, float(np.angle(v.kappa_in))
    if leg == "upper_out":
        return 0.0, 4, -float(np.angle(v.kappa_out))
    raise ValueError(f"unknown leg {leg!r}")


@dataclass(frozen=True)
class ArcData:
    branch: int
    t_start: float
    t_end: float
    action: float
    transport: float


@dataclass(frozen=True)
class CycleSkeleton:
    """A bounded face between sorted branches j and j+1.

    ``opening`` and ``closing`` are the corner vertices of pair (j, j+1);
    ``sides`` lists vertices of the neighbouring pairs met in between, tagged
    +1 (on the upper boundary, pair (j+1, j+2)) or -1 (lower boundary, pair
    (j-1, j)).  ``top`` and ``bottom`` are the boundary arcs in time order.
    A skeleton without corners stands for a smooth closed curve.
    """

    pair: tuple
    opening: VertexData | None
    closing: VertexData | None
    sides: tuple = ()
    top: tuple = ()
    bottom: tuple = ()
    orientation: int = 1

    def reversed(self):
        return CycleSkeleton(
            self.pair, self.opening, self.closing, self.sides, self.top, self.bottom, -self.orientation
        )

    def validate(self):
        if (self.opening is None) != (self.closing is None):
            raise StructuralError("a cycle needs both corner vertices or neither")
        if self.orientation not in (1, -1):
            raise StructuralError("orientation must be +-1")
        if self.opening is None:
            return
        j = self.pair[0]
        ta, tb = self.opening.t_c, self.closing.t_c
        if not ta < tb:
            raise StructuralError("corner vertices out of order")
        for v in (self.opening, self.closing):
            if tuple(v.pair) != tuple(self.pair):
                raise StructuralError("corner vertex does not join the bounding branches")
        for v, side in self.sides:
            want = (j + 1, j + 2) if side > 0 else (j - 1, j)
            if tuple(v.pair) != want or not ta < v.t_c < tb:
                raise StructuralError(f"vertex {v.index} is not on the cycle boundary")
        for arcs, branch in ((self.top, j + 1), (self.bottom, j)):
            if not arcs:
                raise StructuralError("empty cycle boundary")
            if any(arc.branch != branch for arc in arcs):
                raise StructuralError("boundary arc on the wrong branch")
            ends = [arcs[0].t_start] + [a.t_end for a in arcs]
            starts = [a.t_start for a in arcs[1:]]
            if abs(ends[0] - ta) > 1e-6 or abs(ends[-1] - tb) > 1e-6:
                raise StructuralError("boundary does not close at the corner vertices")
            if any(abs(s - e) > 1e-6 for s, e in zip(starts, ends[1:-1])):
                raise StructuralError("boundary arcs do not chain")


def regularized_s0(f, skel: CycleSkeleton, mu, calibration=None):
    """Regularised action: enclosed area plus sigma-weighted gamma (ln gamma - 1) terms.

    Corner vertices enter with +sigma, side vertices with -sigma.  The area
    is integrated directly as the branch gap between the corner vertices,
    independently of the arc actions stored in the skeleton.
    """
    skel.validate()
    if skel.opening is None:
        raise StructuralError("regularized_s0 needs a cycle with vertices")
    cal = resolve(calibration)
    j = skel.pair[0]
    kinks = [v.t_c for v, _ in skel.sides] or None
    area = gap_action(f, mu, j, skel.opening.t_c, skel.closing.t_c, points=kinks)
    corners = counter_term(skel.opening.gamma0) + counter_term(skel.closing.gamma0)
    sides = sum(counter_term(v.gamma0) for v, _ in skel.sides)
    return skel.orientation * (area + cal.counter_sign * (corners - sides))


def maslov_index(skel: CycleSkeleton, calibration=None):
    """m(c) = 2 - m per corner vertex + m per side vertex (m = leg half)."""
    skel.validate()
    cal = resolve(calibration)
    m = cal.leg_maslov_half
    n_corner = 0 if skel.opening is None else 2
    return skel.orientation * (2.0 - m * n_corner + m * len(skel.sides))


def s1_nabla(skel: CycleSkeleton):
    """Transport part of S_1 at mu: Berry phases and vertex coupling phases."""
    skel.validate()
    phi = sum(a.transport for a in skel.top) - sum(a.transport for a in skel.bottom)
    if skel.opening is not None:
        phi += float(np.angle(skel.closing.kappa_in)) - float(np.angle(skel.opening.kappa_out))
    for v, side in skel.sides:
        if side < 0:
            phi -= math.pi + float(np.angle(v.kappa_in)) - float(np.angle(v.kappa_out))
    return wrap(skel.orientation * phi)


@dataclass
class Cycle:
    vertices: tuple
    edges: tuple
    s0: float
    s1_nabla: float
    maslov: float
    holonomy: complex | None = None
    skeleton: CycleSkeleton | None = field(default=None, repr=False)

    def phase(self, h):
        return self.s0 / h + self.s1_nabla + self.maslov * math.pi / 2

    def holonomy_at(self, h):
        """exp(i (S0 / h + S1 + m pi / 2)); unit modulus by construction."""
        return complex(np.exp(1j * self.phase(h)))


def cycle_data(f, mu, skel: CycleSkeleton, calibration=None):
    """Cycle with h-independent phase data; holonomy left unset."""
    s0 = regularized_s0(f, skel, mu, calibration)
    vertices = ()
    if skel.opening is not None:
        vertices = tuple(sorted([skel.opening, skel.closing] + [v for v, _ in skel.sides], key=lambda v: v.t_c))
    return Cycle(
        vertices=vertices,
        edges=tuple(skel.top) + tuple(skel.bottom),
        s0=s0,
        s1_nabla=s1_nabla(skel),
        maslov=maslov_index(skel, calibration),
        skeleton=skel,
    )


def cycle_holonomy(f, mu, h, skel: CycleSkeleton, calibration=None):
    """Full :class:`Cycle` including the holonomy at ``h``."""
    c = cycle_data(f, mu, skel, calibration)
    c.holonomy = c.holonomy_at(h)
    return c
