"""Scattering graph of the dispersion relation and the global scattering matrix.

Vertices are the crossings of A_0, placed at the minimal gap of A_mu; edges
are arcs of the sorted eigenvalue branches between vertices (or ports at the
interval ends).  Two independent compositions are provided:

* :func:`assemble` sweeps forward in t, one amplitude per branch;
* :func:`solve_graph_system` writes one linear equation per vertex output
  and per cut link of a spanning-tree gauge and solves it, which also works
  for graphs that are not time ordered.
"""

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import resolve
from .errors import ConfigError, StructuralError, UnsupportedConfigurationError
from .landau_zener import lz_matrix
from .oracle import endpoint_basis
from .phases import (
    ArcData,
    CycleSkeleton,
    EdgePhase,
    VertexData,
    coupling_phase,
    crossing_overlaps,
    cycle_data,
    dynamical_action,
    leg_phase,
    transport_phase,
    wrap,
)
from .spectral import DEFAULT_WINDOW, avoided_params, find_crossings

# gaps below this (relative to the spectral scale) are treated as exact crossings
EXACT_GAP = 1e-9
EXACT_EPS = 1e-6
SWAP = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class Vertex:
    index: int
    crossing: object
    params: object
    data: VertexData

    @property
    def pair(self):
        return self.crossing.branch_pair

    @property
    def t_c(self):
        return self.data.t_c


@dataclass(frozen=True)
class Edge:
    """Arc of sorted branch ``branch``; ends are ``('port', k)`` or ``('vertex', i)``."""

    index: int
    branch: int
    t_start: float
    t_end: float
    tail: tuple
    head: tuple
    tail_leg: str | None
    head_leg: str | None
    arc: ArcData
    phase: EdgePhase

    def factor(self, h):
        return self.phase.factor(h)


@dataclass
class ScatteringGraph:
    family: object
    mu: np.ndarray
    interval: tuple
    vertices: list
    edges: list
    ports_in: list
    ports_out: list
    skeletons: list
    cycles: list
    calibration: object = None
    n: int = 0

    @property
    def bookkeeping_edges(self):
        """Arcs plus one closure slot per bounded cycle."""
        return len(self.edges) + len(self.cycles)

    def cycles_at(self, h):
        for c in self.cycles:
            c.holonomy = c.holonomy_at(h)
        return self.cycles

    def with_calibration(self, calibration):
        """Copy with edge and cycle phases rebuilt for another sign convention."""
        cal = resolve(calibration)
        verts = {v.index: v for v in self.vertices}
        edges = [replace(e, phase=_edge_phase(e.arc, e, verts, cal)) for e in self.edges]
        cycles = [cycle_data(self.family, self.mu, s, cal) for s in self.skeletons]
        return replace(self, edges=edges, cycles=cycles, calibration=cal)


@dataclass
class GlobalScattering:
    s_pred: np.ndarray
    per_path_amplitudes: dict = field(default_factory=dict)
    h: float = 0.0


def _edge_phase(arc, e, verts, cal):
    counter, halves, berry = 0.0, 0, arc.transport
    for end, leg in ((e.tail, e.tail_leg), (e.head, e.head_leg)):
        if end[0] == "vertex":
            c, m, b = leg_phase(verts[end[1]].data, leg, cal)
            counter += c
            halves += m
            berry += b
    return EdgePhase(arc.action, wrap(berry), halves, counter, arc.transport)


def build_graph(f, mu, interval=None, window=DEFAULT_WINDOW, crossings=None, calibration=None, h=None):
    """Scattering graph of ``f`` at parameter ``mu``.

    Edge phases are h-independent; pass ``h`` to also fill cycle holonomies.
    ``crossings`` may be supplied to skip the mu = 0 crossing search when
    many graphs of one family are built.
    """
    cal = resolve(calibration)
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    a, b = interval if interval is not None else f.domain
    if crossings is None:
        crossings = find_crossings(f, (a, b))
    crossings = sorted((c for c in crossings if a < c.t_star < b), key=lambda c: c.t_star)
    for c1, c2 in zip(crossings, crossings[1:]):
        if c2.t_star - c1.t_star < 2 * window:
            raise UnsupportedConfigurationError(
                f"crossings at {c1.t_star:.6g} and {c2.t_star:.6g} closer than twice the window"
            )
    mat = f.at(mu)
    w_a, _ = endpoint_basis(mat, a)
    endpoint_basis(mat, b)
    n = f.n

    vertices = []
    for i, c in enumerate(crossings):
        ap = avoided_params(f, c, mu, window)
        j = c.branch_pair[0]
        scale = max(1.0, abs(c.lambda_star))
        if ap.gap <= EXACT_GAP * scale:
            k_in, k_out = crossing_overlaps(mat, j, ap.t_min, EXACT_EPS)
            data = VertexData(i, c.branch_pair, ap.t_min, 0.0, k_in, k_out, True, EXACT_EPS)
        else:
            k = coupling_phase(mat, j, ap.t_min)
            data = VertexData(i, c.branch_pair, ap.t_min, ap.gamma0, k, k, False)
        vertices.append(Vertex(i, c, ap, data))
    verts = {v.index: v for v in vertices}

    edges = []
    for k in range(n):
        stops = [(a, ("port", k), None, 0.0)]
        for v in vertices:
            if k in v.pair:
                role = "lower" if k == v.pair[0] else "upper"
                stops.append((v.t_c, ("vertex", v.index), role, v.data.eps))
        stops.append((b, ("port", k), None, 0.0))
        for (t0, tail, r0, e0), (t1, head, r1, e1) in zip(stops, stops[1:]):
            action = dynamical_action(f, mu, k, t0, t1)
            transport = transport_phase(mat, k, t0 + e0, t1 - e1)
            arc = ArcData(k, t0, t1, action, transport)
            proto = Edge(
                len(edges), k, t0, t1, tail, head,
                None if r0 is None else r0 + "_out",
                None if r1 is None else r1 + "_in",
                arc, None,
            )
            edges.append(replace(proto, phase=_edge_phase(arc, proto, verts, cal)))

    skeletons = _skeletons(vertices, edges, n)
    cycles = [cycle_data(f, mu, s, cal) for s in skeletons]
    g = ScatteringGraph(f, mu, (a, b), vertices, edges, list(range(n)), list(range(n)), skeletons, cycles, cal, n)
    if h is not None:
        g.cycles_at(h)
    return g


def _skeletons(vertices, edges, n):
    out = []
    for j in range(n - 1):
        corners = [v for v in vertices if v.pair == (j, j + 1)]
        for v0, v1 in zip(corners, corners[1:]):
            ta, tb = v0.t_c, v1.t_c
            sides = []
            for v in vertices:
                if ta < v.t_c < tb:
                    if v.pair == (j + 1, j + 2):
                        sides.append((v.data, 1))
                    elif v.pair == (j - 1, j):
                        sides.append((v.data, -1))
            top = tuple(e.arc for e in edges if e.branch == j + 1 and ta <= e.t_start and e.t_end <= tb)
            bottom = tuple(e.arc for e in edges if e.branch == j and ta <= e.t_start and e.t_end <= tb)
            skel = CycleSkeleton((j, j + 1), v0.data, v1.data, tuple(sides), top, bottom)
            skel.validate()
            out.append(skel)
    return out


def vertex_matrix(v: Vertex, h):
    """Vertex map (lower in, upper in) -> (lower out, upper out)."""
    return SWAP @ lz_matrix(v.data.gamma0, h).t_matrix


def assemble(g: ScatteringGraph, h, calibration=None) -> GlobalScattering:
    """Feed-forward sweep in t producing the predicted channel matrix.

    Column j of ``s_pred`` is the outgoing amplitude vector for unit input in
    ascending channel j at t = a, matching the oracle's channel framing.
    """
    if calibration is not None:
        g = g.with_calibration(calibration)
    elif g.calibration is None:
        raise ConfigError("graph carries no calibration constants")
    n = g.n
    amp = np.eye(n, dtype=complex)
    incoming = {}
    for e in g.edges:
        if e.head[0] == "vertex":
            incoming[(e.head[1], e.branch)] = e
    paths = {}
    for v in sorted(g.vertices, key=lambda v: v.t_c):
        j = v.pair[0]
        for k in (j, j + 1):
            e = incoming[(v.index, k)]
            amp[k] *= e.factor(h)
            paths[e.index] = amp[k].copy()
        amp[[j, j + 1]] = vertex_matrix(v, h) @ amp[[j, j + 1]]
    for e in g.edges:
        if e.head[0] == "port":
            amp[e.branch] *= e.factor(h)
            paths[e.index] = amp[e.branch].copy()
    return GlobalScattering(amp, paths, h)


# ---------------------------------------------------------------------------
# linear-system composition


@dataclass(frozen=True)
class Link:
    """Directed link; ends are ``('in', k)``, ``('out', k)`` or ``(node, slot)``."""

    name: str
    tail: tuple
    head: tuple
    factor: complex = 1.0


@dataclass
class Network:
    """Nodes with 2x2 maps (in slots 0, 1 -> out slots 0, 1) joined by links."""

    matrices: list
    links: list
    n_in: int
    n_out: int
    names: list | None = None


@dataclass
class GraphSystem:
    matrix: np.ndarray
    unknowns: list
    n_vertex_equations: int
    n_holonomy_equations: int
    n_inputs: int
    cuts: list
    holonomies: dict
    potentials: dict
    input_rows: list
    output_cols: list

    @property
    def n_unknowns(self):
        return len(self.unknowns)

    @property
    def n_equations(self):
        """Vertex and holonomy relations, excluding input bindings."""
        return self.n_vertex_equations + self.n_holonomy_equations


def graph_network(g: ScatteringGraph, h):
    mats = [vertex_matrix(v, h) for v in g.vertices]
    links = []
    for e in g.edges:
        tail = ("in", e.branch) if e.tail[0] == "port" else (e.tail[1], 0 if e.tail_leg == "lower_out" else 1)
        head = ("out", e.branch) if e.head[0] == "port" else (e.head[1], 0 if e.head_leg == "lower_in" else 1)
        links.append(Link(f"e{e.index}", tail, head, complex(e.factor(h))))
    return Network(mats, links, g.n, g.n, [f"V{v.index}" for v in g.vertices])


def _node_key(end):
    if end[0] in ("in", "out"):
        return end
    return ("v", end[0])


def build_system(net: Network, cuts=None) -> GraphSystem:
    """Linear system of a network in a spanning-tree gauge.

    Node potentials make every tree link carry factor 1; each remaining (cut)
    link gets two unknowns related by the holonomy of its fundamental cycle.
    Unknowns: one per link plus one per cut.  Equations: two per node, one
    per cut, plus one binding per input port.
    """
    cuts = set(cuts or ())
    names = [l.name for l in net.links]
    if len(set(names)) != len(names):
        raise StructuralError("duplicate link names")
    unknown_cuts = cuts - set(names)
    if unknown_cuts:
        raise StructuralError(f"unknown cut links {sorted(unknown_cuts)}")
    tails, heads = {}, {}
    for l in net.links:
        if l.tail[0] == "out" or l.head[0] == "in":
            raise StructuralError(f"link {l.name} runs against the port direction")
        if l.tail in tails or l.head in heads:
            raise StructuralError(f"slot used twice by link {l.name}")
        tails[l.tail] = l
        heads[l.head] = l
    for i in range(len(net.matrices)):
        for s in (0, 1):
            if (i, s) not in tails or (i, s) not in heads:
                raise StructuralError(f"node {i} slot {s} is not connected")
    for k in range(net.n_in):
        if ("in", k) not in tails:
            raise StructuralError(f"input port {k} is not connected")
    for k in range(net.n_out):
        if ("out", k) not in heads:
            raise StructuralError(f"output port {k} is not connected")

    adj = {}
    for l in net.links:
        if l.name in cuts:
            continue
        adj.setdefault(_node_key(l.tail), []).append(l)
        adj.setdefault(_node_key(l.head), []).append(l)
    order = [("in", k) for k in range(net.n_in)] + [("v", i) for i in range(len(net.matrices))]
    order += [("out", k) for k in range(net.n_out)]
    pot, tree = {}, set()
    for root in order:
        if root in pot:
            continue
        pot[root] = 1.0 + 0j
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for l in adj.get(u, []):
                a, b = _node_key(l.tail), _node_key(l.head)
                if a == u and b not in pot:
                    pot[b] = l.factor * pot[a]
                elif b == u and a not in pot:
                    pot[a] = pot[b] / l.factor
                else:
                    continue
                tree.add(l.name)
                queue.append(a if b == u else b)
    cut_links = [l for l in net.links if l.name not in tree]

    unknowns, tail_idx, head_idx = [], {}, {}
    for l in net.links:
        if l.name in tree:
            tail_idx[l.name] = head_idx[l.name] = len(unknowns)
            unknowns.append(l.name)
        else:
            tail_idx[l.name] = len(unknowns)
            head_idx[l.name] = len(unknowns) + 1
            unknowns += [l.name + "+", l.name + "-"]
    m = len(unknowns)
    rows = []
    for i, s_mat in enumerate(net.matrices):
        s_mat = np.asarray(s_mat, dtype=complex)
        for s in (0, 1):
            row = np.zeros(m, dtype=complex)
            row[tail_idx[tails[(i, s)].name]] += 1.0
            for r in (0, 1):
                row[head_idx[heads[(i, r)].name]] -= s_mat[s, r]
            rows.append(row)
    hol = {}
    for l in cut_links:
        hval = l.factor * pot[_node_key(l.tail)] / pot[_node_key(l.head)]
        hol[l.name] = hval
        row = np.zeros(m, dtype=complex)
        row[head_idx[l.name]] = 1.0
        row[tail_idx[l.name]] = -hval
        rows.append(row)
    input_rows = []
    for k in range(net.n_in):
        row = np.zeros(m, dtype=complex)
        row[tail_idx[tails[("in", k)].name]] = 1.0
        input_rows.append(len(rows))
        rows.append(row)
    matrix = np.array(rows)
    if matrix.shape[0] != m:
        raise StructuralError(f"{matrix.shape[0]} equations for {m} unknowns")
    output_cols = [head_idx[heads[("out", k)].name] for k in range(net.n_out)]
    return GraphSystem(
        matrix, unknowns, 2 * len(net.matrices), len(cut_links), net.n_in,
        [l.name for l in cut_links], hol, pot, input_rows, output_cols,
    )


def solve_system(sys_: GraphSystem, x):
    """Outputs for input amplitudes ``x`` (vector, or matrix with one column per input set)."""
    x = np.asarray(x, dtype=complex)
    single = x.ndim == 1
    xs = x[:, None] if single else x
    if xs.shape[0] != sys_.n_inputs:
        raise ConfigError(f"expected {sys_.n_inputs} input amplitudes, got {xs.shape[0]}")
    if np.linalg.cond(sys_.matrix) > 1e12:
        raise StructuralError("singular scattering system")
    rhs = np.zeros((sys_.n_unknowns, xs.shape[1]), dtype=complex)
    for k, r in enumerate(sys_.input_rows):
        rhs[r] = xs[k] / sys_.potentials[("in", k)]
    u = np.linalg.solve(sys_.matrix, rhs)
    n_out = len(sys_.output_cols)
    y = np.array([u[c] * sys_.potentials[("out", k)] for k, c in zip(range(n_out), sys_.output_cols)])
    return y[:, 0] if single else y


def solve_graph_system(g, h=None, input_amplitudes=None, cuts=None):
    """Outputs of a graph (or :class:`Network`) solved as one linear system.

    With ``input_amplitudes=None`` the identity is used, so the result is
    the full scattering matrix in the same framing as :func:`assemble`.
    """
    net = g if isinstance(g, Network) else graph_network(g, h)
    sys_ = build_system(net, cuts)
    x = np.eye(net.n_in, dtype=complex) if input_amplitudes is None else input_amplitudes
    return solve_system(sys_, x)


def sweep_network(net: Network, x):
    """Direct forward evaluation of an acyclic network (topological order)."""
    x = np.asarray(x, dtype=complex)
    val = {}
    for l in net.links:
        if l.tail[0] == "in":
            val[l.name] = l.factor * x[l.tail[1]]
    by_tail = {l.tail: l for l in net.links}
    by_head = {l.head: l for l in net.links}
    done = set()
    while len(done) < len(net.matrices):
        ready = [
            i for i in range(len(net.matrices))
            if i not in done and all(by_head[(i, s)].name in val for s in (0, 1))
        ]
        if not ready:
            raise StructuralError("network is not acyclic")
        for i in ready:
            vin = np.array([val[by_head[(i, s)].name] for s in (0, 1)])
            vout = np.asarray(net.matrices[i]) @ vin
            for s in (0, 1):
                l = by_tail[(i, s)]
                val[l.name] = l.factor * vout[s]
            done.add(i)
    return np.array([val[by_head[("out", k)].name] for k in range(net.n_out)])


def four_vertex_network(rng=None, matrices=None, factors=None):
    """Four-vertex, two-cycle topology with three inputs and outputs.

    S1: (x3, x2) -> (z, w)      S2: (w, p) -> (v, y3)
    S3: (v, u) -> (y1, y2)      S4: (z, x1) -> (u, p)

    Cutting links ``w`` and ``v`` leaves a spanning tree.  Vertex matrices
    default to Haar-random unitaries and link factors to random phases.
    """
    from scipy.stats import unitary_group

    rng = np.random.default_rng(rng)
    if matrices is None:
        matrices = [unitary_group.rvs(2, random_state=rng) for _ in range(4)]
    spec = [
        ("x1", ("in", 0), (3, 1)),
        ("x2", ("in", 1), (0, 1)),
        ("x3", ("in", 2), (0, 0)),
        ("z", (0, 0), (3, 0)),
        ("w", (0, 1), (1, 0)),
        ("u", (3, 0), (2, 1)),
        ("p", (3, 1), (1, 1)),
        ("v", (1, 0), (2, 0)),
        ("y1", (2, 0), ("out", 0)),
        ("y2", (2, 1), ("out", 1)),
        ("y3", (1, 1), ("out", 2)),
    ]
    if factors is None:
        factors = np.exp(1j * rng.uniform(0, 2 * math.pi, len(spec)))
    links = [Link(name, t, hd, complex(fa)) for (name, t, hd), fa in zip(spec, factors)]
    return Network(list(matrices), links, 3, 3, ["S1", "S2", "S3", "S4"])
