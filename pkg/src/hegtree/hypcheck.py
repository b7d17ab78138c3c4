"""Checks of coarse hyperbolic geometry on finite graph balls.

Spaces are duck-typed: anything with ``distance(u, v)`` works as a metric,
so the same checkers run on an expanded :class:`FiniteGraphBall` and directly
on a :class:`~hegtree.treeact.TreeAction` (whose distance is exact and needs
no expansion).

Edges have unit length and are treated as metric segments, so points of a
geodesic side at half-integer distance from its start are edge midpoints.
Distances between such points are piecewise linear in the parameter with
breakpoints at half-integers, hence sampling half-integers is exact.
"""
from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Optional

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import shortest_path

from .groupcore import FiniteGroup, FreeFactor, GroupSpec
from .treeact import PreconditionError, TreeAction, classify

DEFAULT_TRIPLE_BUDGET = 200_000


class FiniteGraphBall:
    """An immutable connected graph with its all-pairs distance table."""

    def __init__(self, graph: nx.Graph, center: Optional[Hashable] = None):
        if graph.number_of_nodes() == 0:
            raise ValueError("empty graph")
        if not nx.is_connected(graph):
            raise ValueError("graph ball must be connected")
        self.graph = nx.freeze(graph.copy())
        self.vertices = sorted(graph.nodes, key=_vkey)
        self.index = {v: i for i, v in enumerate(self.vertices)}
        self.center = center
        self.dist = _all_pairs(graph, self.vertices)
        self._nbrs = [sorted((self.index[w] for w in graph[v])) for v in self.vertices]

    # construction ---------------------------------------------------------
    @classmethod
    def from_edges(cls, edges: Iterable[tuple], vertices: Iterable = (), center=None) -> "FiniteGraphBall":
        G = nx.Graph()
        G.add_nodes_from(vertices)
        G.add_edges_from(edges)
        return cls(G, center)

    @classmethod
    def from_tree_action(cls, action: TreeAction, radius: int) -> "FiniteGraphBall":
        ball = action.ball(radius)
        G = nx.Graph()
        G.add_nodes_from(ball)
        G.add_edges_from(action.ball_edges(radius))
        return cls(G, action.base)

    @classmethod
    def cycle(cls, n: int) -> "FiniteGraphBall":
        return cls(nx.cycle_graph(n), 0)

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v) -> bool:
        return v in self.index

    def __repr__(self) -> str:
        return f"FiniteGraphBall({len(self)} vertices, {self.graph.number_of_edges()} edges)"

    # metric ---------------------------------------------------------------
    def distance(self, u, v) -> int:
        return int(self.dist[self.index[u], self.index[v]])

    def adjacent(self, u, v) -> bool:
        return self.graph.has_edge(u, v)

    def is_tree(self) -> bool:
        return nx.is_tree(self.graph)

    # I/O ------------------------------------------------------------------
    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v"])
            for u, v in sorted((tuple(sorted((str(a), str(b)))) for a, b in self.graph.edges)):
                w.writerow([u, v])

    @classmethod
    def from_csv(cls, path) -> "FiniteGraphBall":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls.from_edges((r["u"], r["v"]) for r in rows)


def _all_pairs(graph: nx.Graph, order: list) -> np.ndarray:
    """Read-only all-pairs BFS table, in the narrowest integer type for which
    sums of three distances cannot overflow."""
    n = len(order)
    A = nx.to_scipy_sparse_array(graph, nodelist=order, format="csr")
    first = shortest_path(A, unweighted=True, directed=False, indices=[0])
    diam_bound = 2 * int(first.max())
    dtype = next(t for t in (np.int8, np.int16, np.int32) if 3 * diam_bound < np.iinfo(t).max)
    dist = np.empty((n, n), dtype=dtype)
    chunk = max(1, 2_000_000 // n)
    for lo in range(0, n, chunk):
        rows = shortest_path(A, unweighted=True, directed=False, indices=np.arange(lo, min(n, lo + chunk)))
        dist[lo:lo + len(rows)] = rows
    dist.flags.writeable = False
    return dist


def _vkey(v):
    key = getattr(v, "sort_key", None)
    return (0, key()) if callable(key) else (1, str(type(v)), str(v))


@dataclass(frozen=True)
class GraphPath:
    """A nonempty vertex sequence whose consecutive vertices are adjacent."""

    vertices: tuple
    space: object = field(repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        if not self.vertices:
            raise ValueError("a path needs at least one vertex")
        for u, v in zip(self.vertices, self.vertices[1:]):
            if self.space.distance(u, v) != 1:
                raise ValueError(f"consecutive vertices {u} and {v} are not adjacent")

    def __len__(self) -> int:
        """Length in edges."""
        return len(self.vertices) - 1


# ---------------------------------------------------------------------------
# Gromov products and thinness

def gromov_product(a, b, c, space) -> Fraction:
    """``(a, b)_c``."""
    d = space.distance
    return Fraction(d(c, a) + d(c, b) - d(a, b), 2)


@dataclass
class DeltaReport:
    delta: Fraction
    witness: Optional[tuple]           # (C, A, B, t) realising delta
    triples_examined: int
    triples_total: int
    mode: str                          # "exhaustive" or "sampled"
    geodesics: str                     # "all" or "canonical"
    seed: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "delta": str(self.delta),
            "witness": None if self.witness is None else [str(x) for x in self.witness],
            "triples_examined": self.triples_examined,
            "triples_total": self.triples_total,
            "mode": self.mode,
            "geodesics": self.geodesics,
            "seed": self.seed,
        }


def _interval_layers(D: np.ndarray, c: int, a: int) -> list[np.ndarray]:
    """Vertices on some geodesic from ``c`` to ``a``, grouped by distance from ``c``."""
    L = D[c, a]
    on = np.nonzero(D[c] + D[a] == L)[0]
    dc = D[c, on]
    return [on[dc == t] for t in range(L + 1)]


def _canonical_layers(ball: FiniteGraphBall, c: int, a: int) -> list[np.ndarray]:
    """The lexicographically least geodesic, one vertex per layer."""
    D = ball.dist
    path = [c]
    cur = c
    while cur != a:
        cur = next(w for w in ball._nbrs[cur] if D[w, a] == D[cur, a] - 1)
        path.append(cur)
    return [np.array([v]) for v in path]


def _mid_dist(D, e, f) -> int:
    # distance between midpoints of edges e=(x,x') and f=(y,y')
    if {e[0], e[1]} == {f[0], f[1]}:
        return 0
    return 1 + int(min(D[e[0], f[0]], D[e[0], f[1]], D[e[1], f[0]], D[e[1], f[1]]))


def _edges_between(ball, lo: np.ndarray, hi: np.ndarray) -> list[tuple[int, int]]:
    hs = set(hi.tolist())
    return [(x, y) for x in lo.tolist() for y in ball._nbrs[x] if y in hs]


def _thin_at(ball: FiniteGraphBall, layers_a, layers_b, insize: Fraction):
    """Max of ``d(A1, B1)`` over points at equal distance ``t <= insize``."""
    D = ball.dist
    best, best_t = 0, Fraction(0)
    tmax = int(insize * 2)
    for t2 in range(tmax + 1):
        if t2 % 2 == 0:
            t = t2 // 2
            xs, ys = layers_a[t], layers_b[t]
            val = int(D[np.ix_(xs, ys)].max())
        else:
            t = t2 // 2
            ea = _edges_between(ball, layers_a[t], layers_a[t + 1])
            eb = _edges_between(ball, layers_b[t], layers_b[t + 1])
            val = max(_mid_dist(D, e, f) for e in ea for f in eb)
        if val > best:
            best, best_t = val, Fraction(t2, 2)
    return best, best_t


def measure_delta_report(ball: FiniteGraphBall, triple_budget: int = DEFAULT_TRIPLE_BUDGET,
                         seed: int = 0, geodesics: str = "auto") -> DeltaReport:
    """Least ``delta`` for which every examined geodesic triangle is
    ``delta``-thin at each of its vertices.

    Triples ``(C, A, B)`` are scanned exhaustively when there are at most
    ``triple_budget`` of them, otherwise a seeded sample of that size is
    used.  With ``geodesics="all"`` every geodesic side is considered (via
    geodesic intervals, so no path enumeration is needed); ``"canonical"``
    fixes the lexicographically least geodesic per ordered pair.
    """
    n = len(ball)
    if geodesics == "auto":
        geodesics = "all"
    if geodesics not in ("all", "canonical"):
        raise ValueError("geodesics must be 'all', 'canonical' or 'auto'")
    D = ball.dist
    # unordered {A, B} with apex C; A == B allowed (bigons)
    total = n * n * (n + 1) // 2
    if total <= triple_budget:
        mode = "exhaustive"
        triples = ((c, a, b) for c in range(n) for a in range(n) for b in range(a, n))
        used_seed = None
    else:
        mode = "sampled"
        rng = random.Random(seed)
        triples = [(rng.randrange(n), rng.randrange(n), rng.randrange(n)) for _ in range(triple_budget)]
        used_seed = seed
    layer_cache: dict = {}

    def layers(c, a):
        key = (c, a)
        got = layer_cache.get(key)
        if got is None:
            got = _interval_layers(D, c, a) if geodesics == "all" else _canonical_layers(ball, c, a)
            if len(layer_cache) < 200_000:
                layer_cache[key] = got
        return got

    best = 0
    witness = None
    examined = 0
    for c, a, b in triples:
        examined += 1
        insize = Fraction(int(D[c, a]) + int(D[c, b]) - int(D[a, b]), 2)
        if insize * 2 <= best:
            # points at parameter t are at most 2t apart
            continue
        val, t = _thin_at(ball, layers(c, a), layers(c, b), insize)
        if val > best:
            best = val
            V = ball.vertices
            witness = (V[c], V[a], V[b], t)
    return DeltaReport(Fraction(best), witness, examined, total, mode, geodesics, used_seed)


def measure_delta(ball: FiniteGraphBall, triple_budget: int = DEFAULT_TRIPLE_BUDGET,
                  seed: int = 0) -> Fraction:
    return measure_delta_report(ball, triple_budget, seed).delta


def four_point_delta(ball: FiniteGraphBall, budget: int = DEFAULT_TRIPLE_BUDGET, seed: int = 0) -> Fraction:
    """Least ``delta`` with ``(x,y)_w >= min((x,z)_w, (y,z)_w) - delta`` on examined quadruples.

    Exhaustive over base points ``w`` when ``n**3 <= budget`` per base point
    is affordable, else a seeded sample of ``budget`` quadruples.
    """
    n = len(ball)
    D = ball.dist
    best = 0
    if n ** 4 <= budget * 8:
        D = D.astype(np.int64)
        for w in range(n):
            G = D[w][:, None] + D[w][None, :] - D        # 2 (x,y)_w
            for z in range(n):
                m = np.minimum(G[:, z][:, None], G[z, :][None, :])
                best = max(best, int((m - G).max()))
    else:
        rng = np.random.default_rng(seed)
        q = rng.integers(0, n, size=(budget, 4))
        w, x, y, z = q.T
        def d(i, j):
            return D[i, j].astype(np.int64)
        gxy = d(w, x) + d(w, y) - d(x, y)
        gxz = d(w, x) + d(w, z) - d(x, z)
        gyz = d(w, y) + d(w, z) - d(y, z)
        best = max(0, int((np.minimum(gxz, gyz) - gxy).max()))
    return Fraction(best, 2)


# ---------------------------------------------------------------------------
# quasi-geodesics

@dataclass
class QuasiGeodesicResult:
    ok: bool
    worst: tuple                 # (i, j) of the subpath with least slack
    slack: Fraction              # d(p_i, p_j) - ((j - i)/kappa - eps), negative on failure

    def __bool__(self) -> bool:
        return self.ok

    def subpath(self, path: GraphPath) -> tuple:
        i, j = self.worst
        return path.vertices[i:j + 1]


def _qg_scan(path: GraphPath, kappa, eps, max_len: Optional[int]) -> QuasiGeodesicResult:
    kappa, eps = Fraction(kappa), Fraction(eps)
    if kappa < 1 or eps < 0:
        raise ValueError("need kappa >= 1 and eps >= 0")
    V = path.vertices
    d = path.space.distance
    worst, slack = (0, 0), None
    for i in range(len(V)):
        top = len(V) if max_len is None else min(len(V), i + max_len + 1)
        for j in range(i + 1, top):
            s = d(V[i], V[j]) - (Fraction(j - i) / kappa - eps)
            if slack is None or s < slack or (s == slack and (j - i) > worst[1] - worst[0]):
                worst, slack = (i, j), s
    if slack is None:
        slack = eps
    return QuasiGeodesicResult(slack >= 0, worst, slack)


def is_quasi_geodesic(path: GraphPath, kappa=1, eps=0) -> QuasiGeodesicResult:
    """Check ``d(q-, q+) >= len(q)/kappa - eps`` for every subpath ``q``."""
    return _qg_scan(path, kappa, eps, None)


def is_local_quasi_geodesic(path: GraphPath, M: int, kappa=1, eps=0) -> QuasiGeodesicResult:
    """As :func:`is_quasi_geodesic`, restricted to subpaths of length ``<= M``."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return _qg_scan(path, kappa, eps, M)


def hausdorff_distance(A: Iterable, B: Iterable, space) -> int:
    A, B = list(A), list(B)
    if not A or not B:
        raise ValueError("hausdorff_distance needs nonempty sets")
    d = space.distance

    def directed(X, Y):
        return max(min(d(x, y) for y in Y) for x in X)
    return max(directed(A, B), directed(B, A))


# ---------------------------------------------------------------------------
# tree instances

def axis_path(g, action: TreeAction, periods: int = 2) -> GraphPath:
    """An axis window of a loxodromic ``g`` as a path in the tree."""
    return GraphPath(tuple(classify(g, action).axis_window(periods)), action)


@dataclass
class AxisBoundResult:
    ok: bool
    displacement: int            # d(s, gs)
    translation: int             # [g]
    axis_distance: int           # d(s, A_0(g))
    slack: int                   # displacement - (2 axis_distance + [g] - 6 delta)


def check_axis_lower_bound(g, s, action: TreeAction, delta: int = 0) -> AxisBoundResult:
    """``d(s, gs) >= 2 d(s, A(g)) + [g] - 6 delta``; on a tree the slack is 0.

    The axis distance is measured against an explicit axis window long enough
    to contain the projection of ``s``.
    """
    cls = classify(g, action)
    if not cls.is_loxodromic:
        raise PreconditionError(f"{g} is elliptic; the axis bound needs a loxodromic element")
    tau = cls.length
    p = cls.axis_point
    k = action.distance(s, p) // tau + 1
    h = cls.conjugator * cls.core * cls.conjugator.inverse()
    window = action.geodesic(action.act(h ** -k, p), action.act(h ** k, p))
    dA = min(action.distance(s, x) for x in window)
    disp = action.distance(s, action.act(g, s))
    slack = disp - (2 * dA + tau - 6 * delta)
    return AxisBoundResult(slack >= 0, disp, tau, dA, slack)


# ---------------------------------------------------------------------------
# Gamma_n stand-in: Cayley graph of F_n * B over {a_i^{+-1}} u (B - 1)

def gamma_model_ball(n: int, radius: int, B: Optional[FiniteGroup] = None) -> FiniteGraphBall:
    """Radius ball of the Cayley graph of ``<a_1..a_n> * B`` with every
    nontrivial element of ``B`` a generator, so ``B``-cosets are cliques."""
    B = B or FiniteGroup.cyclic(3, "b")
    spec = GroupSpec.free_product(FreeFactor(n, [f"a{i}" for i in range(1, n + 1)]), B,
                                  name=f"Gamma{n}")
    gens = [spec.gen(0, i, s) for i in range(1, n + 1) for s in (1, -1)]
    gens += [spec.factor_element(1, x) for x in range(len(B)) if x != B.identity]
    one = spec.identity()
    dist = {one: 0}
    frontier = [one]
    G = nx.Graph()
    G.add_node(one)
    for r in range(radius):
        nxt = []
        for g in frontier:
            for s in gens:
                h = g * s
                if h not in dist:
                    dist[h] = r + 1
                    nxt.append(h)
                if h in dist:
                    G.add_edge(g, h)
        frontier = nxt
    # edges among the outer sphere
    for g in frontier:
        for s in gens:
            h = g * s
            if h in dist:
                G.add_edge(g, h)
    return FiniteGraphBall(G, one)

