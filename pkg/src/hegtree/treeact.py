"""Actions of the supported groups on their Bass-Serre trees.

Two tree models are used.

``bipartite``
    Amalgams ``A *_C B`` and free products of exactly two finite groups. The
    vertices are the cosets ``gA`` and ``gB``; edges are the cosets ``gC``.
``star``
    Every other free product. The graph of groups is a star whose centre
    carries the trivial group: there is one edge to a vertex ``G_i`` for each
    finite factor and one loop for each free generator. Type-``None`` vertices
    are the group elements themselves, so a free group acts on its Cayley tree.

All edges have length one and the action never inverts an edge.
"""
from __future__ import annotations

import csv
import threading
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Sequence, Union

from .groupcore import (
    AMALGAM,
    DomainError,
    FiniteGroup,
    FreeFactor,
    GroupElement,
    GroupSpec,
    SpecMismatchError,
    cyclic_reduce,
)

BIPARTITE = "bipartite"
STAR = "star"


class PreconditionError(DomainError):
    """An input violates an operation's stated precondition."""


class InconclusiveError(Exception):
    """A bounded search found no evidence either way."""


@dataclass(frozen=True)
class TreeVertex:
    """The coset ``rep * G_kind``; ``kind=None`` is a trivial-stabilizer vertex."""

    rep: GroupElement
    kind: Optional[int]

    def sort_key(self):
        return (-1 if self.kind is None else self.kind,) + self.rep.sort_key()

    def __lt__(self, other: "TreeVertex") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        if self.kind is None:
            return str(self.rep)
        return f"({self.rep})G{self.kind}"


@dataclass
class Classification:
    kind: str
    length: int
    conjugator: GroupElement
    core: GroupElement
    fixed_vertex: Optional[TreeVertex] = None
    axis_point: Optional[TreeVertex] = None
    action: Optional["TreeAction"] = field(default=None, repr=False)

    @property
    def is_elliptic(self) -> bool:
        return self.kind == "elliptic"

    @property
    def is_loxodromic(self) -> bool:
        return self.kind == "loxodromic"

    def axis_window(self, periods: int = 2) -> list[TreeVertex]:
        """Axis vertices from the axis point through ``periods`` translates."""
        if not self.is_loxodromic:
            raise PreconditionError("only loxodromic elements have an axis")
        g = self.conjugator * self.core * self.conjugator.inverse()
        end = self.action.act(g ** periods, self.axis_point)
        return self.action.geodesic(self.axis_point, end)


class TreeAction:
    """A group spec acting on its Bass-Serre tree, with a lazily grown ball.

    Ball expansion mutates a cache guarded by a lock; queries on vertices are
    pure.
    """

    def __init__(self, spec: GroupSpec):
        self.spec = spec
        finite = [isinstance(F, FiniteGroup) for F in spec.factors]
        if spec.mode == AMALGAM or (len(spec.factors) == 2 and all(finite)):
            self.model = BIPARTITE
            self.base = TreeVertex(spec.identity(), 0)
        else:
            self.model = STAR
            self.base = TreeVertex(spec.identity(), None)
        self._layers: list[list[TreeVertex]] = [[self.base]]
        self._seen = {self.base}
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"TreeAction({self.spec!r}, model={self.model})"

    # -- vertices -----------------------------------------------------------
    def vertex(self, g: GroupElement, kind: Optional[int]) -> TreeVertex:
        """Canonical vertex for the coset ``g * G_kind``."""
        if g.spec is not self.spec:
            raise SpecMismatchError(f"{g.spec!r} vs {self.spec!r}")
        if kind is None:
            if self.model == BIPARTITE:
                raise DomainError("bipartite trees have no type-None vertices")
            return TreeVertex(g, None)
        if not isinstance(self.spec.factors[kind], FiniteGroup):
            raise DomainError(f"factor {kind} has no vertex in the tree")
        syl = g.syllables
        if syl and syl[-1][0] == kind:
            syl = syl[:-1]
        if syl is g.syllables and g.tail == self.spec._tail_identity():
            return TreeVertex(g, kind)
        return TreeVertex(GroupElement(self.spec, syl, self.spec._tail_identity()), kind)

    def factor_vertex(self, f: int) -> TreeVertex:
        """The vertex fixed by finite factor ``f``."""
        return self.vertex(self.spec.identity(), f)

    def act(self, g: GroupElement, v: TreeVertex) -> TreeVertex:
        return self.vertex(g * v.rep, v.kind)

    def stabilizer(self, v: TreeVertex) -> list[GroupElement]:
        """The (finite) stabilizer of ``v`` as a sorted list."""
        if v.kind is None:
            return [self.spec.identity()]
        F = self.spec.factors[v.kind]
        h, hinv = v.rep, v.rep.inverse()
        return sorted(h * self.spec.factor_element(v.kind, x) * hinv for x in range(len(F)))

    def neighbors(self, v: TreeVertex) -> list[TreeVertex]:
        spec = self.spec
        out = []
        if self.model == BIPARTITE:
            f = v.kind
            other = 1 - f
            if spec.mode == AMALGAM:
                reps = spec.coset_reps[f]
            else:
                reps = range(len(spec.factors[f]))
            for a in reps:
                out.append(self.vertex(v.rep * spec.factor_element(f, a), other))
        elif v.kind is None:
            for f, F in enumerate(spec.factors):
                if isinstance(F, FiniteGroup):
                    out.append(self.vertex(v.rep, f))
                else:
                    for i in range(1, F.rank + 1):
                        out.append(TreeVertex(v.rep * spec.gen(f, i, 1), None))
                        out.append(TreeVertex(v.rep * spec.gen(f, i, -1), None))
        else:
            F = spec.factors[v.kind]
            for a in range(len(F)):
                out.append(TreeVertex(v.rep * spec.factor_element(v.kind, a), None))
        return out

    # -- metric -------------------------------------------------------------
    def depth(self, v: TreeVertex) -> int:
        """``d(base, v)`` read off the normal form of the representative."""
        syl = v.rep.syllables
        if self.model == BIPARTITE:
            if not syl:
                return 0 if v.kind == self.base.kind else 1
            return len(syl) + (0 if syl[0][0] == self.base.kind else 1)
        d = 0
        for f, p in syl:
            d += len(p) if isinstance(self.spec.factors[f], FreeFactor) else 2
        return d + (0 if v.kind is None else 1)

    def _through_local_base(self, w: TreeVertex, kind: Optional[int]) -> bool:
        # does the geodesic base -> w pass through the vertex (1, kind)?
        if w.rep.syllables:
            return w.rep.syllables[0][0] == kind
        return w.kind == kind

    def distance(self, u: TreeVertex, v: TreeVertex) -> int:
        w = self.act(u.rep.inverse(), v)
        d = self.depth(w)
        if u.kind == self.base.kind:
            return d
        return d - 1 if self._through_local_base(w, u.kind) else d + 1

    def path_from_base(self, v: TreeVertex) -> list[TreeVertex]:
        spec = self.spec
        tid = spec._tail_identity()
        syl = v.rep.syllables
        verts = [self.base]

        def push(x: TreeVertex):
            if x != verts[-1]:
                verts.append(x)

        if self.model == BIPARTITE:
            for j in range(len(syl)):
                push(TreeVertex(GroupElement(spec, syl[:j], tid), syl[j][0]))
            push(v)
            return verts
        for j, (f, p) in enumerate(syl):
            if isinstance(spec.factors[f], FreeFactor):
                for i in range(1, len(p) + 1):
                    push(TreeVertex(GroupElement(spec, syl[:j] + ((f, p[:i]),), None), None))
            else:
                push(TreeVertex(GroupElement(spec, syl[:j], None), f))
                push(TreeVertex(GroupElement(spec, syl[: j + 1], None), None))
        push(v)
        return verts

    def geodesic(self, u: TreeVertex, v: TreeVertex) -> list[TreeVertex]:
        """Vertices of the unique geodesic from ``u`` to ``v``."""
        pu, pv = self.path_from_base(u), self.path_from_base(v)
        c = 0
        while c < min(len(pu), len(pv)) and pu[c] == pv[c]:
            c += 1
        return pu[c - 1:][::-1] + pv[c:]

    def distance_to_set(self, v: TreeVertex, S: Iterable[TreeVertex]) -> int:
        return min(self.distance(v, s) for s in S)

    # -- balls --------------------------------------------------------------
    def ball(self, radius: int, center: Optional[TreeVertex] = None) -> dict[TreeVertex, int]:
        """Vertices within ``radius`` of ``center`` mapped to their distance."""
        if center is None or center == self.base:
            with self._lock:
                while len(self._layers) <= radius:
                    nxt = []
                    for v in self._layers[-1]:
                        for w in self.neighbors(v):
                            if w not in self._seen:
                                self._seen.add(w)
                                nxt.append(w)
                    nxt.sort()
                    self._layers.append(nxt)
                return {v: r for r in range(radius + 1) for v in self._layers[r]}
        dist = {center: 0}
        queue = deque([center])
        while queue:
            v = queue.popleft()
            if dist[v] == radius:
                continue
            for w in self.neighbors(v):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        return dist

    def ball_edges(self, radius: int) -> list[tuple[TreeVertex, TreeVertex]]:
        """(parent, child) pairs of the radius ball, parent nearer the base."""
        ball = self.ball(radius)
        edges = []
        for v, r in ball.items():
            if r == 0:
                continue
            for w in self.neighbors(v):
                if ball.get(w) == r - 1:
                    edges.append((w, v))
                    break
        return edges

    def export_ball_csv(self, radius: int, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["parent", "child", "representative"])
            for parent, child in self.ball_edges(radius):
                writer.writerow([str(parent), str(child), str(child.rep)])

    # -- elements -----------------------------------------------------------
    def classify(self, g: GroupElement) -> Classification:
        return classify(g, self)

    def translation_length(self, g: GroupElement) -> int:
        return translation_length(g, self)

    def length(self, g: GroupElement) -> int:
        return length_function(g, self)

    def is_elliptic(self, g: GroupElement) -> bool:
        return classify(g, self).is_elliptic


# ---------------------------------------------------------------------------
# classification and lengths

def act(g: GroupElement, v: TreeVertex, action: TreeAction) -> TreeVertex:
    return action.act(g, v)


def classify(g: GroupElement, action: TreeAction) -> Classification:
    """Elliptic iff conjugate into a finite vertex group; loxodromic otherwise."""
    core, conj = cyclic_reduce(g)
    spec = action.spec
    syl = core.syllables
    if not syl or (len(syl) == 1 and isinstance(spec.factors[syl[0][0]], FiniteGroup)):
        if not syl:
            fixed = action.act(conj, action.base)
        else:
            fixed = action.act(conj, action.factor_vertex(syl[0][0]))
        return Classification("elliptic", 0, conj, core, fixed_vertex=fixed, action=action)
    # the base vertex lies on the axis of a cyclically reduced core
    length = action.depth(action.act(core, action.base))
    return Classification("loxodromic", length, conj, core,
                          axis_point=action.act(conj, action.base), action=action)


def translation_length(g: GroupElement, action: TreeAction) -> int:
    return classify(g, action).length


def length_function(g: GroupElement, action: TreeAction) -> int:
    """``|g|_{s0} = d(s0, g s0)`` for the base vertex ``s0``."""
    return action.depth(action.act(g, action.base))


def stable_norm(g: GroupElement, action: TreeAction, n_max: int) -> tuple[Fraction, list[Fraction]]:
    """Exact stable norm together with the ratios ``d(s0, g^n s0)/n``."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    exact = Fraction(translation_length(g, action))
    seq = []
    h = action.spec.identity()
    for n in range(1, n_max + 1):
        h = h * g
        seq.append(Fraction(length_function(h, action), n))
    return exact, seq


def epsilon_axis(g: GroupElement, eps: int, action: TreeAction, radius: int,
                 center: Optional[TreeVertex] = None) -> set[TreeVertex]:
    """Ball vertices ``x`` with ``d(x, gx) <= [g] + eps``."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    bound = translation_length(g, action) + eps
    return {x for x in action.ball(radius, center) if action.distance(x, action.act(g, x)) <= bound}


def fixed_subtree(g: GroupElement, action: TreeAction, radius: int) -> set[TreeVertex]:
    return epsilon_axis(g, 0, action, radius) if action.is_elliptic(g) else set()


# ---------------------------------------------------------------------------
# fixed points

@dataclass
class FixedPointResult:
    vertex: Optional[TreeVertex] = None
    witness: Optional[tuple] = None

    @property
    def ok(self) -> bool:
        return self.vertex is not None


def _project_to_fix(g: GroupElement, p: TreeVertex, action: TreeAction) -> TreeVertex:
    # nearest point of Fix(g) to p is the midpoint of [p, g p]
    q = action.act(g, p)
    if q == p:
        return p
    geo = action.geodesic(p, q)
    return geo[(len(geo) - 1) // 2]


def serre_fixed_point(X: Sequence[GroupElement], action: TreeAction) -> FixedPointResult:
    """A vertex fixed by all of ``X``, or a tuple whose product is loxodromic.

    ``X`` must be closed under inversion. When every element of ``X`` and of
    ``X*X`` is elliptic, the fixed subtrees pairwise intersect, so projecting
    the base vertex successively onto each of them lands in the common
    intersection.
    """
    elems = list(X)
    as_set = set(elems)
    if any(x.inverse() not in as_set for x in elems):
        raise PreconditionError("X must be symmetrized (closed under inversion)")
    elems.sort()
    for x in elems:
        if not action.is_elliptic(x):
            return FixedPointResult(witness=(x,))
    for i, x in enumerate(elems):
        for y in elems[i:]:
            if not action.is_elliptic(x * y):
                return FixedPointResult(witness=(x, y))
    p = action.base
    for x in elems:
        p = _project_to_fix(x, p, action)
    assert all(action.act(x, p) == p for x in elems)
    return FixedPointResult(vertex=p)


def tree_center(vertices: Iterable[TreeVertex], action: TreeAction):
    """Centre of a finite subtree: a vertex, or an edge as a sorted pair."""
    S = set(vertices)
    if not S:
        raise PreconditionError("empty vertex set")
    adj = {v: [w for w in action.neighbors(v) if w in S] for v in S}
    start = next(iter(S))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if seen != S:
        raise PreconditionError("vertex set does not span a connected subtree")
    while len(S) > 2:
        leaves = {v for v in S if sum(w in S for w in adj[v]) <= 1}
        S -= leaves
    if len(S) == 1:
        return next(iter(S))
    return tuple(sorted(S))


@dataclass
class ConjugatorResult:
    factor: Optional[int] = None
    conjugator: Optional[GroupElement] = None
    witness: Optional[tuple] = None

    @property
    def ok(self) -> bool:
        return self.witness is None


def common_conjugator_into_factor(gens: Sequence[GroupElement], action: TreeAction) -> ConjugatorResult:
    """A ``g`` with ``g^-1 <gens> g`` inside one vertex group, or a loxodromic witness."""
    X = set(gens) | {x.inverse() for x in gens}
    res = serre_fixed_point(sorted(X), action)
    if not res.ok:
        return ConjugatorResult(witness=res.witness)
    v = res.vertex
    if v.kind is None:
        factor = action.spec.finite_factor_ids()[0] if action.spec.finite_factor_ids() else 0
        return ConjugatorResult(factor=factor, conjugator=v.rep)
    return ConjugatorResult(factor=v.kind, conjugator=v.rep)


# ---------------------------------------------------------------------------
# roots and elementary closures

def root_count(a: GroupElement, m: int, action: TreeAction) -> tuple[int, list[GroupElement]]:
    """All ``b`` with ``b^m = a``, for loxodromic ``a``.

    Any such ``b`` has the axis and direction of ``a`` and ``[b] = [a]/m``, so
    after conjugating ``a`` to its cyclically reduced core (whose axis passes
    through the base vertex) ``b`` maps the base to the vertex ``[a]/m`` steps
    along the axis; the candidates are that vertex's representative times the
    finite stabilizer of the base.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    cls = classify(a, action)
    if not cls.is_loxodromic:
        raise PreconditionError(f"root_count needs a loxodromic element, got {a}")
    if cls.length % m:
        return 0, []
    core, conj = cls.core, cls.conjugator
    geo = action.geodesic(action.base, action.act(core, action.base))
    target = geo[cls.length // m]
    if target.kind != action.base.kind:
        return 0, []
    cinv = conj.inverse()
    roots = []
    for s in action.stabilizer(action.base):
        b = target.rep * s
        if b ** m == core:
            roots.append(conj * b * cinv)
    roots.sort()
    return len(roots), roots


def in_cyclic_subgroup(h: GroupElement, z: GroupElement, action: TreeAction) -> bool:
    """Is ``h`` a power of the loxodromic element ``z``?"""
    if h.is_identity():
        return True
    th = translation_length(h, action)
    tz = translation_length(z, action)
    if th == 0 or th % tz:
        return False
    k = th // tz
    return h == z ** k or h == z ** (-k)


def elementary_closure(g: GroupElement, action: TreeAction, radius: int,
                       n_cutoff: int = 6) -> list[GroupElement]:
    """Elements ``f`` of word length ``<= radius`` with ``f^-1 g^n f = g^{+-n}``
    for some ``1 <= n <= n_cutoff``; a ball-truncated view of ``E(g)``."""
    if not classify(g, action).is_loxodromic:
        raise PreconditionError("elementary_closure needs a loxodromic element")
    powers = []
    h = action.spec.identity()
    for _ in range(n_cutoff):
        h = h * g
        powers.append((h, h.inverse()))
    out = []
    for f in action.spec.ball(radius):
        finv = f.inverse()
        for p, pinv in powers:
            c = finv * p * f
            if c == p or c == pinv:
                out.append(f)
                break
    return sorted(out)


def closure_index(g: GroupElement, action: TreeAction, radius: int, n_cutoff: int = 6) -> int:
    """Cosets of ``<z>`` (``z`` a primitive root of ``g``) met by the truncated closure."""
    from .groupcore import primitive_root

    z, _ = primitive_root(g)
    reps: list[GroupElement] = []
    for f in elementary_closure(g, action, radius, n_cutoff):
        if not any(in_cyclic_subgroup(r.inverse() * f, z, action) for r in reps):
            reps.append(f)
    return len(reps)
