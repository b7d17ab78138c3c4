"""Acylindricity of tree actions: exact (k, n) checks, Bowditch-style
double-stabilizer counts and ball estimates of the coarse constants."""
from __future__ import annotations

import csv
import random
from dataclasses import asdict, dataclass, field
from typing import Optional

from .groupcore import FiniteGroup, GroupElement, InvalidSpecError, conjugate_into_factor
from .treeact import (
    InconclusiveError,
    PreconditionError,
    TreeAction,
    TreeVertex,
    classify,
    closure_index,
    length_function,
)

EXACT = "exact-on-trees"
ESTIMATE = "ball-estimate"


# ---------------------------------------------------------------------------
# (k, n)-acylindricity

@dataclass
class KNResult:
    ok: bool
    k: int
    n: int
    radius: int
    segments_checked: int
    max_stabilizer: int
    witness: Optional[tuple] = None          # violating segment
    witness_stabilizer: Optional[list] = None

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {
            "ok": self.ok, "k": self.k, "n": self.n, "radius": self.radius,
            "segments_checked": self.segments_checked,
            "max_stabilizer": self.max_stabilizer,
            "witness": None if self.witness is None else [str(v) for v in self.witness],
            "witness_stabilizer": None if self.witness_stabilizer is None
            else [str(g) for g in self.witness_stabilizer],
        }


def _check_edge_groups(action: TreeAction):
    spec = action.spec
    if spec.is_amalgam and not all(isinstance(F, FiniteGroup) for F in spec.factors):
        raise InvalidSpecError("(k,n) verification needs finite edge groups")


def segments(action: TreeAction, k: int, radius: int):
    """Geodesic segments of length ``k`` with both ends in the radius ball,
    each listed once (from its smaller end)."""
    ball = action.ball(radius)
    for u in sorted(ball):
        stack = [(u,)]
        while stack:
            path = stack.pop()
            if len(path) == k + 1:
                if path[-1] in ball and path[0].sort_key() <= path[-1].sort_key():
                    yield path
                continue
            prev = path[-2] if len(path) > 1 else None
            for w in action.neighbors(path[-1]):
                if w != prev and w in ball:
                    stack.append(path + (w,))


def segment_stabilizer(path, action: TreeAction) -> list[GroupElement]:
    """Pointwise stabilizer of a segment, computed inside a finite vertex stabilizer."""
    anchor = next((v for v in path if v.kind is None), path[0])
    return [g for g in action.stabilizer(anchor)
            if all(action.act(g, v) == v for v in path)]


def verify_kn_acylindrical(action: TreeAction, k: int, n: int, radius: int) -> KNResult:
    """Do all length-``k`` segments in the radius ball have at most ``n``
    elements fixing them pointwise?"""
    if k < 1 or n < 0:
        raise ValueError("need k >= 1 and n >= 0")
    _check_edge_groups(action)
    count, worst = 0, 0
    for path in segments(action, k, radius):
        count += 1
        stab = segment_stabilizer(path, action)
        worst = max(worst, len(stab))
        if len(stab) > n:
            return KNResult(False, k, n, radius, count, worst, path, stab)
    return KNResult(True, k, n, radius, count, worst)


def minimal_k(action: TreeAction, n: int, radius: int, k_max: int = 8) -> Optional[int]:
    """Least ``k <= k_max`` for which the ball verifies ``(k, n)``."""
    for k in range(1, k_max + 1):
        if verify_kn_acylindrical(action, k, n, radius).ok:
            return k
    return None


# ---------------------------------------------------------------------------
# double coarse stabilizers

def coarse_stabilizer(u: TreeVertex, sigma: int, action: TreeAction) -> list[GroupElement]:
    """All ``g`` with ``d(u, gu) < sigma``.

    ``gu`` is a vertex of the same type as ``u`` within ``sigma - 1`` of it, and
    the elements taking ``u`` to such a ``w`` form the coset
    ``w.rep * G_kind * u.rep^-1``; so the list is complete.
    """
    uinv = u.rep.inverse()
    out = []
    for w in action.ball(sigma - 1, u):
        if w.kind != u.kind:
            continue
        if u.kind is None:
            out.append(w.rep * uinv)
        else:
            F = action.spec.factors[u.kind]
            for x in range(len(F)):
                out.append(w.rep * action.spec.factor_element(u.kind, x) * uinv)
    return out


COMPLETENESS_NOTE = (
    "every g with d(u,gu) < sigma sends u to a same-type vertex w in the "
    "(sigma-1)-ball of u, and the elements doing so are exactly the coset "
    "w.rep * G_kind(u) * u.rep^-1; enumerating these cosets is exhaustive"
)


@dataclass
class BowditchReport:
    status: str                   # "pass", "fail" or "inconclusive"
    sigma: int
    k: int
    n: int
    radius: int
    bound: int
    min_distance: int
    pairs_checked: int
    max_count: int
    violations: int
    witness: Optional[tuple] = None
    histogram: dict = field(default_factory=dict)   # count -> number of pairs
    completeness: str = COMPLETENESS_NOTE

    def to_json(self) -> dict:
        d = asdict(self)
        d["witness"] = None if self.witness is None else [str(v) for v in self.witness]
        d["histogram"] = {str(a): b for a, b in sorted(self.histogram.items())}
        return d


def bowditch_bound_check(action: TreeAction, sigma: int, k: int, n: int, radius: int) -> BowditchReport:
    """Count ``{g : d(u,gu) < sigma, d(v,gv) < sigma}`` for every pair of
    ball vertices at distance ``>= k + 2 sigma + 2 sigma^2`` and compare with
    ``2 sigma n^2 + n``."""
    if sigma < 2:
        raise ValueError("sigma must be an integer > 1")
    bound = 2 * sigma * n * n + n
    dmin = k + 2 * sigma + 2 * sigma * sigma
    verts = sorted(action.ball(radius))
    cache = {u: coarse_stabilizer(u, sigma, action) for u in verts}
    pairs = violations = worst = 0
    witness = None
    hist: dict = {}
    for i, u in enumerate(verts):
        for v in verts[i + 1:]:
            if action.distance(u, v) < dmin:
                continue
            pairs += 1
            c = sum(1 for g in cache[u] if action.distance(v, action.act(g, v)) < sigma)
            hist[c] = hist.get(c, 0) + 1
            if c > worst:
                worst = c
            if c > bound:
                violations += 1
                if witness is None:
                    witness = (u, v)
    if pairs == 0:
        status = "inconclusive"
    else:
        status = "pass" if violations == 0 else "fail"
    return BowditchReport(status, sigma, k, n, radius, bound, dmin, pairs, worst,
                          violations, witness, hist)


@dataclass
class AcylProfile:
    """Rows ``(epsilon, R, N, coverage)`` verified on a ball."""

    rows: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epsilon", "R", "N", "coverage"])
            for row in self.rows:
                w.writerow(row)

    def to_json(self) -> list:
        return [dict(zip(("epsilon", "R", "N", "coverage"), r)) for r in self.rows]


def acyl_profile(action: TreeAction, k: int, n: int, radius: int, epsilons=(0, 1, 2)) -> AcylProfile:
    """For each ``epsilon`` take ``sigma = epsilon + 1`` and ``R = k + 2 sigma + 2 sigma^2``;
    ``N`` is the largest double-coarse-stabilizer observed at distance ``>= R``."""
    prof = AcylProfile()
    for eps in epsilons:
        rep = bowditch_bound_check(action, eps + 1, k, n, radius) if eps >= 1 else None
        if rep is None:
            # epsilon = 0: pointwise stabilizers of far pairs, bounded by the segment count
            res = verify_kn_acylindrical(action, k, n, radius)
            prof.rows.append((eps, k, res.max_stabilizer, f"segments={res.segments_checked} radius={radius}"))
            continue
        N = rep.max_count if rep.pairs_checked else rep.bound
        prof.rows.append((eps, rep.min_distance, N,
                          f"pairs={rep.pairs_checked} radius={radius} status={rep.status}"))
    return prof


# ---------------------------------------------------------------------------
# translation lengths and constants

def injectivity_radius(action: TreeAction, length_cutoff: int) -> int:
    """Least translation length among loxodromic elements of word length ``<= length_cutoff``."""
    if action.spec.is_finite():
        raise InconclusiveError("finite group: no loxodromic elements")
    best = None
    for g in action.spec.ball(length_cutoff):
        t = action.translation_length(g)
        if t > 0 and (best is None or t < best):
            best = t
    if best is None:
        raise InconclusiveError(f"no loxodromic element of word length <= {length_cutoff}")
    return best


@dataclass
class Constant:
    value: object
    tag: str
    radius: Optional[int] = None
    note: str = ""

    def to_json(self) -> dict:
        v = self.value
        return {"value": v if isinstance(v, (int, type(None))) else str(v),
                "tag": self.tag, "radius": self.radius, "note": self.note}


@dataclass
class SampleSpec:
    max_word_length: int = 4
    max_exponent: int = 4
    sample_size: int = 200
    seed: int = 0
    n_cutoff: int = 6
    # optional explicit pools, as words parsed by GroupSpec.parse
    loxodromic_words: Optional[list] = None
    elliptic_words: Optional[list] = None


@dataclass
class ConstantsReport:
    constants: dict
    sample: SampleSpec
    counts: dict
    partial: bool

    def __getitem__(self, key):
        return self.constants[key].value

    def to_json(self) -> dict:
        return {
            "constants": {k: c.to_json() for k, c in self.constants.items()},
            "sample": asdict(self.sample),
            "counts": self.counts,
            "partial": self.partial,
        }


def _in_closure(b: GroupElement, a: GroupElement, n_cutoff: int) -> bool:
    binv = b.inverse()
    p = a.spec.identity()
    for _ in range(n_cutoff):
        p = p * a
        c = binv * p * b
        if c == p or c == p.inverse():
            return True
    return False


def same_closure(a: GroupElement, b: GroupElement, n_cutoff: int = 6) -> bool:
    """``E(a) == E(b)`` for loxodromic ``a, b``, tested by ``b in E(a)``."""
    return _in_closure(b, a, n_cutoff)


def _draw_pairs(rng: random.Random, left: list, right: list, size: int):
    # each draw consumes the same amount of randomness, so larger samples extend smaller ones
    for _ in range(size):
        yield left[rng.randrange(len(left))], right[rng.randrange(len(right))]


def estimate_product_constants(action: TreeAction, sample: Optional[SampleSpec] = None) -> ConstantsReport:
    """Smallest constants consistent with a seeded sample of products.

    Every value is a certificate for the sample ("no violation seen"), not
    the true infimal constant.
    """
    S = sample or SampleSpec()
    R = S.max_word_length
    pool = [g for g in action.spec.ball(R) if not g.is_identity()]
    lox = [g for g in pool if classify(g, action).is_loxodromic]
    ell = [g for g in pool if not classify(g, action).is_loxodromic]
    if S.loxodromic_words is not None:
        lox = [action.spec.parse(w) for w in S.loxodromic_words]
        if any(not classify(g, action).is_loxodromic for g in lox):
            raise PreconditionError("loxodromic_words contains an elliptic element")
    if S.elliptic_words is not None:
        ell = [action.spec.parse(w) for w in S.elliptic_words]
        if any(classify(g, action).is_loxodromic or g.is_identity() for g in ell):
            raise PreconditionError("elliptic_words must be nontrivial elliptic elements")
    length = lambda g: length_function(g, action)  # noqa: E731
    E = range(1, S.max_exponent + 1)

    N0 = C0 = N1 = C1 = None
    used0 = used1 = 0
    if lox:
        N0, C0 = 1, 1
        rng = random.Random(f"{S.seed}:lox")
        for a, b in _draw_pairs(rng, lox, lox, S.sample_size):
            if same_closure(a, b, S.n_cutoff):
                continue
            used0 += 1
            pa = [a ** n for n in E]
            pb = [b ** m for m in E]
            for n in E:
                for m in E:
                    w = pa[n - 1] * pb[m - 1]
                    L = length(w)
                    lo = min(n, m)
                    N0 = max(N0, lo // L + 1 if L else lo + 1)
                    if not classify(w, action).is_loxodromic:
                        C0 = max(C0, lo + 1)
        if ell:
            N1, C1 = 1, 1
            rng = random.Random(f"{S.seed}:ell")
            for a, b in _draw_pairs(rng, lox, ell, S.sample_size):
                if _in_closure(b, a, S.n_cutoff):
                    continue
                used1 += 1
                p = action.spec.identity()
                for n in E:
                    p = p * a
                    w = p * b
                    L = length(w)
                    N1 = max(N1, n // L + 1 if L else n + 1)
                    if not classify(w, action).is_loxodromic:
                        C1 = max(C1, n + 1)

    K = None
    if ell:
        K = 0
        for g in ell:
            f, h = conjugate_into_factor(g)
            x = h.inverse() * g * h
            y = action.spec.identity()
            for _ in range(S.max_exponent):
                y = y * x
                K = max(K, length(y))

    Lc = None
    if lox:
        Lc = max(closure_index(g, action, R, S.n_cutoff) for g in lox)

    try:
        theta = injectivity_radius(action, R)
    except InconclusiveError:
        theta = None

    c = {
        "delta": Constant(0, EXACT, None, "simplicial trees are 0-hyperbolic"),
        "L": Constant(Lc, ESTIMATE, R, "max index of <root> in the truncated closure"),
        "K": Constant(K, ESTIMATE, R, "max |h^-1 g^n h| over sampled elliptics"),
        "N0": Constant(N0, ESTIMATE, R, f"{used0} loxodromic pairs with distinct closures"),
        "N1": Constant(N1, ESTIMATE, R, f"{used1} loxodromic/elliptic pairs outside E(a)"),
        "C0": Constant(C0, ESTIMATE, R, "a^n b^m loxodromic for n, m >= C0 in the sample"),
        "C1": Constant(C1, ESTIMATE, R, "a^n b loxodromic for n >= C1 in the sample"),
        "alpha": Constant(1, EXACT, None, "|g^n| = n[g] + 2 d(s0, axis)"),
        "beta": Constant(0, EXACT, None, "|g^n| = n[g] + 2 d(s0, axis)"),
        "c0": Constant(0, EXACT, None, "[g^n] - [g^m] = (n - m)[g]"),
        "theta": Constant(theta, ESTIMATE, R, "least translation length found"),
        "mu": Constant(0, EXACT, None, "elliptic sets with elliptic products fix a common vertex"),
        "nu": Constant(0, EXACT, None, "powers of a loxodromic share one axis"),
        "M_localglobal": Constant(1, EXACT, None, "a path without backtracking in a tree is geodesic"),
    }
    partial = not lox or not ell or used0 == 0 or used1 == 0
    counts = {"loxodromic_pool": len(lox), "elliptic_pool": len(ell),
              "pairs_N0": used0, "pairs_N1": used1}
    return ConstantsReport(c, S, counts, partial)


@dataclass
class PowerLengthReport:
    ok: bool
    translation: int
    lengths: list                 # |g^n| for n = 1..n_max
    violations: list

    def to_json(self) -> dict:
        return asdict(self)


def check_power_length(action: TreeAction, g: GroupElement, n_max: int) -> PowerLengthReport:
    """``|g^n| - |g^m| == (n - m)[g]`` for all ``1 <= m < n <= n_max``."""
    cls = classify(g, action)
    if not cls.is_loxodromic:
        raise PreconditionError(f"{g} is elliptic")
    tau = cls.length
    lengths = []
    h = action.spec.identity()
    for _ in range(n_max):
        h = h * g
        lengths.append(length_function(h, action))
    bad = [(n, m, lengths[n - 1] - lengths[m - 1])
           for n in range(1, n_max + 1) for m in range(1, n)
           if lengths[n - 1] - lengths[m - 1] != (n - m) * tau]
    return PowerLengthReport(not bad, tau, lengths, bad)
