"""Exact normal-form arithmetic for free products and finite amalgams.

Two classes of groups are supported:

* free products ``G_1 * ... * G_k`` whose factors are finite groups (given by
  a multiplication table) or free groups of finite rank;
* amalgamated products ``A *_C B`` of two finite groups over a finite group
  ``C`` embedded by injective homomorphisms ``alpha: C -> A``, ``omega: C -> B``.

Elements are immutable :class:`GroupElement` values holding a unique normal
form, so ``==`` decides the word problem.

Free product syllables are ``(factor_id, payload)`` where ``payload`` is an
element index for a finite factor and a freely reduced tuple of signed
generator indices (``+i`` for ``x_i``, ``-i`` for its inverse) for a free
factor. Amalgam syllables are ``(0 | 1, rep)`` where ``rep`` is the least
index in its left coset ``rep * C``; the element carries a tail in ``C``.
"""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Union

FREE_PRODUCT = "free_product"
AMALGAM = "amalgam"


class GroupError(Exception):
    pass


class InvalidSpecError(GroupError):
    """A group specification failed validation."""


class SpecMismatchError(GroupError):
    """Operands belong to different group specifications."""


class DomainError(GroupError):
    """An operation was called outside its domain."""


@dataclass(frozen=True)
class Generator:
    index: int
    sign: int = 1

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"generator index must be >= 1, got {self.index}")
        if self.sign not in (1, -1):
            raise ValueError(f"generator sign must be +1 or -1, got {self.sign}")

    @property
    def letter(self) -> int:
        return self.sign * self.index

    def inverse(self) -> "Generator":
        return Generator(self.index, -self.sign)


# ---------------------------------------------------------------------------
# free words

def reduce_word(letters: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for x in letters:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def concat_reduced(u: Sequence[int], v: Sequence[int]) -> tuple[int, ...]:
    """Product of two freely reduced words."""
    k = 0
    n = min(len(u), len(v))
    while k < n and u[len(u) - 1 - k] == -v[k]:
        k += 1
    return tuple(u[: len(u) - k]) + tuple(v[k:])


def invert_word(u: Sequence[int]) -> tuple[int, ...]:
    return tuple(-x for x in reversed(u))


def smallest_period(seq: Sequence) -> int:
    """Least p dividing len(seq) with seq periodic of period p."""
    n = len(seq)
    for p in range(1, n + 1):
        if n % p == 0 and all(seq[i] == seq[i % p] for i in range(n)):
            return p
    return n


# ---------------------------------------------------------------------------
# factors

class FiniteGroup:
    """A finite group given by a full multiplication table on indices."""

    kind = "finite"

    def __init__(self, labels: Sequence[str], table: Sequence[Sequence[int]],
                 identity: int = 0, name: Optional[str] = None):
        self.labels = tuple(str(x) for x in labels)
        self.table = tuple(tuple(int(v) for v in row) for row in table)
        self.identity = int(identity)
        self.name = name
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        self._validate()
        e = self.identity
        self.inverse = tuple(
            next(j for j in range(len(self)) if self.table[i][j] == e)
            for i in range(len(self))
        )

    def _validate(self):
        n = len(self.labels)
        problems = []
        if n == 0:
            raise InvalidSpecError("finite group must have at least one element")
        if len(self._index) != n:
            problems.append("duplicate element labels")
        if len(self.table) != n or any(len(r) != n for r in self.table):
            raise InvalidSpecError(f"multiplication table must be {n}x{n}")
        if any(not 0 <= v < n for r in self.table for v in r):
            raise InvalidSpecError("multiplication table has entries outside the group")
        e = self.identity
        if not 0 <= e < n:
            raise InvalidSpecError("identity is not a group element")
        bad_id = [self.labels[i] for i in range(n)
                  if self.table[e][i] != i or self.table[i][e] != i]
        if bad_id:
            problems.append(f"identity law fails for {bad_id[:5]}")
        no_inv = [self.labels[i] for i in range(n)
                  if not any(self.table[i][j] == e and self.table[j][i] == e
                             for j in range(n))]
        if no_inv:
            problems.append(f"missing inverses for {no_inv[:5]}")
        t = self.table
        for a in range(n):
            ta = t[a]
            for b in range(n):
                tab = t[ta[b]]
                tb = t[b]
                for c in range(n):
                    if tab[c] != ta[tb[c]]:
                        problems.append(
                            f"associativity fails at ({self.labels[a]}, "
                            f"{self.labels[b]}, {self.labels[c]})")
                        break
                else:
                    continue
                break
            else:
                continue
            break
        if problems:
            raise InvalidSpecError("not a group: " + "; ".join(problems))

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return f"FiniteGroup({self.name or len(self)})"

    def mul(self, i: int, j: int) -> int:
        return self.table[i][j]

    def index(self, label) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise InvalidSpecError(f"unknown element label {label!r}") from None

    def order(self, i: int) -> int:
        k, x = 1, i
        while x != self.identity:
            x = self.table[x][i]
            k += 1
        return k

    @classmethod
    def cyclic(cls, n: int, gen: str = "g", name: Optional[str] = None) -> "FiniteGroup":
        labels = ["1"] + [gen if k == 1 else f"{gen}{k}" for k in range(1, n)]
        table = [[(i + j) % n for j in range(n)] for i in range(n)]
        return cls(labels, table, 0, name=name or f"Z{n}")

    @classmethod
    def symmetric3(cls, name: str = "S3") -> "FiniteGroup":
        perms = list(itertools.permutations(range(3)))
        perms.sort(key=lambda p: (p != (0, 1, 2), p))
        names = {(0, 1, 2): "1", (1, 0, 2): "r", (0, 2, 1): "q", (2, 1, 0): "p",
                 (1, 2, 0): "c", (2, 0, 1): "c2"}
        idx = {p: i for i, p in enumerate(perms)}
        # (p*q)(x) = p(q(x))
        table = [[idx[tuple(p[q[x]] for x in range(3))] for q in perms] for p in perms]
        return cls([names[p] for p in perms], table, 0, name=name)

    @classmethod
    def from_json(cls, data: dict) -> "FiniteGroup":
        labels = [str(x) for x in data["elements"]]
        pos = {lab: i for i, lab in enumerate(labels)}
        try:
            table = [[pos[str(v)] for v in row] for row in data["table"]]
            identity = pos[str(data["identity"])]
        except KeyError as exc:
            raise InvalidSpecError(f"table refers to unknown element {exc}") from None
        return cls(labels, table, identity, name=data.get("name"))

    def to_json(self) -> dict:
        out = {"kind": "finite", "elements": list(self.labels),
               "table": [[self.labels[v] for v in row] for row in self.table],
               "identity": self.labels[self.identity]}
        if self.name:
            out["name"] = self.name
        return out


class FreeFactor:
    """A free group of finite rank, with optional generator names."""

    kind = "free"

    def __init__(self, rank: int, names: Optional[Sequence[str]] = None,
                 name: Optional[str] = None):
        if rank < 1:
            raise InvalidSpecError(f"free factor rank must be >= 1, got {rank}")
        self.rank = int(rank)
        self.names = tuple(names) if names else tuple(f"x{i}" for i in range(1, rank + 1))
        if len(self.names) != rank:
            raise InvalidSpecError("free factor needs one name per generator")
        self.name = name

    def __repr__(self) -> str:
        return f"FreeFactor({self.rank})"

    def to_json(self) -> dict:
        out = {"kind": "free", "rank": self.rank, "names": list(self.names)}
        if self.name:
            out["name"] = self.name
        return out


Factor = Union[FiniteGroup, FreeFactor]


def _factor_from_json(data: dict) -> Factor:
    kind = data.get("kind")
    if kind == "finite":
        return FiniteGroup.from_json(data)
    if kind == "free":
        return FreeFactor(int(data["rank"]), data.get("names"), name=data.get("name"))
    raise InvalidSpecError(f"unknown factor kind {kind!r}")


# ---------------------------------------------------------------------------
# group specifications

class GroupSpec:
    """A free product of factors, or an amalgam of two finite groups.

    Build with :meth:`free_product` or :meth:`amalgam`; both validate eagerly.
    """

    def __init__(self, mode: str, factors: Sequence[Factor],
                 edge_group: Optional[FiniteGroup] = None,
                 alpha: Optional[Sequence[int]] = None,
                 omega: Optional[Sequence[int]] = None,
                 name: Optional[str] = None):
        self.mode = mode
        self.factors = tuple(factors)
        self.edge_group = edge_group
        self.name = name
        if not self.factors:
            raise InvalidSpecError("a group spec needs at least one factor")
        if all(isinstance(f, FiniteGroup) and len(f) == 1 for f in self.factors):
            raise InvalidSpecError("at least one factor must be nontrivial")
        if mode == FREE_PRODUCT:
            self.embeddings = None
        elif mode == AMALGAM:
            if len(self.factors) != 2 or not all(isinstance(f, FiniteGroup) for f in self.factors):
                raise InvalidSpecError("an amalgam needs exactly two finite factors")
            if edge_group is None or alpha is None or omega is None:
                raise InvalidSpecError("an amalgam needs C, alpha and omega")
            self.embeddings = (tuple(alpha), tuple(omega))
            for f, emb in zip(self.factors, self.embeddings):
                self._check_embedding(edge_group, f, emb)
            self._build_transversals()
        else:
            raise InvalidSpecError(f"unknown mode {mode!r}")
        self._names = self._name_table()

    # -- construction -----------------------------------------------------
    @classmethod
    def free_product(cls, *factors: Factor, name: Optional[str] = None) -> "GroupSpec":
        return cls(FREE_PRODUCT, factors, name=name)

    @classmethod
    def amalgam(cls, A: FiniteGroup, B: FiniteGroup, C: FiniteGroup,
                alpha: dict, omega: dict, name: Optional[str] = None) -> "GroupSpec":
        """``alpha`` and ``omega`` map labels of C to labels of A and B."""
        try:
            a = [A.index(alpha[c]) for c in C.labels]
            o = [B.index(omega[c]) for c in C.labels]
        except KeyError as exc:
            raise InvalidSpecError(f"embedding undefined on {exc}") from None
        return cls(AMALGAM, (A, B), C, a, o, name=name)

    @classmethod
    def free_group(cls, rank: int, names: Optional[Sequence[str]] = None) -> "GroupSpec":
        return cls.free_product(FreeFactor(rank, names), name=f"F{rank}")

    @classmethod
    def from_json(cls, data: dict) -> "GroupSpec":
        mode = data.get("mode")
        factors = [_factor_from_json(f) for f in data.get("factors", [])]
        if mode == FREE_PRODUCT:
            return cls.free_product(*factors, name=data.get("name"))
        if mode == AMALGAM:
            am = data.get("amalgam") or {}
            if len(factors) != 2:
                raise InvalidSpecError("an amalgam needs exactly two factors")
            C = FiniteGroup.from_json(am["C"])
            return cls.amalgam(factors[0], factors[1], C, am["alpha"], am["omega"],
                               name=data.get("name"))
        raise InvalidSpecError(f"unknown mode {mode!r}")

    @classmethod
    def load(cls, path) -> "GroupSpec":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        out = {"mode": self.mode, "factors": [f.to_json() for f in self.factors]}
        if self.name:
            out["name"] = self.name
        if self.mode == AMALGAM:
            C = self.edge_group
            A, B = self.factors
            out["amalgam"] = {
                "C": C.to_json(),
                "alpha": {C.labels[c]: A.labels[a] for c, a in enumerate(self.embeddings[0])},
                "omega": {C.labels[c]: B.labels[b] for c, b in enumerate(self.embeddings[1])},
            }
        return out

    @staticmethod
    def _check_embedding(C: FiniteGroup, G: FiniteGroup, emb: Sequence[int]):
        if len(emb) != len(C):
            raise InvalidSpecError("embedding must be defined on all of C")
        if len(set(emb)) != len(emb):
            raise InvalidSpecError(f"embedding into {G} is not injective")
        for x in range(len(C)):
            for y in range(len(C)):
                if emb[C.mul(x, y)] != G.mul(emb[x], emb[y]):
                    raise InvalidSpecError(
                        f"embedding into {G} is not a homomorphism at "
                        f"({C.labels[x]}, {C.labels[y]})")

    def _build_transversals(self):
        # decomp[f][y] = (rep, c) with y = rep * emb_f(c); rep least in its coset
        self.decomp = []
        self.coset_reps = []
        C = self.edge_group
        for G, emb in zip(self.factors, self.embeddings):
            inv_emb = {g: c for c, g in enumerate(emb)}
            table = [None] * len(G)
            reps = []
            for y in range(len(G)):
                if table[y] is not None:
                    continue
                coset = [G.mul(y, emb[c]) for c in range(len(C))]
                rep = min(coset)
                reps.append(rep)
                inv_rep = G.inverse[rep]
                for z in coset:
                    table[z] = (rep, inv_emb[G.mul(inv_rep, z)])
            self.decomp.append(tuple(table))
            self.coset_reps.append(tuple(sorted(reps)))

    def _name_table(self) -> dict:
        seen: dict = {}
        dup = set()
        for f, F in enumerate(self.factors):
            if isinstance(F, FiniteGroup):
                entries = [(lab, (f, i)) for i, lab in enumerate(F.labels) if i != F.identity]
            else:
                entries = [(nm, (f, -(i + 1))) for i, nm in enumerate(F.names)]
            for lab, val in entries:
                if lab in seen:
                    dup.add(lab)
                seen[lab] = val
        for lab in dup:
            del seen[lab]
        return seen

    # -- basic queries -----------------------------------------------------
    def __repr__(self) -> str:
        if self.name:
            return f"GroupSpec({self.name})"
        return f"GroupSpec({self.mode}, {list(self.factors)})"

    @property
    def is_amalgam(self) -> bool:
        return self.mode == AMALGAM

    def finite_factor_ids(self) -> list[int]:
        return [f for f, F in enumerate(self.factors) if isinstance(F, FiniteGroup)]

    def is_finite(self) -> bool:
        if self.mode == AMALGAM:
            return False
        nontrivial = [F for F in self.factors if not (isinstance(F, FiniteGroup) and len(F) == 1)]
        return len(nontrivial) == 1 and isinstance(nontrivial[0], FiniteGroup)

    def identity(self) -> "GroupElement":
        return GroupElement(self, (), self._tail_identity())

    def _tail_identity(self):
        return self.edge_group.identity if self.mode == AMALGAM else None

    # -- element constructors ---------------------------------------------
    def factor_element(self, f: int, x) -> "GroupElement":
        """The element of finite factor ``f`` with index or label ``x``."""
        F = self.factors[f]
        if not isinstance(F, FiniteGroup):
            raise DomainError(f"factor {f} is not finite")
        i = F.index(x) if isinstance(x, str) else int(x)
        if self.mode == AMALGAM:
            rep, c = self.decomp[f][i]
            if rep == F.identity:
                return GroupElement(self, (), c)
            return GroupElement(self, ((f, rep),), c)
        if i == F.identity:
            return self.identity()
        return GroupElement(self, ((f, i),), None)

    def free_word(self, f: int, letters: Iterable[int]) -> "GroupElement":
        """The element of free factor ``f`` spelled by signed generator indices."""
        F = self.factors[f]
        if not isinstance(F, FreeFactor):
            raise DomainError(f"factor {f} is not free")
        word = reduce_word(int(x) for x in letters)
        if any(not 1 <= abs(x) <= F.rank for x in word):
            raise DomainError(f"generator outside rank {F.rank} in {word}")
        if not word:
            return self.identity()
        return GroupElement(self, ((f, word),), None)

    def gen(self, f: int, index: int, sign: int = 1) -> "GroupElement":
        return self.free_word(f, [Generator(index, sign).letter])

    def edge_element(self, c) -> "GroupElement":
        if self.mode != AMALGAM:
            raise DomainError("only amalgams have an edge group")
        C = self.edge_group
        i = C.index(c) if isinstance(c, str) else int(c)
        return GroupElement(self, (), i)

    def element(self, syllables: Iterable, tail=None) -> "GroupElement":
        """Normalize an arbitrary syllable list (labels or indices)."""
        out = self.identity()
        for f, payload in syllables:
            F = self.factors[f]
            if isinstance(F, FreeFactor):
                letters = []
                for x in payload:
                    if isinstance(x, (list, tuple)):
                        letters.append(Generator(int(x[0]), int(x[1])).letter)
                    else:
                        letters.append(int(x))
                out = out * self.free_word(f, letters)
            else:
                out = out * self.factor_element(f, payload)
        if tail is not None:
            out = out * self.edge_element(tail)
        return out

    def parse(self, text: str) -> "GroupElement":
        """Parse a space separated product of labels, e.g. ``"s t^2 x^-1"``.

        Finite-factor labels and free generator names must be unambiguous
        across factors; ``1`` denotes the identity.
        """
        out = self.identity()
        for tok in text.split():
            m = re.fullmatch(r"(.+?)(?:\^(-?\d+))?", tok)
            name, exp = m.group(1), int(m.group(2) or 1)
            if name == "1":
                continue
            if name not in self._names:
                raise DomainError(f"unknown or ambiguous generator {name!r}")
            f, i = self._names[name]
            x = self.gen(f, -i) if i < 0 else self.factor_element(f, i)
            out = out * (x ** exp)
        return out

    # -- arithmetic on raw normal forms --------------------------------------
    def _combine(self, f: int, p, q):
        F = self.factors[f]
        if isinstance(F, FiniteGroup):
            r = F.table[p][q]
            return None if r == F.identity else r
        w = concat_reduced(p, q)
        return w or None

    def _mul_raw(self, a: "GroupElement", b: "GroupElement"):
        if self.mode == FREE_PRODUCT:
            out = list(a.syllables)
            for f, p in b.syllables:
                if out and out[-1][0] == f:
                    q = self._combine(f, out[-1][1], p)
                    out.pop()
                    if q is not None:
                        out.append((f, q))
                else:
                    out.append((f, p))
            return tuple(out), None
        reps = list(a.syllables)
        c = a.tail
        for f, r in b.syllables:
            c = self._push_amalgam(reps, c, f, r)
        return tuple(reps), self.edge_group.mul(c, b.tail)

    def _push_amalgam(self, reps: list, c: int, f: int, x: int) -> int:
        G = self.factors[f]
        y = G.mul(self.embeddings[f][c], x)
        if reps and reps[-1][0] == f:
            y = G.mul(reps.pop()[1], y)
        rep, c2 = self.decomp[f][y]
        if rep != G.identity:
            reps.append((f, rep))
        return c2

    def _inv_raw(self, a: "GroupElement"):
        if self.mode == FREE_PRODUCT:
            out = []
            for f, p in reversed(a.syllables):
                F = self.factors[f]
                out.append((f, F.inverse[p] if isinstance(F, FiniteGroup) else invert_word(p)))
            return tuple(out), None
        C = self.edge_group
        reps: list = []
        c = C.inverse[a.tail]
        for f, r in reversed(a.syllables):
            c = self._push_amalgam(reps, c, f, self.factors[f].inverse[r])
        return tuple(reps), c

    # -- enumeration ------------------------------------------------------
    def generators(self) -> list["GroupElement"]:
        """Symmetric generating set: nontrivial factor elements and free letters."""
        gens = []
        for f, F in enumerate(self.factors):
            if isinstance(F, FiniteGroup):
                gens.extend(self.factor_element(f, i) for i in range(len(F)) if i != F.identity)
            else:
                for i in range(1, F.rank + 1):
                    gens.append(self.gen(f, i, 1))
                    gens.append(self.gen(f, i, -1))
        if self.mode == AMALGAM:
            gens = [g for g in gens if g.syllables]
            gens.extend(self.edge_element(c) for c in range(len(self.edge_group))
                        if c != self.edge_group.identity)
        return sorted(set(gens), key=GroupElement.sort_key)

    def ball(self, radius: int) -> list["GroupElement"]:
        """All elements of word length at most ``radius``, in BFS order."""
        gens = self.generators()
        seen = {self.identity()}
        order = [self.identity()]
        frontier = [self.identity()]
        for _ in range(radius):
            nxt = []
            for g in frontier:
                for s in gens:
                    h = g * s
                    if h not in seen:
                        seen.add(h)
                        nxt.append(h)
            nxt.sort(key=GroupElement.sort_key)
            order.extend(nxt)
            frontier = nxt
        return order


# ---------------------------------------------------------------------------
# elements

class GroupElement:
    """An element of a :class:`GroupSpec` stored in its unique normal form."""

    __slots__ = ("spec", "syllables", "tail", "_hash")

    def __init__(self, spec: GroupSpec, syllables: tuple, tail=None):
        self.spec = spec
        self.syllables = syllables
        self.tail = tail
        self._hash = None

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        return (self.spec is other.spec and self.syllables == other.syllables
                and self.tail == other.tail)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((id(self.spec), self.syllables, self.tail))
        return self._hash

    def _check(self, other: "GroupElement"):
        if not isinstance(other, GroupElement):
            raise TypeError(f"cannot combine GroupElement with {type(other).__name__}")
        if other.spec is not self.spec:
            raise SpecMismatchError(f"{self.spec!r} vs {other.spec!r}")

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        self._check(other)
        syl, tail = self.spec._mul_raw(self, other)
        return GroupElement(self.spec, syl, tail)

    def inverse(self) -> "GroupElement":
        syl, tail = self.spec._inv_raw(self)
        return GroupElement(self.spec, syl, tail)

    def __invert__(self) -> "GroupElement":
        return self.inverse()

    def __pow__(self, k: int) -> "GroupElement":
        if k < 0:
            return self.inverse() ** (-k)
        result = self.spec.identity()
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def conj(self, h: "GroupElement") -> "GroupElement":
        """``h^-1 * self * h``."""
        return h.inverse() * self * h

    def is_identity(self) -> bool:
        return not self.syllables and self.tail == self.spec._tail_identity()

    def __bool__(self) -> bool:
        return not self.is_identity()

    def __len__(self) -> int:
        return len(self.syllables)

    @property
    def word_length(self) -> int:
        """Length over the generating set of :meth:`GroupSpec.generators`."""
        if self.spec.mode == AMALGAM:
            if self.syllables:
                return len(self.syllables)
            return 0 if self.is_identity() else 1
        n = 0
        for f, p in self.syllables:
            n += len(p) if isinstance(self.spec.factors[f], FreeFactor) else 1
        return n

    def sort_key(self):
        """Global syllable order: shortlex on (word length, syllables, tail)."""
        return (self.word_length, len(self.syllables),
                tuple((f, p if isinstance(p, tuple) else (p,)) for f, p in self.syllables),
                -1 if self.tail is None else self.tail)

    def __lt__(self, other: "GroupElement") -> bool:
        return self.sort_key() < other.sort_key()

    def to_json(self):
        out = []
        for f, p in self.syllables:
            F = self.spec.factors[f]
            if isinstance(F, FiniteGroup):
                out.append([f, F.labels[p]])
            else:
                out.append([f, [[abs(x), 1 if x > 0 else -1] for x in p]])
        if self.spec.mode == AMALGAM:
            return {"syllables": out, "tail": self.spec.edge_group.labels[self.tail]}
        return {"syllables": out}

    def __str__(self) -> str:
        parts = []
        for f, p in self.syllables:
            F = self.spec.factors[f]
            if isinstance(F, FiniteGroup):
                parts.append(F.labels[p])
            else:
                for x in p:
                    nm = F.names[abs(x) - 1]
                    parts.append(nm if x > 0 else nm + "^-1")
        if self.spec.mode == AMALGAM and self.tail != self.spec.edge_group.identity:
            parts.append("[" + self.spec.edge_group.labels[self.tail] + "]")
        return " ".join(parts) if parts else "1"

    def __repr__(self) -> str:
        return f"<{self}>"


def element_from_json(spec: GroupSpec, data) -> GroupElement:
    if isinstance(data, str):
        return spec.parse(data)
    if isinstance(data, dict):
        return spec.element(data.get("syllables", []), data.get("tail"))
    return spec.element(data)


# ---------------------------------------------------------------------------
# operations

def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    return a * b


def invert(a: GroupElement) -> GroupElement:
    return a.inverse()


def _single(spec: GroupSpec, syllable) -> GroupElement:
    if spec.mode == AMALGAM:
        return GroupElement(spec, (syllable,), spec.edge_group.identity)
    return GroupElement(spec, (syllable,), None)


def cyclic_reduce(a: GroupElement) -> tuple[GroupElement, GroupElement]:
    """Return ``(core, conjugator)`` with ``a = conjugator * core * conjugator^-1``.

    The core has at most one syllable, or its first and last syllables lie in
    different factors; a single free-factor syllable is also cyclically
    reduced as a free word.
    """
    spec = a.spec
    core = a
    conj = spec.identity()
    while len(core.syllables) >= 2 and core.syllables[0][0] == core.syllables[-1][0]:
        h = _single(spec, core.syllables[0])
        core = core.conj(h)
        conj = conj * h
    if len(core.syllables) == 1 and spec.mode == FREE_PRODUCT:
        f, p = core.syllables[0]
        if isinstance(spec.factors[f], FreeFactor):
            k = 0
            while p[k] == -p[len(p) - 1 - k]:
                k += 1
            if k:
                h = GroupElement(spec, ((f, p[:k]),), None)
                core = GroupElement(spec, ((f, p[k:len(p) - k]),), None)
                conj = conj * h
    return core, conj


def conjugate_into_factor(a: GroupElement) -> Optional[tuple[int, GroupElement]]:
    """``(f, g)`` with ``g^-1 a g`` in factor ``f``, or ``None`` if no such factor.

    The identity and elements of the amalgamated subgroup report factor 0.
    """
    core, conj = cyclic_reduce(a)
    if not core.syllables:
        return 0, conj
    if len(core.syllables) == 1:
        return core.syllables[0][0], conj
    return None


def is_finite_order(a: GroupElement) -> bool:
    """Finite order iff conjugate into a finite factor (or trivial)."""
    hit = conjugate_into_factor(a)
    if hit is None:
        return False
    return isinstance(a.spec.factors[hit[0]], FiniteGroup) or a.is_identity()


def _divisors_desc(n: int) -> list[int]:
    return [d for d in range(n, 0, -1) if n % d == 0]


def primitive_root(a: GroupElement) -> tuple[GroupElement, int]:
    """Maximal root: ``(root, e)`` with ``a = root**e`` and ``e`` maximal."""
    spec = a.spec
    if a.is_identity() or is_finite_order(a):
        raise DomainError(f"primitive_root needs an element of infinite order, got {a}")
    core, conj = cyclic_reduce(a)
    cinv = conj.inverse()
    if spec.mode == FREE_PRODUCT:
        if len(core.syllables) == 1:
            f, word = core.syllables[0]
            p = smallest_period(word)
            root = GroupElement(spec, ((f, word[:p]),), None)
            e = len(word) // p
        else:
            p = smallest_period(core.syllables)
            root = GroupElement(spec, core.syllables[:p], None)
            e = len(core.syllables) // p
        return conj * root * cinv, e
    # amalgam: a root b of core shares its axis, so b*1A is the vertex p steps
    # along the path from 1A towards core*1A and b lies in (prefix) * A.
    k = len(core.syllables)
    A = spec.factors[0]
    lead = 0 if core.syllables[0][0] == 0 else 1
    for e in _divisors_desc(k):
        if e == 1:
            break
        p = k // e
        cut = p - lead
        if cut < 0:
            continue
        prefix = GroupElement(spec, core.syllables[:cut], spec.edge_group.identity)
        for x in range(len(A)):
            b = prefix * spec.factor_element(0, x)
            if b ** e == core:
                return conj * b * cinv, e
    return a, 1


def normalize(a: GroupElement) -> GroupElement:
    """Re-derive the normal form of ``a`` from its own syllables."""
    spec = a.spec
    if spec.mode == AMALGAM:
        out = spec.identity()
        for f, r in a.syllables:
            out = out * spec.factor_element(f, r)
        return out * spec.edge_element(a.tail)
    out = spec.identity()
    for f, p in a.syllables:
        if isinstance(spec.factors[f], FreeFactor):
            out = out * spec.free_word(f, p)
        else:
            out = out * spec.factor_element(f, p)
    return out


def iter_words(spec: GroupSpec, letters: Sequence[GroupElement], max_len: int) -> Iterator[tuple]:
    """All tuples over ``letters`` of length at most ``max_len``."""
    for n in range(max_len + 1):
        yield from itertools.product(letters, repeat=n)
