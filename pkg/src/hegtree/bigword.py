"""Lazy big words for the Hawaiian earring group.

A big word is given by a small scheme grammar (letters, finite products,
inverses, integer powers and omega-indexed tails).  Nothing is ever expanded
in full: the only observable of a scheme is its family of projections
``p_n`` onto the free groups ``F_n = <a_1, ..., a_n>``, and every projection
is a finite computation because each tail factor escapes past level ``n``
after finitely many steps.

Projections are freely reduced tuples of signed generator indices
(``+i`` for ``a_i``, ``-i`` for its inverse).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Union

from .groupcore import (
    FreeFactor,
    GroupElement,
    GroupSpec,
    concat_reduced,
    conjugate_into_factor,
    invert_word,
)

DEFAULT_CUTOFF = 64
ELLIPTIC = "elliptic"
LOXODROMIC = "loxodromic"


class MalformedSchemeError(ValueError):
    """A tail violated its escape-bound contract during expansion."""


class TruncationError(ValueError):
    """A word has support outside the truncation level in use."""


class BigWord:
    """Base class of scheme nodes; combine with ``*``, ``~`` and ``**``."""

    def __mul__(self, other: "BigWord") -> "BigWord":
        return Concat((self, other))

    def __invert__(self) -> "BigWord":
        return Inverse(self)

    def __pow__(self, k: int) -> "BigWord":
        return Power(self, k)


@dataclass(frozen=True, eq=False)
class Letter(BigWord):
    index: int
    sign: int = 1

    def __post_init__(self):
        if self.index < 1 or self.sign not in (1, -1):
            raise ValueError(f"bad letter a_{self.index}^{self.sign}")


@dataclass(frozen=True, eq=False)
class Concat(BigWord):
    parts: tuple


@dataclass(frozen=True, eq=False)
class Inverse(BigWord):
    word: BigWord


@dataclass(frozen=True, eq=False)
class Power(BigWord):
    word: BigWord
    exponent: int


@dataclass(frozen=True, eq=False)
class Tail(BigWord):
    """The infinite product ``rule(1) rule(2) rule(3) ...``.

    ``bound`` must be strictly increasing and every letter of ``rule(i)`` must
    have index at least ``bound(i)``; both are checked as the tail expands.
    ``name``/``params`` record the registry entry used for serialization.
    """

    rule: Callable[[int], BigWord]
    bound: Callable[[int], int]
    name: Optional[str] = None
    params: Optional[tuple] = None


IDENTITY = Concat(())


def a(i: int, sign: int = 1) -> Letter:
    return Letter(i, sign)


def word(text: str) -> BigWord:
    """Finite word from text such as ``"a1 a5^-1 a3^2"``."""
    parts = []
    for tok in text.split():
        m = re.fullmatch(r"a(\d+)(?:\^(-?\d+))?", tok)
        if not m:
            raise ValueError(f"bad token {tok!r}")
        letter = Letter(int(m.group(1)))
        k = int(m.group(2) or 1)
        parts.append(letter if k == 1 else Power(letter, k))
    return Concat(tuple(parts))


def from_letters(letters) -> BigWord:
    return Concat(tuple(Letter(abs(x), 1 if x > 0 else -1) for x in letters))


# ---------------------------------------------------------------------------
# projections

def _free_power(u: tuple, k: int) -> tuple:
    if k == 0 or not u:
        return ()
    if k < 0:
        u, k = invert_word(u), -k
    c = 0
    while u[c] == -u[len(u) - 1 - c]:
        c += 1
    core = u[c:len(u) - c]
    return u[:c] + core * k + u[len(u) - c:]


@lru_cache(maxsize=8192)
def _project(w: BigWord, n: int) -> tuple:
    if isinstance(w, Letter):
        return (w.sign * w.index,) if w.index <= n else ()
    if isinstance(w, Concat):
        out: tuple = ()
        for part in w.parts:
            out = concat_reduced(out, _project(part, n))
        return out
    if isinstance(w, Inverse):
        return invert_word(_project(w.word, n))
    if isinstance(w, Power):
        return _free_power(_project(w.word, n), w.exponent)
    if isinstance(w, Tail):
        out = ()
        prev = None
        i = 1
        while True:
            b = w.bound(i)
            if prev is not None and b <= prev:
                raise MalformedSchemeError(f"escape bound not increasing at i={i}")
            factor = _project(w.rule(i), n)
            if any(abs(x) < b for x in factor):
                raise MalformedSchemeError(
                    f"tail factor {i} uses a letter below its escape bound {b}")
            if b > n:
                break
            out = concat_reduced(out, factor)
            prev = b
            i += 1
        return out
    raise TypeError(f"not a big word: {w!r}")


@dataclass(frozen=True)
class Projection:
    level: int
    word: tuple

    def element(self, spec: Optional[GroupSpec] = None) -> GroupElement:
        """The projection as an element of ``F_level``."""
        if self.level < 1:
            raise ValueError("F_0 is trivial and has no GroupSpec")
        spec = spec or free_group(self.level)
        return spec.free_word(0, self.word)

    def is_trivial(self) -> bool:
        return not self.word

    def __str__(self) -> str:
        if not self.word:
            return "1"
        return " ".join(f"a{abs(x)}" + ("" if x > 0 else "^-1") for x in self.word)


@lru_cache(maxsize=None)
def free_group(n: int) -> GroupSpec:
    return GroupSpec.free_product(FreeFactor(n, [f"a{i}" for i in range(1, n + 1)]), name=f"F{n}")


def project(w: BigWord, n: int) -> Projection:
    """``p_n(w)`` as a reduced word in ``F_n``."""
    if n < 0:
        raise ValueError("projection level must be non-negative")
    return Projection(n, _project(w, n))


def eq_to_depth(w: BigWord, u: BigWord, n: int) -> bool:
    """``p_n(w) == p_n(u)``; projections are compatible, so this covers all k <= n."""
    return _project(w, n) == _project(u, n)


def min_support(w: BigWord, cutoff: int = DEFAULT_CUTOFF) -> Union[int, float]:
    """Least generator index in any nontrivial projection up to ``cutoff``.

    Returns ``math.inf`` when ``p_cutoff(w)`` is trivial, which only means
    "trivial up to the cutoff".
    """
    p = _project(w, cutoff)
    return min(abs(x) for x in p) if p else math.inf


def support_max(w: BigWord, cutoff: int = DEFAULT_CUTOFF) -> int:
    p = _project(w, cutoff)
    return max((abs(x) for x in p), default=0)


# ---------------------------------------------------------------------------
# HEG = HEG_n * HEG^n on truncations

@lru_cache(maxsize=None)
def gamma_spec(n: int, m: int) -> GroupSpec:
    """``<a_1..a_n> * <a_{n+1}..a_m>`` as a free product of two free factors."""
    return GroupSpec.free_product(
        FreeFactor(n, [f"a{i}" for i in range(1, n + 1)]),
        FreeFactor(m - n, [f"a{i}" for i in range(n + 1, m + 1)]),
        name=f"F{n}*F[{n + 1}..{m}]",
    )


def _truncated(w: BigWord, n: int, m: int, cutoff: int) -> tuple:
    if not 0 <= n <= m:
        raise ValueError(f"need 0 <= n <= m, got n={n}, m={m}")
    probe = _project(w, max(m, cutoff))
    if any(abs(x) > m for x in probe):
        raise TruncationError(f"word has letters beyond a{m}")
    return _project(w, m)


def split_decomposition(w: BigWord, n: int, m: int, cutoff: int = DEFAULT_CUTOFF) -> list[tuple[str, tuple]]:
    """Syllables of ``p_m(w)`` in ``HEG_n * HEG^n``: ``("low"|"high", letters)``."""
    u = _truncated(w, n, m, cutoff)
    out: list = []
    for x in u:
        side = "low" if abs(x) <= n else "high"
        if out and out[-1][0] == side:
            out[-1] = (side, out[-1][1] + (x,))
        else:
            out.append((side, (x,)))
    return out


def gamma_element(w: BigWord, n: int, m: int, cutoff: int = DEFAULT_CUTOFF) -> GroupElement:
    """``p_m(w)`` as an element of :func:`gamma_spec` (requires ``1 <= n < m``)."""
    spec = gamma_spec(n, m)
    out = spec.identity()
    for side, letters in split_decomposition(w, n, m, cutoff):
        if side == "low":
            out = out * spec.free_word(0, letters)
        else:
            out = out * spec.free_word(1, [x - n if x > 0 else x + n for x in letters])
    return out


def length_Yn(w: BigWord, n: int, m: int, cutoff: int = DEFAULT_CUTOFF) -> int:
    """Word length of ``p_m(w)`` over ``{a_1..a_n} u HEG^n``.

    Each letter of index ``<= n`` costs one; each maximal block of higher
    letters in the free-product normal form costs one.
    """
    return sum(len(letters) if side == "low" else 1
               for side, letters in split_decomposition(w, n, m, cutoff))


def classify_in_Gamma_n(w: BigWord, n: int, m: int, cutoff: int = DEFAULT_CUTOFF) -> str:
    """Elliptic iff ``p_m(w)`` is conjugate into ``HEG^n`` (or trivial)."""
    u = _truncated(w, n, m, cutoff)
    if not u or n == 0:
        return ELLIPTIC
    if n == m:
        return LOXODROMIC
    hit = conjugate_into_factor(gamma_element(w, n, m, cutoff))
    if hit is not None and hit[0] == 1:
        return ELLIPTIC
    return LOXODROMIC


# ---------------------------------------------------------------------------
# serialization

def _shifted_generator(start: int = 1, sign: int = 1):
    return (lambda i: Letter(start + i - 1, sign)), (lambda i: start + i - 1)


def _conjugated_sequence(offset: int = 1):
    # z_i = a_{i+o} a_{i+o+1} a_{i+o}^-1
    def rule(i):
        j = i + offset
        return Concat((Letter(j), Letter(j + 1), Letter(j, -1)))
    return rule, (lambda i: i + offset)


def _power_sequence(offset: int = 0, exponent: int = 2):
    return (lambda i: Power(Letter(i + offset), exponent)), (lambda i: i + offset)


TAIL_RULES = {
    "shifted_generator": _shifted_generator,
    "conjugated_sequence": _conjugated_sequence,
    "power_sequence": _power_sequence,
}


def named_tail(rule: str, **params) -> Tail:
    if rule not in TAIL_RULES:
        raise ValueError(f"unknown tail rule {rule!r}; known: {sorted(TAIL_RULES)}")
    fn, bound = TAIL_RULES[rule](**params)
    return Tail(fn, bound, name=rule, params=tuple(sorted(params.items())))


def from_json(data) -> BigWord:
    if isinstance(data, str):
        return word(data)
    if not isinstance(data, dict) or len(data) != 1:
        raise ValueError(f"bad scheme node {data!r}")
    (tag, body), = data.items()
    if tag == "letter":
        return Letter(int(body[0]), int(body[1]))
    if tag == "concat":
        return Concat(tuple(from_json(x) for x in body))
    if tag == "inverse":
        return Inverse(from_json(body))
    if tag == "power":
        return Power(from_json(body[0]), int(body[1]))
    if tag == "tail":
        return named_tail(body["rule"], **body.get("params", {}))
    raise ValueError(f"unknown scheme tag {tag!r}")


def to_json(w: BigWord):
    if isinstance(w, Letter):
        return {"letter": [w.index, w.sign]}
    if isinstance(w, Concat):
        return {"concat": [to_json(x) for x in w.parts]}
    if isinstance(w, Inverse):
        return {"inverse": to_json(w.word)}
    if isinstance(w, Power):
        return {"power": [to_json(w.word), w.exponent]}
    if isinstance(w, Tail):
        if w.name is None:
            raise ValueError("only registry tails can be serialized")
        return {"tail": {"rule": w.name, "params": dict(w.params or ())}}
    raise TypeError(f"not a big word: {w!r}")
