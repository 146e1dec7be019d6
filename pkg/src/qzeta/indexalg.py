"""Indexed words [s; r], the weight-(1-q) pairing and the q-stuffle product."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Iterator, Sequence

from gmpy2 import mpfr

from .constants import QContext, Real, precision_context
from .errors import DomainError
from .series import AffineR


def as_affine(r) -> AffineR:
    if isinstance(r, AffineR):
        return r
    if isinstance(r, tuple):
        return AffineR(*r)
    return AffineR(r)


@dataclass(frozen=True)
class IndexedWord:
    """A word of (exponent, direction) letters.  The empty word is the unit."""

    s: tuple[int, ...] = ()
    r: tuple[AffineR, ...] = ()

    def __post_init__(self):
        s = tuple(int(x) for x in self.s)
        r = tuple(as_affine(x) for x in self.r)
        if len(s) != len(r):
            raise DomainError(f"word has {len(s)} exponents but {len(r)} directions")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "r", r)

    @classmethod
    def of(cls, s: Sequence[int], r=None) -> "IndexedWord":
        """Word with the given exponents; directions default to 1 everywhere."""
        if r is None:
            r = [1] * len(s)
        return cls(tuple(s), tuple(r))

    @property
    def depth(self) -> int:
        return len(self.s)

    def __len__(self):
        return len(self.s)

    def __getitem__(self, k) -> "IndexedWord":
        if isinstance(k, slice):
            return IndexedWord(self.s[k], self.r[k])
        return IndexedWord((self.s[k],), (self.r[k],))

    def __add__(self, other: "IndexedWord") -> "IndexedWord":
        return IndexedWord(self.s + other.s, self.r + other.r)

    def letter(self, k: int) -> tuple[int, AffineR]:
        return self.s[k], self.r[k]

    def prepend(self, s: int, r: AffineR) -> "IndexedWord":
        return IndexedWord((s,) + self.s, (r,) + self.r)

    def replace(self, k: int, s: int | None = None, r: AffineR | None = None) -> "IndexedWord":
        ss, rr = list(self.s), list(self.r)
        if s is not None:
            ss[k] = s
        if r is not None:
            rr[k] = r
        return IndexedWord(tuple(ss), tuple(rr))

    def is_nonpositive(self) -> bool:
        return all(x <= 0 for x in self.s)

    def is_positive(self) -> bool:
        return all(x >= 1 for x in self.s)

    def is_mixed(self) -> bool:
        return bool(self.s) and not (self.is_nonpositive() or self.is_positive())

    def key(self):
        return (self.s, tuple(x.key() for x in self.r))

    def __str__(self):
        if not self.s:
            return "[]"
        return "[" + ",".join(map(str, self.s)) + "; " + ",".join(map(str, self.r)) + "]"


EMPTY = IndexedWord()


@dataclass(frozen=True)
class Term:
    coeff: Real
    word: IndexedWord
    stuffing: tuple[int, ...]

    def __post_init__(self):
        if len(self.stuffing) != self.word.depth:
            raise DomainError("stuffing vector and word differ in length")


class WordSum:
    """Formal linear combination of indexed words with stuffing vectors."""

    def __init__(self, terms: Iterable[Term] = ()):
        self.terms = list(terms)

    def __iter__(self) -> Iterator[Term]:
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def __add__(self, other: "WordSum") -> "WordSum":
        return WordSum(self.terms + other.terms)

    def scale(self, c) -> "WordSum":
        return WordSum(Term(c * t.coeff, t.word, t.stuffing) for t in self.terms)

    def prepend(self, s: int, r: AffineR, bit: int = 0) -> "WordSum":
        return WordSum(Term(t.coeff, t.word.prepend(s, r), (bit,) + t.stuffing) for t in self.terms)

    def collect(self, with_stuffing: bool = False) -> dict:
        """Sum coefficients of equal words, keyed by ``word.key()`` (and stuffing)."""
        out: dict = {}
        with precision_context(self._prec()):
            for t in self.terms:
                k = (t.word.key(), t.stuffing) if with_stuffing else t.word.key()
                out[k] = out.get(k, mpfr(0)) + t.coeff
        return out

    def _prec(self) -> int:
        # sums must not round below the precision the coefficients carry
        return max((t.coeff.precision for t in self.terms), default=53)

    def by_word(self) -> list[tuple[Real, IndexedWord]]:
        """Collected (coefficient, word) pairs in first-seen order."""
        acc: dict = {}
        with precision_context(self._prec()):
            for t in self.terms:
                k = t.word.key()
                if k in acc:
                    acc[k][0] += t.coeff
                else:
                    acc[k] = [t.coeff, t.word]
        return [(c, w) for c, w in acc.values()]

    def __repr__(self):
        return "WordSum(" + " + ".join(f"{float(t.coeff):.6g}*{t.word}{t.stuffing}" for t in self.terms) + ")"


def pair(a: tuple[int, AffineR], b: tuple[int, AffineR], ctx: QContext) -> WordSum:
    """<a, b> = [s+s'; r+r'] + (1-q) [s+s'-1; r+r']."""
    s, r = a[0] + b[0], as_affine(a[1]) + as_affine(b[1])
    with ctx.local():
        w = ctx.one_minus_q
    return WordSum([
        Term(mpfr(1), IndexedWord((s,), (r,)), (0,)),
        Term(w, IndexedWord((s - 1,), (r,)), (1,)),
    ])


def stuffle(w1: IndexedWord, w2: IndexedWord, ctx: QContext) -> WordSum:
    """q-stuffle product with stuffing-position vectors."""
    memo: dict = {}
    with ctx.local():
        return _stuffle(w1, w2, ctx, memo)


def _stuffle(a: IndexedWord, b: IndexedWord, ctx, memo) -> WordSum:
    if not a.s:
        return WordSum([Term(mpfr(1), b, (0,) * b.depth)])
    if not b.s:
        return WordSum([Term(mpfr(1), a, (0,) * a.depth)])
    key = (a.depth, b.depth)
    if key in memo:
        return memo[key]
    a1, b1 = a.letter(0), b.letter(0)
    out = _stuffle(a[1:], b, ctx, memo).prepend(*a1)
    out = out + _stuffle(a, b[1:], ctx, memo).prepend(*b1)
    rest = _stuffle(a[1:], b[1:], ctx, memo)
    for p in pair(a1, b1, ctx):
        s, r = p.word.letter(0)
        out = out + rest.prepend(s, r, p.stuffing[0]).scale(p.coeff)
    memo[key] = out
    return out


def shift_expand(w: IndexedWord, j: int, n: int, ctx: QContext) -> WordSum:
    """Binomial expansion sum_i C(n,i)(1-q)^i [.., s_j - i, ..] (j is 1-based)."""
    if not 1 <= j <= w.depth:
        raise DomainError(f"position {j} outside word of depth {w.depth}")
    if n < 0:
        raise DomainError("shift count must be non-negative")
    with ctx.local():
        out = []
        for i in range(n + 1):
            c = comb(n, i) * ctx.one_minus_q ** i
            out.append(Term(c, w.replace(j - 1, s=w.s[j - 1] - i), (0,) * w.depth))
        return WordSum(out)


def partitions(d: int) -> list[tuple[int, ...]]:
    """All increasing sequences 0 < i_1 < ... < i_p = d, without the leading 0."""
    if d < 1:
        raise DomainError("partitions need d >= 1")
    out = []
    for k in range(d):
        for cuts in combinations(range(1, d), k):
            out.append(cuts + (d,))
    return out


def blocks(w: IndexedWord, cut: Sequence[int]) -> list[IndexedWord]:
    """Split ``w`` into consecutive blocks ending at the positions in ``cut``."""
    out, prev = [], 0
    for c in cut:
        out.append(w[prev:c])
        prev = c
    return out


def parse_word(text: str) -> IndexedWord:
    """Parse "s1,s2;r1,r2" where each r is "a" or "a+bd" or "bd"."""
    if ";" in text:
        s_part, r_part = text.split(";", 1)
    else:
        s_part, r_part = text, None
    s = [int(x) for x in s_part.replace("(", "").replace(")", "").split(",") if x.strip()]
    if r_part is None:
        return IndexedWord.of(s)
    rs = [parse_affine(x) for x in r_part.split(",") if x.strip()]
    return IndexedWord(tuple(s), tuple(rs))


def parse_affine(text: str) -> AffineR:
    t = text.strip().replace(" ", "")
    if "+" in t:
        a, b = t.split("+", 1)
        return AffineR(Fraction(a), _delta_coeff(b))
    if t.endswith("d"):
        return AffineR(0, _delta_coeff(t))
    return AffineR(Fraction(t), 0)


def _delta_coeff(t: str) -> Fraction:
    if not t.endswith("d"):
        raise DomainError(f"cannot parse direction term {t!r}")
    body = t[:-1].rstrip("*")
    return Fraction(body) if body else Fraction(1)
