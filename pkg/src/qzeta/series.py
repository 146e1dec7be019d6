"""Truncated Laurent series in delta, polynomials in T, and Laurent series
in eps over those.

Each series records ``hi``, the highest exponent through which it is
complete.  Exponents in ``(lo, hi]`` that are not stored are zero.  A series
known exactly to all orders uses ``hi = EXACT``.  Ring operations propagate
horizons conservatively: a product of x (complete through x.hi, lowest
exponent x.lo) and y is complete through ``min(x.hi + y.lo, y.hi + x.lo)``.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Iterable

import gmpy2
from gmpy2 import mpfr

from .constants import Real, parse_rational, to_real
from .errors import DomainError, ResidualPole

EXACT = 1 << 40  # horizon of exactly known series
DEFAULT_EPS_ORDER = 4
DEFAULT_DELTA_ORDER = 4


def _hmin(a: int, b: int) -> int:
    m = a if a < b else b
    return EXACT if m >= EXACT // 2 else m


def _hadd(horizon: int, lo: int) -> int:
    """Horizon shifted by a valuation; exact horizons stay exact."""
    return EXACT if horizon >= EXACT // 2 else horizon + lo


def default_tol() -> Real:
    return mpfr(2) ** (10 - gmpy2.get_context().precision)


# ---------------------------------------------------------------------------
# delta series


class DeltaSeries:
    """Laurent series sum_e c[e] delta^e complete through delta^hi."""

    __slots__ = ("lo", "hi", "c")

    def __init__(self, c: dict | None = None, lo: int | None = None, hi: int = EXACT):
        c = {} if c is None else c
        if lo is None:
            lo = min(c) if c else (0 if hi >= 0 else hi)
        self.lo = lo
        self.hi = hi
        self.c = c

    # constructors -----------------------------------------------------
    @classmethod
    def const(cls, value) -> "DeltaSeries":
        v = value if isinstance(value, Real) else to_real(value)
        return cls({0: v} if v else {}, 0, EXACT)

    @classmethod
    def zero(cls, hi: int = EXACT) -> "DeltaSeries":
        return cls({}, min(0, hi), hi)

    @classmethod
    def monomial(cls, coeff, exponent: int) -> "DeltaSeries":
        v = coeff if isinstance(coeff, Real) else to_real(coeff)
        return cls({exponent: v} if v else {}, exponent, EXACT)

    # basic queries ----------------------------------------------------
    def coeff(self, e: int) -> Real:
        if e > self.hi:
            raise DomainError(f"delta^{e} is beyond the horizon {self.hi}")
        return self.c.get(e, mpfr(0))

    def is_exact(self) -> bool:
        return self.hi >= EXACT // 2

    def valuation(self) -> int:
        return min(self.c) if self.c else self.hi + 1

    def norm(self, upto: int | None = None) -> Real:
        top = self.hi if upto is None else min(upto, self.hi)
        m = mpfr(0)
        for e, v in self.c.items():
            if e <= top:
                a = abs(v)
                if a > m:
                    m = a
        return m

    def truncate(self, hi: int) -> "DeltaSeries":
        if hi >= self.hi:
            return self
        return DeltaSeries({e: v for e, v in self.c.items() if e <= hi}, min(self.lo, hi), hi)

    # ring operations --------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, DeltaSeries):
            other = DeltaSeries.const(other)
        hi = _hmin(self.hi, other.hi)
        c = {e: v for e, v in self.c.items() if e <= hi}
        for e, v in other.c.items():
            if e <= hi:
                w = c.get(e)
                c[e] = v if w is None else w + v
        return DeltaSeries(c, min(self.lo, other.lo), hi)

    __radd__ = __add__

    def __neg__(self):
        return DeltaSeries({e: -v for e, v in self.c.items()}, self.lo, self.hi)

    def __sub__(self, other):
        if not isinstance(other, DeltaSeries):
            other = DeltaSeries.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, k) -> "DeltaSeries":
        if not k:
            return DeltaSeries({}, self.lo, self.hi)
        return DeltaSeries({e: k * v for e, v in self.c.items()}, self.lo, self.hi)

    def shift(self, k: int) -> "DeltaSeries":
        """Multiply by delta^k."""
        return DeltaSeries({e + k: v for e, v in self.c.items()}, self.lo + k,
                           self.hi if self.is_exact() else self.hi + k)

    def __mul__(self, other):
        if not isinstance(other, DeltaSeries):
            return self.scale(other)
        hi = _hmin(_hadd(self.hi, other.lo), _hadd(other.hi, self.lo))
        a, b = self.c, other.c
        if len(a) == 1:
            (ea, va), = a.items()
            c = {ea + e: va * v for e, v in b.items() if ea + e <= hi}
        elif len(b) == 1:
            (eb, vb), = b.items()
            c = {eb + e: vb * v for e, v in a.items() if eb + e <= hi}
        else:
            c = {}
            for ea, va in a.items():
                lim = hi - ea
                for eb, vb in b.items():
                    if eb <= lim:
                        e = ea + eb
                        w = c.get(e)
                        c[e] = va * vb if w is None else w + va * vb
        return DeltaSeries(c, self.lo + other.lo, hi)

    __rmul__ = __mul__

    def __repr__(self):
        terms = " + ".join(f"{float(v):.6g}*d^{e}" for e, v in sorted(self.c.items()))
        h = "exact" if self.is_exact() else f"O(d^{self.hi + 1})"
        return f"DeltaSeries({terms or '0'}; {h})"

    def to_json(self, hi: int | None = None) -> dict:
        live = [e for e, v in self.c.items() if v]
        top = self.hi if hi is None else min(hi, self.hi)
        if top >= EXACT // 2:
            top = max(max(live, default=0), 0)
        lo = min(min(live, default=0), 0)
        return {
            "delta_lo": lo,
            "delta_hi": top,
            "delta_exact": self.is_exact(),
            "delta_coeffs": [format_real(self.c.get(e, mpfr(0))) for e in range(lo, top + 1)],
        }


def format_real(x: Real) -> str:
    """Decimal scientific notation with enough digits to round-trip."""
    if not x:
        return "0"
    n = max(17, int(x.precision * 0.30103) + 2)
    mant, exp, _ = gmpy2.digits(x, 10, n)
    sign = "-" if mant.startswith("-") else ""
    mant = mant.lstrip("-")
    return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1}"


# ---------------------------------------------------------------------------
# affine directions r = a + b delta


class AffineR:
    """Direction entry a + b*delta with exact non-negative rationals."""

    __slots__ = ("a", "b", "_hash")

    def __init__(self, a, b=0):
        a, b = parse_rational(a), parse_rational(b)
        if a < 0 or b < 0:
            raise DomainError("direction coefficients must be non-negative")
        if a == 0 and b == 0:
            raise DomainError("direction a + b*delta must not vanish identically")
        self.a, self.b = a, b
        self._hash = hash((a, b))

    def __add__(self, other: "AffineR") -> "AffineR":
        return AffineR(self.a + other.a, self.b + other.b)

    def __eq__(self, other):
        if self is other:
            return True
        return (isinstance(other, AffineR) and self._hash == other._hash
                and self.a == other.a and self.b == other.b)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"AffineR({self.a}, {self.b})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}d"
        return f"{self.a}+{self.b}d"

    def key(self):
        return (self.a, self.b)

    def at(self, delta) -> Real:
        return to_real(self.a) + to_real(self.b) * delta


def affine_series(r: AffineR) -> DeltaSeries:
    c = {}
    if r.a:
        c[0] = to_real(r.a)
    if r.b:
        c[1] = to_real(r.b)
    return DeltaSeries(c, 0 if r.a else 1, EXACT)


def affine_pow(r: AffineR, k: int, delta_hi: int) -> DeltaSeries:
    """(a + b delta)^k for k >= 0, truncated at delta_hi unless exact."""
    if k < 0:
        return affine_recip_pow(r, -k, delta_hi)
    a, b = r.a, r.b
    if a == 0:
        return DeltaSeries.monomial(to_real(b ** k), k)
    if b == 0:
        return DeltaSeries.const(to_real(a ** k))
    top = min(k, delta_hi)
    c = {}
    binom = 1
    for m in range(top + 1):
        c[m] = to_real(binom * a ** (k - m) * b ** m)
        binom = binom * (k - m) // (m + 1)
    return DeltaSeries(c, 0, EXACT if top == k else delta_hi)


def affine_recip_pow(r: AffineR, k: int, delta_hi: int) -> DeltaSeries:
    """(a + b delta)^(-k): binomial series when a > 0, exact monomial when a = 0."""
    if k < 0:
        raise DomainError("affine_recip_pow needs k >= 0")
    a, b = r.a, r.b
    if a == 0:
        return DeltaSeries.monomial(to_real(Fraction(1) / b ** k), -k)
    if b == 0 or delta_hi < 0:
        if b == 0:
            return DeltaSeries.const(to_real(Fraction(1) / a ** k))
        return DeltaSeries({}, min(0, delta_hi), delta_hi)
    # a^{-k} (1 + x)^{-k}, x = (b/a) delta ; coefficient C(-k, m) x^m
    ratio = b / a
    c = {}
    coef = Fraction(1) / a ** k
    for m in range(delta_hi + 1):
        c[m] = to_real(coef)
        coef = coef * (-(k + m)) / (m + 1) * ratio
    return DeltaSeries(c, 0, delta_hi)


def affine_log(r: AffineR, delta_hi: int) -> DeltaSeries:
    """ln(a + b delta) = ln a + sum_m (-1)^{m+1} (b/a)^m delta^m / m."""
    if r.a == 0:
        raise DomainError(f"ln({r}) diverges as delta -> 0")
    c = {0: gmpy2.log(to_real(r.a))} if r.a != 1 else {}
    if r.b == 0:
        return DeltaSeries(c, 0, EXACT)
    ratio = r.b / r.a
    p = Fraction(1)
    for m in range(1, delta_hi + 1):
        p *= ratio
        c[m] = to_real(p / m if m % 2 else -p / m)
    return DeltaSeries(c, 0, delta_hi)


def delta_limit(x: DeltaSeries, tol=None) -> Real:
    """Coefficient of delta^0 after checking that every pole coefficient is below tol."""
    if x.hi < 0:
        raise DomainError("series is not complete through delta^0")
    tol = default_tol() if tol is None else tol
    for e in sorted(x.c):
        if e < 0 and abs(x.c[e]) >= tol:
            raise ResidualPole(e, abs(x.c[e]))
    return x.c.get(0, mpfr(0))


def max_negative(x: DeltaSeries) -> Real:
    m = mpfr(0)
    for e, v in x.c.items():
        if e < 0 and abs(v) > m:
            m = abs(v)
    return m


# ---------------------------------------------------------------------------
# polynomials in T


class TPoly:
    """Polynomial sum_k c[k] T^k with DeltaSeries coefficients."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable[DeltaSeries]):
        c = list(coeffs)
        while len(c) > 1 and not c[-1].c:
            # drop structurally zero top coefficients but keep the horizon
            # information of the constant coefficient
            c.pop()
        self.c = tuple(c) if c else (DeltaSeries.zero(),)

    @classmethod
    def const(cls, x) -> "TPoly":
        if not isinstance(x, DeltaSeries):
            x = DeltaSeries.const(x)
        return cls((x,))

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    @property
    def hi(self) -> int:
        return min(x.hi for x in self.c)

    def coeff(self, k: int) -> DeltaSeries:
        return self.c[k] if k < len(self.c) else DeltaSeries.zero(self.hi)

    def __add__(self, other: "TPoly") -> "TPoly":
        n = max(len(self.c), len(other.c))
        return TPoly(self.coeff(k) + other.coeff(k) for k in range(n))

    def __neg__(self):
        return TPoly(-x for x in self.c)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, TPoly):
            out = [None] * (len(self.c) + len(other.c) - 1)
            for i, x in enumerate(self.c):
                for j, y in enumerate(other.c):
                    p = x * y
                    out[i + j] = p if out[i + j] is None else out[i + j] + p
            return TPoly(out)
        return TPoly(x * other for x in self.c)

    __rmul__ = __mul__

    def scale(self, k) -> "TPoly":
        return TPoly(x.scale(k) for x in self.c)

    def is_zero(self) -> bool:
        return all(not x.c for x in self.c)

    def norm(self) -> Real:
        return max((x.norm() for x in self.c), default=mpfr(0))

    def truncate_delta(self, hi: int) -> "TPoly":
        return TPoly(x.truncate(hi) for x in self.c)

    def __repr__(self):
        return "TPoly(" + ", ".join(f"T^{k}: {x!r}" for k, x in enumerate(self.c)) + ")"


# ---------------------------------------------------------------------------
# eps series


class EpsSeries:
    """Laurent series sum_e c[e] eps^e with TPoly coefficients, complete through eps^hi."""

    __slots__ = ("lo", "hi", "c")

    def __init__(self, c: dict | None = None, lo: int | None = None, hi: int = EXACT):
        c = {} if c is None else c
        if lo is None:
            lo = min(c) if c else min(0, hi)
        self.lo = lo
        self.hi = hi
        self.c = c

    @classmethod
    def const(cls, x) -> "EpsSeries":
        t = x if isinstance(x, TPoly) else TPoly.const(x)
        return cls({0: t}, 0, EXACT)

    @classmethod
    def from_delta(cls, coeffs: dict, hi: int) -> "EpsSeries":
        """Build from {exponent: DeltaSeries} (T-free)."""
        return cls({e: TPoly.const(v) for e, v in coeffs.items() if e <= hi}, None, hi)

    def coeff(self, e: int) -> TPoly:
        if e > self.hi:
            raise DomainError(f"eps^{e} is beyond the horizon {self.hi}")
        t = self.c.get(e)
        return t if t is not None else TPoly.const(DeltaSeries.zero())

    def delta_hi(self) -> int:
        return min((t.hi for t in self.c.values()), default=EXACT)

    def __add__(self, other: "EpsSeries") -> "EpsSeries":
        hi = _hmin(self.hi, other.hi)
        c = {e: v for e, v in self.c.items() if e <= hi}
        for e, v in other.c.items():
            if e <= hi:
                w = c.get(e)
                c[e] = v if w is None else w + v
        return EpsSeries(c, min(self.lo, other.lo), hi)

    def __neg__(self):
        return EpsSeries({e: -v for e, v in self.c.items()}, self.lo, self.hi)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, EpsSeries):
            return EpsSeries({e: v * other for e, v in self.c.items()}, self.lo, self.hi)
        hi = _hmin(_hadd(self.hi, other.lo), _hadd(other.hi, self.lo))
        c = {}
        for ea, va in self.c.items():
            for eb, vb in other.c.items():
                e = ea + eb
                if e <= hi:
                    p = va * vb
                    w = c.get(e)
                    c[e] = p if w is None else w + p
        return EpsSeries(c, self.lo + other.lo, hi)

    __rmul__ = __mul__

    def scale(self, k) -> "EpsSeries":
        return EpsSeries({e: v.scale(k) for e, v in self.c.items()}, self.lo, self.hi)

    def shift(self, k: int) -> "EpsSeries":
        """Multiply by eps^k."""
        hi = self.hi if self.hi >= EXACT // 2 else self.hi + k
        return EpsSeries({e + k: v for e, v in self.c.items()}, self.lo + k, hi)

    def truncate(self, hi: int) -> "EpsSeries":
        if hi >= self.hi:
            return self
        return EpsSeries({e: v for e, v in self.c.items() if e <= hi}, min(self.lo, hi), hi)

    def truncate_delta(self, hi: int) -> "EpsSeries":
        return EpsSeries({e: v.truncate_delta(hi) for e, v in self.c.items()}, self.lo, self.hi)

    def derivative(self) -> "EpsSeries":
        """Formal d/d eps with dT/d eps = -1/eps (T stands for -ln(-eps))."""
        out: dict = {}
        for e, tp in self.c.items():
            # eps^e T^k -> e eps^{e-1} T^k - k eps^{e-1} T^{k-1}
            pieces = []
            for k, x in enumerate(tp.c):
                if e:
                    pieces.append((k, x.scale(e)))
                if k:
                    pieces.append((k - 1, x.scale(-k)))
            if not pieces:
                continue
            n = max(k for k, _ in pieces) + 1
            coeffs = [DeltaSeries.zero(tp.hi) for _ in range(n)]
            for k, x in pieces:
                coeffs[k] = coeffs[k] + x
            t = TPoly(coeffs)
            w = out.get(e - 1)
            out[e - 1] = t if w is None else w + t
        hi = self.hi if self.hi >= EXACT // 2 else self.hi - 1
        return EpsSeries(out, self.lo - 1, hi)

    def norm(self) -> Real:
        return max((t.norm() for t in self.c.values()), default=mpfr(0))

    def __repr__(self):
        body = ", ".join(f"e^{e}: {t!r}" for e, t in sorted(self.c.items()))
        return f"EpsSeries(lo={self.lo}, hi={self.hi}; {body})"

    # serialization -------------------------------------------------------
    def to_json(self, delta_hi: int | None = None) -> dict:
        terms = []
        for e in sorted(self.c):
            for k, x in enumerate(self.c[e].c):
                item = {"eps": e, "t_pow": k}
                item.update(x.to_json(delta_hi))
                terms.append(item)
        return {"eps_lo": self.lo, "eps_hi": self.hi, "terms": terms}

    @classmethod
    def from_json(cls, data) -> "EpsSeries":
        if isinstance(data, str):
            data = json.loads(data)
        coeffs: dict = {}
        for t in data["terms"]:
            lo, hi = t["delta_lo"], t["delta_hi"]
            vals = (_parse_real(v) for v in t["delta_coeffs"])
            c = {lo + i: v for i, v in enumerate(vals) if v}
            ds = DeltaSeries(c, lo, EXACT if t.get("delta_exact") else hi)
            coeffs.setdefault(t["eps"], {})[t["t_pow"]] = ds
        out = {}
        for e, by_t in coeffs.items():
            n = max(by_t) + 1
            out[e] = TPoly(by_t.get(k, DeltaSeries.zero()) for k in range(n))
        return cls(out, data["eps_lo"], data["eps_hi"])


def _parse_real(text: str) -> Real:
    """Parse a decimal at the precision ``format_real`` printed it from."""
    digits = sum(ch.isdigit() for ch in text.split("e")[0])
    bits = max(gmpy2.get_context().precision, math.ceil((digits - 2) / 0.30103))
    return mpfr(text, bits)


def ring_add(x, y):
    return x + y


def ring_mul(x, y):
    return x * y


def ring_scale(c, x):
    return x.scale(c)


def pole_part(x: EpsSeries) -> EpsSeries:
    """Keep the exponents < 0; the result is exact beyond them when x is complete through eps^-1."""
    c = {e: v for e, v in x.c.items() if e < 0}
    hi = EXACT if x.hi >= -1 else x.hi
    return EpsSeries(c, min(x.lo, -1), hi)


def plus_part(x: EpsSeries) -> EpsSeries:
    return EpsSeries({e: v for e, v in x.c.items() if e >= 0}, 0, x.hi)


def checked_pole_part_negated(x: EpsSeries) -> EpsSeries:
    if x.hi < -1:
        raise DomainError("pole part needs the series complete through eps^-1")
    return -pole_part(x)


def eval_eps(x: EpsSeries, eps0, delta0=0):
    """Numeric value at eps = eps0 < 0, T = -ln(-eps0), delta = delta0.

    Returns ``(value, remainder)`` where the remainder is the magnitude of the
    highest retained eps block plus that of the highest retained delta terms,
    a crude estimate of the truncation error.
    """
    eps0 = eps0 if isinstance(eps0, Real) else to_real(parse_rational(eps0))
    delta0 = delta0 if isinstance(delta0, Real) else to_real(parse_rational(delta0))
    if eps0 >= 0:
        raise DomainError("eval_eps needs eps0 < 0")
    t0 = -gmpy2.log(-eps0)
    total = mpfr(0)
    last_block = mpfr(0)
    delta_rem = mpfr(0)
    top = max((e for e in x.c if e <= x.hi), default=None)
    for e, tp in x.c.items():
        block = mpfr(0)
        ep = eps0 ** e
        for k, ds in enumerate(tp.c):
            tk = t0 ** k
            for m, v in ds.c.items():
                block += v * ep * tk * delta0 ** m
            if ds.c and not ds.is_exact() and delta0:
                hm = max(ds.c)
                delta_rem += abs(ds.c[hm] * ep * tk * delta0 ** hm)
        total += block
        if e == top:
            last_block = abs(block)
    return total, last_block + delta_rem
