"""Scalar constants: q-brackets, q-Bernoulli values, convergent multiple
q-zeta sums and the Euler-Maclaurin constant M(q).

Every scalar is a ``gmpy2.mpfr``.  A :class:`QContext` fixes q and a working
precision; functions taking a context evaluate inside ``ctx.local()`` so that
their arithmetic runs at the context precision regardless of the caller's
global gmpy2 settings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import wraps

import gmpy2
from gmpy2 import mpfr, mpq

from .errors import DomainError, QuadratureFailure

DEFAULT_PRECISION = 256
MIN_PRECISION = 64

Real = type(mpfr(0))


def precision_context(bits: int):
    """Context manager running gmpy2 arithmetic at ``bits`` of mantissa."""
    return gmpy2.context(gmpy2.get_context(), precision=int(bits))


def parse_rational(value) -> Fraction:
    """Exact rational from a decimal string, int, Fraction or float.

    Floats are converted exactly (binary value), strings as written, so
    ``"0.3"`` gives 3/10.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, type(mpq())):
        return Fraction(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot interpret {value!r} as a rational")


def to_real(x) -> Real:
    """Convert ints, Fractions and mpq values to mpfr at the current precision."""
    if isinstance(x, Fraction):
        return mpfr(mpq(x.numerator, x.denominator))
    return mpfr(x)


@dataclass(frozen=True, eq=False)
class QContext:
    """Fixed base q in (0, 1) together with a working precision.

    ``q_exact`` keeps the rational the context was built from; ``q``,
    ``ln_q``, ``one_minus_q`` and ``kappa = (q - 1)/ln q`` are cached mpfr
    values.  ``cache`` holds per-context memo tables (q-Bernoulli values,
    M(q), ...); it is excluded from equality.
    """

    q_exact: Fraction
    prec: int = DEFAULT_PRECISION
    q: Real = field(init=False)
    ln_q: Real = field(init=False)
    one_minus_q: Real = field(init=False)
    kappa: Real = field(init=False)
    cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        qx = parse_rational(self.q_exact)
        if not (0 < qx < 1):
            raise DomainError(f"q must lie strictly inside (0, 1), got {qx}")
        if self.prec < MIN_PRECISION:
            raise DomainError(f"precision must be at least {MIN_PRECISION} bits")
        object.__setattr__(self, "q_exact", qx)
        with precision_context(self.prec):
            q = to_real(qx)
            ln_q = gmpy2.log(q)
            omq = to_real(1 - qx)
            object.__setattr__(self, "q", q)
            object.__setattr__(self, "ln_q", ln_q)
            object.__setattr__(self, "one_minus_q", omq)
            object.__setattr__(self, "kappa", (q - 1) / ln_q)

    @classmethod
    def make(cls, q="0.5", prec: int = DEFAULT_PRECISION) -> "QContext":
        return cls(parse_rational(q), int(prec))

    def local(self, extra: int = 0):
        return precision_context(self.prec + extra)

    def memo(self, name: str) -> dict:
        return self.cache.setdefault(name, {})

    def __repr__(self):
        return f"QContext(q={self.q_exact}, prec={self.prec})"


def at_precision(fn):
    """Run ``fn(ctx, ...)`` at the context precision."""

    @wraps(fn)
    def wrapper(ctx, *args, **kwargs):
        with ctx.local():
            return fn(ctx, *args, **kwargs)

    return wrapper


def euler_gamma(precision_bits: int = DEFAULT_PRECISION) -> Real:
    if precision_bits < MIN_PRECISION:
        raise DomainError(f"precision must be at least {MIN_PRECISION} bits")
    with precision_context(precision_bits):
        return gmpy2.const_euler()


def harmonic(n: int) -> Real:
    """H_n = 1 + 1/2 + ... + 1/n, with H_0 = 0, at the current precision."""
    if n < 0:
        raise DomainError("harmonic numbers need n >= 0")
    total = Fraction(0)
    for k in range(1, n + 1):
        total += Fraction(1, k)
    return to_real(total)


@at_precision
def q_bracket(ctx: QContext, r) -> Real:
    r = to_real(r) if not isinstance(r, Real) else r
    return (1 - ctx.q ** r) / ctx.one_minus_q


def periodic_bernoulli2(x) -> Real:
    """B_2 of the fractional part of x (x >= 1)."""
    x = to_real(x) if not isinstance(x, Real) else x
    if x < 1:
        raise DomainError("periodic_bernoulli2 is evaluated on x >= 1")
    f = x - gmpy2.floor(x)
    return f * f - f + mpfr(1) / 6


# ---------------------------------------------------------------------------
# q-Bernoulli values zeta_q(-l)


def _qbern_scaled(ctx: QContext, l: int) -> Real:
    """(1 - q)^l zeta_q(-l) from the finite binomial formula.

    The alternating binomial sum cancels roughly l bits, plus a few more when
    q is close to 1, so it is evaluated with that many guard bits.
    """
    guard = l + 64 + max(0, int(-math.log2(float(1 - ctx.q_exact)))) * 2
    with precision_context(ctx.prec + guard):
        q = to_real(ctx.q_exact)
        ln_q = gmpy2.log(q)
        total = mpfr(0)
        binom = 1
        qpow = q ** (l + 1)  # q^{l+1-r} for r = 0
        qinv = 1 / q
        for r in range(l + 1):
            term = binom / (qpow - 1)
            total += -term if r & 1 else term
            binom = binom * (l - r) // (r + 1)
            qpow *= qinv
        sign = -1 if l % 2 == 0 else 1  # (-1)^{l+1}
        total += sign / ((l + 1) * ln_q)
    with ctx.local():
        return +total


def zeta_q_nonpos(ctx: QContext, l: int) -> Real:
    """zeta_q(-l) for integer l >= 0 via the finite binomial closed form."""
    if l < 0:
        raise DomainError("zeta_q_nonpos needs l >= 0")
    table = ctx.memo("zeta_nonpos")
    val = table.get(l)
    if val is None:
        scaled = qbern_scaled(ctx, l)
        with ctx.local():
            val = scaled / ctx.one_minus_q ** l
        table[l] = val
    return val


def qbern_scaled(ctx: QContext, l: int) -> Real:
    """(1 - q)^l zeta_q(-l); bounded by roughly (2/|ln q| + 1)/(l + 1)."""
    table = ctx.memo("qbern_scaled")
    val = table.get(l)
    if val is None:
        val = _qbern_scaled(ctx, l)
        table[l] = val
    return val


# ---------------------------------------------------------------------------
# convergent multiple q-zeta values


def _check_convergent(s):
    s = tuple(int(v) for v in s)
    if not s:
        raise DomainError("empty argument vector")
    if s[0] <= 1 or any(v <= 0 for v in s):
        raise DomainError(f"{s} is outside the convergent region (s1 >= 2, si >= 1)")
    return s


def zeta_q_convergent_with_bound(ctx: QContext, s, tail_tol=None):
    """Nested sum over k1 > ... > kd > 0 and a certified tail bound.

    The inner sums are accumulated on the fly.  Each term factor satisfies
    g_j(k) <= q^{k (s_j - 1)} because [k] >= 1, so the inner sum below k is at
    most C k^{n1} with n1 the number of inner entries equal to 1, and the
    tail of the outer sum is bounded by a geometric series.
    """
    s = _check_convergent(s)
    with ctx.local():
        tol = mpfr("1e-20") if tail_tol is None else to_real(parse_rational(tail_tol)) if not isinstance(tail_tol, Real) else tail_tol
        q = ctx.q
        d = len(s)
        n1 = sum(1 for v in s[1:] if v == 1)
        # constant for inner sums: prod over s_j >= 2 of q^{s_j-1}/(1-q^{s_j-1})
        cinner = mpfr(1)
        for v in s[1:]:
            if v >= 2:
                cinner *= q ** (v - 1) / (1 - q ** (v - 1))
        rho0 = q ** (s[0] - 1)
        # prefix[m] = sum over k' < k of T_{m}(k'), innermost first
        partial = [mpfr(0)] * (d + 1)
        partial[d] = mpfr(1)  # empty product for the innermost level
        total = mpfr(0)
        qk = mpfr(1)
        k = 0
        bound = None
        while True:
            k += 1
            qk *= q
            br = (1 - qk) / ctx.one_minus_q
            # T_m(k) = g_m(k) * partial_{m+1}(k-1), from innermost outwards
            new = [None] * d
            for m in range(d - 1, -1, -1):
                g = qk ** (s[m] - 1) / br ** s[m]
                new[m] = g * partial[m + 1]
            for m in range(d):
                partial[m] += new[m]
            total = partial[0]
            if k >= 8 and k % 4 == 0:
                ratio = rho0 * (mpfr(k + 2) / (k + 1)) ** n1
                if ratio < 1:
                    head = q ** ((k + 1) * (s[0] - 1)) * mpfr(k + 1) ** n1 * cinner
                    bound = head / (1 - ratio)
                    if bound <= tol * max(1, abs(total)):
                        return total, bound
            if k > 200000:
                raise QuadratureFailure("convergent sum did not reach its tail tolerance")


@at_precision
def zeta_q_convergent(ctx: QContext, s, tail_tol=None) -> Real:
    return zeta_q_convergent_with_bound(ctx, s, tail_tol)[0]


# ---------------------------------------------------------------------------
# M(q)


def _b2_moment_integral(lam: Real) -> Real:
    """I(lam) = integral over [0, 1] of B_2(t) exp(-lam t) dt, lam > 0."""
    if lam < 1:
        # sum_n (-lam)^n/n! * int t^n B_2(t) dt with cached rational moments
        moments = _b2_moments(gmpy2.get_context().precision)
        total = mpfr(0)
        term = mpfr(1)
        eps = mpfr(2) ** (-gmpy2.get_context().precision - 8)
        for n, mom in enumerate(moments):
            total += term * mom
            term = term * (-lam) / (n + 1)
            if n > 4 and abs(term) < eps:
                return total
        raise QuadratureFailure("moment series for I(lam) exhausted")
    e = gmpy2.exp(-lam)
    j0 = (1 - e) / lam
    j1 = (1 - e * (1 + lam)) / lam ** 2
    j2 = (2 - e * (lam * lam + 2 * lam + 2)) / lam ** 3
    return j2 - j1 + j0 / 6


def _b2_moments(prec: int):
    """Moments int_0^1 t^n B_2(t) dt, n < prec, as mpfr values."""
    moments = _MOMENT_CACHE.get(prec)
    if moments is None:
        moments = [
            to_real(Fraction(1, n + 3) - Fraction(1, n + 2) + Fraction(1, 6 * (n + 1)))
            for n in range(prec)
        ]
        _MOMENT_CACHE[prec] = moments
    return moments


_MOMENT_CACHE: dict = {}


def _integrand(q: Real, x: Real) -> Real:
    w = q ** x
    v = 1 - w
    return (2 - 3 * v + v * v) / v ** 3


def _legendre(n: int, x: Real):
    p0, p1 = mpfr(1), x
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    return p1, n * (x * p1 - p0) / (x * x - 1)


def _gauss_legendre(n: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    prec = gmpy2.get_context().precision
    key = (n, prec)
    cached = _GL_CACHE.get(key)
    if cached is None:
        nodes, weights = [], []
        with precision_context(prec + 32):
            pi = gmpy2.const_pi()
            stop = mpfr(2) ** (-prec - 8)
            for i in range(1, n + 1):
                x = gmpy2.cos(pi * (i - mpfr(1) / 4) / (n + mpfr(1) / 2))
                for _ in range(200):
                    p, dp = _legendre(n, x)
                    dx = p / dp
                    x -= dx
                    if abs(dx) < stop:
                        break
                p, dp = _legendre(n, x)
                nodes.append(x)
                weights.append(2 / ((1 - x * x) * dp * dp))
        cached = ([+x for x in nodes], [+w for w in weights])
        _GL_CACHE[key] = cached
    return cached


_GL_CACHE: dict = {}


def _tail_series(ctx: QContext, x0: int, tol: Real, max_terms: int):
    """Integral of B~_2(x) g(x) over [x0, inf) through g = sum m^2 q^{m x}.

    Each m contributes m^2 q^{m x0} I(m |ln q|)/(1 - q^m).  Using |I| <= 1/6
    the remainder after m terms is at most sum_{m' > m} m'^2 q^{m' x0}/(6 (1-q)),
    bounded geometrically once the ratio drops below one.
    """
    q = ctx.q
    lam1 = -ctx.ln_q
    qx0 = q ** x0
    total = mpfr(0)
    qm = mpfr(1)
    qmx = mpfr(1)
    for m in range(1, max_terms + 1):
        qm *= q
        qmx *= qx0
        term = m * m * qmx * _b2_moment_integral(m * lam1) / (1 - qm)
        total += term
        ratio = qx0 * (mpfr(m + 2) / (m + 1)) ** 2
        if ratio < 1 and m >= 2:
            nxt = (m + 1) ** 2 * qmx * qx0 / (6 * ctx.one_minus_q)
            rem = nxt / (1 - ratio)
            if rem <= tol:
                return total, rem
    raise QuadratureFailure(
        f"tail series for M(q) needs more than {max_terms} terms to reach {float(tol):.2e}"
    )


def _panel_integral(ctx: QContext, a: int, b: int, nodes: int) -> Real:
    xs, ws = _gauss_legendre(nodes)
    q = ctx.q
    total = mpfr(0)
    half = mpfr(1) / 2
    for n in range(a, b):
        mid = n + half
        for x, w in zip(xs, ws):
            t = half * x + half  # fractional part inside the panel
            total += w * (t * t - t + mpfr(1) / 6) * _integrand(q, mid + half * x)
    return total * half


def _adaptive_head(ctx: QContext, a: int, b: int) -> Real:
    import mpmath

    with mpmath.workprec(ctx.prec + 16):
        q = mpmath.mpf(ctx.q_exact.numerator) / ctx.q_exact.denominator

        def f(x):
            t = x - mpmath.floor(x)
            w = q ** x
            return (t * t - t + mpmath.mpf(1) / 6) * w * (1 + w) / (1 - w) ** 3

        acc = mpmath.fsum(mpmath.quad(f, [n, n + 1]) for n in range(a, b))
        return mpfr(mpmath.nstr(acc, mpmath.mp.dps + 3))


def _m_from_integral(ctx: QContext, integral: Real) -> Real:
    q, lq = ctx.q, ctx.ln_q
    return q - mpfr(1) / 2 + q / 12 * lq / (q - 1) - ctx.one_minus_q * lq * lq / 2 * integral


def _default_quad_tol(ctx):
    return mpfr(2) ** (20 - ctx.prec)


@at_precision
def m_of_q_with_bound(ctx: QContext, quad_tol=None, method: str = "gauss", nodes=None):
    """M(q) and an error bound on the B~_2 integral.

    ``method``:
      * ``"gauss"``  unit Gauss-Legendre panels on [1, X] plus the exact
        exponential-sum representation of the remainder beyond X;
      * ``"series"`` the exponential-sum representation on all of [1, inf);
      * ``"adaptive"`` mpmath tanh-sinh quadrature panel by panel on [1, X]
        with the same remainder treatment (slow, used as a cross-check).
    """
    tol = _default_quad_tol(ctx) if quad_tol is None else to_real(parse_rational(quad_tol)) if not isinstance(quad_tol, Real) else quad_tol
    if tol <= 0:
        raise DomainError("quad_tol must be positive")
    scale = ctx.one_minus_q * ctx.ln_q ** 2 / 2
    itol = tol / scale / 2
    if method == "series":
        integral, bound = _tail_series(ctx, 1, itol, 10_000_000)
        return _m_from_integral(ctx, integral), bound * scale
    if method not in ("gauss", "adaptive"):
        raise DomainError(f"unknown quadrature method {method!r}")
    # panels up to X, then the exponential sum, whose ratio is q^X
    x_hi = 32 if ctx.q_exact <= Fraction(15, 16) else 256
    tail, tail_bound = _tail_series(ctx, x_hi, itol, 10_000_000)
    if method == "gauss":
        if nodes is None:
            # Bernstein ellipse for [1, 2] around the pole at x = 0 has rho ~ 5.8
            nodes = int(ctx.prec * 0.6931 / (2 * 1.76)) + 8
        head = _panel_integral(ctx, 1, x_hi, nodes)
    else:
        head = _adaptive_head(ctx, 1, x_hi)
    return _m_from_integral(ctx, head + tail), tail_bound * scale


def m_of_q(ctx: QContext, quad_tol=None, method: str = "gauss") -> Real:
    table = ctx.memo("m_of_q")
    key = (method, None if quad_tol is None else str(quad_tol))
    val = table.get(key)
    if val is None:
        val = m_of_q_with_bound(ctx, quad_tol, method)[0]
        table[key] = val
    return val
