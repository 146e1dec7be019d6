"""Renormalized multiple q-zeta values.

Non-positive words go through the Birkhoff decomposition of the regularized
series in eps: the plus part has no pole and its eps^0 coefficient is the
directional value.  Positive words use the constant-term engine directly.
Renormalized values take the delta -> 0 limit along r_j = |s_j + f_j| + (1 + f_j) delta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Sequence

from gmpy2 import mpfr

from .constants import (QContext, Real, parse_rational, precision_context, qbern_scaled, to_real,
                        zeta_q_nonpos)
from .errors import DomainError, InvalidShift, NonConvergentSum, ResidualPole, TruncationOverflow
from .indexalg import IndexedWord, partitions, stuffle
from .regularize import (
    ZCache,
    default_cache,
    delta_pole_budget,
    pole_budget,
    z_nonpos,
    z_nonpos_alt,
    z_nonpos_auto,
    z_positive_const,
)
from .series import (
    AffineR,
    DeltaSeries,
    EpsSeries,
    TPoly,
    affine_recip_pow,
    affine_series,
    max_negative,
    pole_part,
)

_ROUTES = {"first": z_nonpos, "last": z_nonpos_alt, "auto": z_nonpos_auto}


@dataclass(frozen=True)
class RenormValue:
    """delta-limit of a directional value: coefficients of T^0, T^1, ..."""

    coeffs: tuple
    residual_delta: Real = mpfr(0)
    residual_eps: Real = mpfr(0)
    scale: Real = mpfr(1)
    route: str = "first"

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self) -> Real:
        return self.coeffs[0]

    @property
    def t_poly(self) -> TPoly:
        return TPoly(DeltaSeries.const(c) for c in self.coeffs)

    def at(self, t) -> Real:
        acc = mpfr(0)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc


@dataclass(frozen=True)
class ShiftVector:
    f: tuple[int, ...]

    def __post_init__(self):
        f = tuple(int(x) for x in self.f)
        if any(x not in (0, 1) for x in f):
            raise InvalidShift(f"shift entries must be 0 or 1, got {f}")
        object.__setattr__(self, "f", f)

    @classmethod
    def zeros(cls, d: int) -> "ShiftVector":
        return cls((0,) * d)

    def check(self, s: Sequence[int]):
        if len(s) != len(self.f):
            raise InvalidShift(f"shift {self.f} does not match argument of length {len(s)}")
        for sj, fj in zip(s, self.f):
            if fj and sj == 0:
                raise InvalidShift("an entry equal to 0 cannot be shifted")


def shifted_directions(s: Sequence[int], f: ShiftVector | Sequence[int] | None = None) -> tuple:
    """Directions |s_j + f_j| + (1 + f_j) delta."""
    f = ShiftVector.zeros(len(s)) if f is None else (f if isinstance(f, ShiftVector) else ShiftVector(f))
    f.check(s)
    return tuple(AffineR(abs(sj + fj), 1 + fj) for sj, fj in zip(s, f.f))


def _check_regime(s: Sequence[int]) -> str:
    if not s:
        raise DomainError("empty argument vector")
    if all(x <= 0 for x in s):
        return "nonpositive"
    if all(x >= 1 for x in s):
        return "positive"
    raise DomainError(f"mixed-sign argument {tuple(s)} is not supported")


def renorm_tol(ctx: QContext, cache: ZCache | None = None) -> Real:
    """Relative tolerance for cancelled poles: roundoff floor or the series truncation tolerance."""
    cache = default_cache() if cache is None else cache
    with ctx.local():
        floor = mpfr(2) ** (20 - ctx.prec)
        trunc = 1000 * to_real(parse_rational(cache.series_tol))
        return floor if floor > trunc else trunc


# ---------------------------------------------------------------------------
# Birkhoff decomposition


@dataclass
class BirkhoffResult:
    plus: EpsSeries
    residual: Real
    scale: Real
    route: str = "first"


def _neg_pole(x: EpsSeries) -> EpsSeries:
    return -pole_part(x)


def _block_series(ctx, word, eps_hi, delta_hi, cache, method):
    return _ROUTES[method](ctx, word, eps_hi, delta_hi, cache)


def birkhoff(ctx: QContext, word: IndexedWord, eps_hi: int = 0, delta_hi: int = 0,
             cache: ZCache | None = None, method: str = "first",
             fallback: str | None = "auto") -> BirkhoffResult:
    """Plus part of Z_q([s; r]) with its pole residual and the largest input norm.

    U sums Z(B_p) * Pn(Z(B_{p-1}) * Pn(... Pn(Z(B_1)))) over all splittings of the
    word into consecutive blocks, Pn being minus the pole part.  The counterterm
    of the whole word is computed independently by the deconcatenation
    recursion; their sum is the plus part and any leftover pole measures how
    well the two agree.

    If a block's correction sums do not settle along ``method``, the whole
    word is redone along ``fallback``; the route taken is reported and
    remembered in the cache.
    """
    if not word.is_nonpositive() or word.depth == 0:
        raise DomainError(f"Birkhoff decomposition needs a non-positive word, got {word}")
    for m in (method, fallback):
        if m is not None and m not in _ROUTES:
            raise DomainError(f"unknown recursion {m!r}")
    cache = default_cache() if cache is None else cache
    key = (ctx.q_exact, ctx.prec, method, word.key())
    route = cache.routes.get(key, method)
    try:
        res = _birkhoff_route(ctx, word, eps_hi, delta_hi, cache, route)
    except TruncationOverflow:
        if fallback is None or route == fallback:
            raise
        route = fallback
        res = _birkhoff_route(ctx, word, eps_hi, delta_hi, cache, route)
        cache.store(cache.routes, key, route)
    res.route = route
    return res


def _birkhoff_route(ctx, word, eps_hi, delta_hi, cache, method) -> BirkhoffResult:
    P = pole_budget(word)
    dh_in = delta_hi + delta_pole_budget(word)
    while True:
        res = _birkhoff_once(ctx, word, eps_hi, P, dh_in, cache, method)
        short = delta_hi - min(tp.hi for e, tp in res.plus.c.items() if e <= eps_hi) \
            if res.plus.c else 0
        if short <= 0:
            res.plus = res.plus.truncate_delta(delta_hi)
            return res
        dh_in += short


def _birkhoff_once(ctx, word, eps_hi, P, dh_in, cache, method) -> BirkhoffResult:
    zs: dict = {}
    scale = mpfr(0)

    def Z(lo: int, hi: int) -> EpsSeries:
        nonlocal scale
        key = (lo, hi)
        if key not in zs:
            sub = word[lo:hi]
            zs[key] = _block_series(ctx, sub, eps_hi + P - pole_budget(sub), dh_in, cache, method)
            n = zs[key].norm()
            if n > scale:
                scale = n
        return zs[key]

    with ctx.local():
        d = word.depth
        # explicit nested sum over splittings
        U = None
        for cut in partitions(d):
            edges = (0,) + cut
            inner = None
            for b in range(len(cut) - 1):
                z = Z(edges[b], edges[b + 1])
                inner = _neg_pole(z if inner is None else z * inner)
            last = Z(edges[-2], edges[-1])
            term = last if inner is None else last * inner
            U = term if U is None else U + term
        # counterterms of prefixes by recursion
        minus: dict = {}
        for k in range(1, d + 1):
            acc = Z(0, k)
            for j in range(1, k):
                acc = acc + minus[j] * Z(j, k)
            minus[k] = _neg_pole(acc)
        plus = (U + minus[d]).truncate(eps_hi)
        residual = mpfr(0)
        for e, tp in plus.c.items():
            if e < 0:
                n = tp.norm()
                if n > residual:
                    residual = n
        kept = {e: tp for e, tp in plus.c.items() if e >= 0}
        return BirkhoffResult(EpsSeries(kept, 0, plus.hi), residual, scale)


def birkhoff_plus(ctx: QContext, word: IndexedWord, eps_hi: int = 0, delta_hi: int = 0,
                  cache: ZCache | None = None, method: str = "first", tol=None) -> EpsSeries:
    """Pole-free plus part through eps^eps_hi; ResidualPole if the poles do not cancel."""
    res = birkhoff(ctx, word, eps_hi, delta_hi, cache, method)
    tol = renorm_tol(ctx, cache) if tol is None else tol
    if res.residual > tol * max(res.scale, 1):
        raise ResidualPole(-1, res.residual, "Birkhoff plus part kept a pole: "
                           f"{float(res.residual):.3e} against scale {float(res.scale):.3e}")
    return res.plus


# ---------------------------------------------------------------------------
# directional and renormalized values


def zeta_directional(ctx: QContext, word: IndexedWord, delta_hi: int = 0,
                     cache: ZCache | None = None, method: str = "first") -> TPoly:
    """eps^0 coefficient of the plus part, still a series in delta."""
    regime = _check_regime(word.s)
    if regime == "positive":
        return z_positive_const(ctx, word, delta_hi, cache)
    return birkhoff_plus(ctx, word, 0, delta_hi, cache, method).coeff(0)


def _directional_with_residual(ctx, word, delta_hi, cache, method):
    if word.is_positive():
        return z_positive_const(ctx, word, delta_hi, cache), mpfr(0), mpfr(1), "positive"
    res = birkhoff(ctx, word, 0, delta_hi, cache, method)
    return res.plus.coeff(0), res.residual, res.scale, res.route


def zeta_renorm_shifted(ctx: QContext, s: Sequence[int], f, cache: ZCache | None = None,
                        tol=None, method: str = "first", strict: bool = True) -> RenormValue:
    """delta -> 0 limit of the directional value along the shifted directions.

    With ``strict`` a pole left in eps or delta beyond tolerance raises
    ResidualPole; otherwise the value is returned with its residuals.
    """
    s = tuple(int(x) for x in s)
    _check_regime(s)
    word = IndexedWord(s, shifted_directions(s, f))
    tp, res_eps, scale, route = _directional_with_residual(ctx, word, 0, cache, method)
    tol = renorm_tol(ctx, cache) if tol is None else tol
    with ctx.local():
        scale = max(scale, max((c.norm() for c in tp.c), default=mpfr(0)), mpfr(1))
        bound = tol * scale
        if strict and res_eps > bound:
            raise ResidualPole(-1, res_eps)
        res_delta = mpfr(0)
        coeffs = []
        for ds in tp.c:
            if ds.hi < 0:
                raise DomainError("directional value is not complete through delta^0")
            m = max_negative(ds)
            if m > res_delta:
                res_delta = m
            if strict and m > bound:
                e = min(k for k, v in ds.c.items() if k < 0 and abs(v) == m)
                raise ResidualPole(e, m)
            coeffs.append(+ds.coeff(0))
        return RenormValue(tuple(coeffs), res_delta, res_eps, scale, route)


def zeta_renorm(ctx: QContext, s: Sequence[int], cache: ZCache | None = None, tol=None,
                method: str = "first", strict: bool = True) -> RenormValue:
    s = tuple(int(x) for x in s)
    return zeta_renorm_shifted(ctx, s, ShiftVector.zeros(len(s)), cache, tol, method, strict)


# ---------------------------------------------------------------------------
# depth-2 closed form


def _ratio_series(r1: AffineR, r2: AffineR, dh: int) -> tuple[DeltaSeries, Real]:
    """x = -r1/(r1 + r2) as a delta series and |x| at delta = 0."""
    R = r1 + r2
    x = -(affine_series(r1) * affine_recip_pow(R, 1, dh + (1 if R.a == 0 else 0)))
    x = x.truncate(dh)
    if R.a > 0:
        x0 = Fraction(r1.a, R.a)
    else:
        x0 = Fraction(r1.b, R.b)
    return x, x0


def depth2_closed_form(ctx: QContext, s1: int, s2: int, r1, r2, delta_hi: int = 4,
                       tol=None, max_terms: int = 20000, printed_index: bool = False) -> DeltaSeries:
    """Directional value of [s1, s2; r1, r2] for s1, s2 <= 0 from its explicit formula.

    The product block is sum_j C(-s1, j) sum_i C(1-j-s1, i) (1-q)^i
    zeta_q(s2-j-i) zeta_q(s1+j): it is the eps^0 part of the double sum whose
    inner series starts at (r1 eps)^0.  ``printed_index`` uses zeta_q(s1+j-1)
    there instead, which disagrees with the expansion by that block's difference.

    The l-sum is geometric in x = -r1/(r1 + r2).  It is cut once the envelope
    C(l+1, t+1) |w_l| ||x^{l+m}|| / (l+m), with w_l = (1-q)^l zeta_q(-l), shrinks by
    a steady ratio and its geometric tail falls below ``tol`` relative to the
    largest term.  At |x(0)| = 1 the expansion in delta does not converge.
    """
    s1, s2 = int(s1), int(s2)
    if s1 > 0 or s2 > 0:
        raise DomainError("closed form needs s1, s2 <= 0")
    r1 = r1 if isinstance(r1, AffineR) else AffineR(r1)
    r2 = r2 if isinstance(r2, AffineR) else AffineR(r2)
    t = 1 - s1 - s2
    n1 = -s1
    with ctx.local():
        k = ctx.kappa
        omq = ctx.one_minus_q
        tol = mpfr(2) ** (-ctx.prec - 8) if tol is None else to_real(parse_rational(tol))
        x, x0 = _ratio_series(r1, r2, delta_hi)
        if x0 >= 1:
            raise NonConvergentSum(
                f"closed form sums powers of -r1/(r1+r2) = {x0} in modulus at delta = 0", ratio=x0)
        acc = DeltaSeries.const(k * zeta_q_nonpos(ctx, 1 - s1 - s2) / (s1 - 1))
        # powers of x, grown on demand
        pows = [DeltaSeries.const(1)]

        def xpow(m):
            while len(pows) <= m:
                pows.append((pows[-1] * x).truncate(delta_hi))
            return pows[m]

        exact_zero_from = None
        if x0 == 0:
            exact_zero_from = delta_hi + 1  # x^m = O(delta^m)
        scale_t = omq ** (-t)
        for j in range(n1 + 1):
            m0 = s1 + j
            inner = DeltaSeries.zero(delta_hi)
            best = mpfr(0)
            prev = None
            steady = 0
            l = t
            while True:
                m = l + m0
                if exact_zero_from is not None and m >= exact_zero_from:
                    break
                if l - t > max_terms:
                    raise NonConvergentSum("closed-form sum did not settle", ratio=x0)
                coef = comb(l + 1, t + 1) * qbern_scaled(ctx, l) * scale_t / m
                term = xpow(m).scale(coef)
                inner = inner + term
                env = abs(comb(l + 1, t + 1) * scale_t / m) * _wbound(ctx, l) * xpow(m).norm()
                if env > best:
                    best = env
                if prev is not None and prev > 0:
                    rho = env / prev
                    if rho < 1 and env * rho / (1 - rho) <= tol * best:
                        steady += 1
                        if steady >= 3:
                            break
                    else:
                        steady = 0
                prev = env
                l += 1
            acc = acc + inner.scale(k * comb(n1, j))
        for j in range(n1 + 1):
            top = 1 - j - s1
            for i in range(top + 1):
                c = comb(n1, j) * comb(top, i) * omq ** i
                last = -(s1 + j) + (1 if printed_index else 0)
                acc = acc + DeltaSeries.const(
                    c * zeta_q_nonpos(ctx, j + i - s2) * zeta_q_nonpos(ctx, last))
        return acc.truncate(delta_hi)


def _wbound(ctx: QContext, l: int) -> Real:
    """Bound on |(1-q)^l zeta_q(-l)|."""
    return (2 / abs(ctx.ln_q) + 1) / (l + 1)


# ---------------------------------------------------------------------------
# stuffle verification


@dataclass
class StuffleTerm:
    coeff: Real
    s: tuple
    f: tuple
    value: RenormValue


@dataclass
class StuffleReport:
    s1: tuple
    s2: tuple
    lhs: tuple
    rhs: tuple
    max_abs_diff: Real
    max_rel_diff: Real
    terms: list = field(default_factory=list)

    def ok(self, rel_tol) -> bool:
        return self.max_rel_diff <= rel_tol


def _tmul(a: tuple, b: tuple) -> list:
    out = [mpfr(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def verify_stuffle(ctx: QContext, s1: Sequence[int], s2: Sequence[int], regime: str | None = None,
                   cache: ZCache | None = None, method: str = "first") -> StuffleReport:
    """Compare zeta(s1) zeta(s2) with the shifted renormalizations over the q-stuffle."""
    s1, s2 = tuple(int(x) for x in s1), tuple(int(x) for x in s2)
    g1, g2 = _check_regime(s1), _check_regime(s2)
    if g1 != g2 or (regime is not None and regime != g1):
        raise DomainError(f"{s1} and {s2} are not both in the {regime or g1} regime")
    with ctx.local():
        a = zeta_renorm(ctx, s1, cache, method=method, strict=False)
        b = zeta_renorm(ctx, s2, cache, method=method, strict=False)
        lhs = _tmul(a.coeffs, b.coeffs)
        w1, w2 = IndexedWord.of(s1), IndexedWord.of(s2)
        rhs: list = []
        terms = []
        for tm in stuffle(w1, w2, ctx):
            v = zeta_renorm_shifted(ctx, tm.word.s, ShiftVector(tm.stuffing), cache,
                                    method=method, strict=False)
            terms.append(StuffleTerm(tm.coeff, tm.word.s, tm.stuffing, v))
            while len(rhs) < len(v.coeffs):
                rhs.append(mpfr(0))
            for i, c in enumerate(v.coeffs):
                rhs[i] += tm.coeff * c
        n = max(len(lhs), len(rhs))
        lhs += [mpfr(0)] * (n - len(lhs))
        rhs += [mpfr(0)] * (n - len(rhs))
        diff = max(abs(x - y) for x, y in zip(lhs, rhs))
        size = max(max(abs(x) for x in lhs), max(abs(y) for y in rhs))
        rel = diff / size if size else diff
        return StuffleReport(s1, s2, tuple(lhs), tuple(rhs), diff, rel, terms)


# ---------------------------------------------------------------------------
# q -> 1 limits


@dataclass
class LimitReport:
    target: tuple
    qs: list
    values: list
    richardson: list
    limit: Real
    stability: Real
    monotone: bool


def q_limit_probe(ctx_family: Sequence[QContext], target: Sequence[int],
                  cache: ZCache | None = None) -> LimitReport:
    """Renormalized values along q_k -> 1 with one Richardson step per level.

    Each level assumes value(k) = L + c (1 - q_k) + o(1 - q_k), so that
    consecutive levels with (1 - q) ratio rho extrapolate to
    (v_k - rho v_{k-1}) / (1 - rho).  ``stability`` is the change in the last
    extrapolate; ``monotone`` reports whether |v_k - limit| shrinks at every step.
    """
    target = tuple(int(x) for x in target)
    ctxs = list(ctx_family)
    if len(ctxs) < 2:
        raise DomainError("need at least two values of q")
    qs = [c.q_exact for c in ctxs]
    if any(not (a < b) for a, b in zip(qs, qs[1:])):
        raise DomainError("q values must increase towards 1")
    vals = [zeta_renorm(c, target, cache).value for c in ctxs]
    prec = max(c.prec for c in ctxs)
    with precision_context(prec):
        rich = []
        for k in range(1, len(vals)):
            rho = to_real((1 - qs[k]) / (1 - qs[k - 1]))
            rich.append((vals[k] - rho * vals[k - 1]) / (1 - rho))
        limit = rich[-1]
        stability = abs(rich[-1] - rich[-2]) if len(rich) > 1 else abs(vals[-1] - vals[-2])
        errs = [abs(v - limit) for v in vals]
        monotone = all(b <= a for a, b in zip(errs, errs[1:]))
    return LimitReport(target, qs, vals, rich, limit, stability, monotone)
