"""Regularized multiple q-zeta series Z_q([s; r]; eps) as Laurent series in eps.

Coefficients of non-positive words are addressed by *offset*: for a word w
with pole budget P(w) = sum_j (1 - s_j), the coefficient of eps^e lives at
offset o = e + P(w) >= 0.  Both depth recursions map an offset of the word to
offsets of shorter words, which keeps the bookkeeping integral and lets the
infinite inner sums be truncated adaptively instead of by a fixed order.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import gmpy2
from gmpy2 import mpfr

from .constants import (
    QContext,
    Real,
    euler_gamma,
    m_of_q,
    parse_rational,
    precision_context,
    to_real,
    zeta_q_convergent,
    zeta_q_nonpos,
    qbern_scaled,
)
from .errors import DomainError, NonConvergentSum, TruncationOverflow
from .indexalg import IndexedWord, stuffle
from .series import (
    EXACT,
    AffineR,
    DeltaSeries,
    EpsSeries,
    TPoly,
    affine_log,
    affine_pow,
    affine_recip_pow,
)

DEFAULT_GUARD_BITS = 64
DEFAULT_SERIES_TOL = Fraction(1, 10 ** 30)
DEFAULT_MAX_TERMS = 1500


def pole_budget(word: IndexedWord) -> int:
    return sum(1 - s for s in word.s)


def delta_pole_budget(word: IndexedWord) -> int:
    """Bound on the delta pole order: letters with a vanishing constant direction."""
    return sum(1 - s for s, r in zip(word.s, word.r) if r.a == 0)


@dataclass(frozen=True)
class ZRequest:
    word: IndexedWord
    eps_hi: int = 4
    delta_hi: int = 4

    def __post_init__(self):
        if self.eps_hi < 0 or self.delta_hi < 0:
            raise DomainError("eps_hi and delta_hi must be non-negative")

    def key(self):
        return (self.word.key(), self.eps_hi, self.delta_hi)


# ---------------------------------------------------------------------------
# coefficient engine


class _HTable:
    """H_u(N, t) = sum_j C(N, j) g_u(t - j), built row by row with Pascal's rule.

    g_u(l) = w_l (1 - q)^{1-u} C(l + 1, u) with w_l = (1 - q)^l zeta_q(-l).
    Row N stores t = N, N+1, ... only.
    """

    def __init__(self, engine: "_Engine", u: int):
        self.engine = engine
        self.u = u
        self.rows: list[list] = []

    def _g(self, l: int) -> Real:
        if l < 0 or self.u > l + 1:
            return mpfr(0)
        e = self.engine
        return e.w(l) * e.omq_pow(1 - self.u) * comb(l + 1, self.u)

    def get(self, n: int, t: int) -> Real:
        rows = self.rows
        if n < len(rows):
            row = rows[n]
            if t - n < len(row):
                return row[t - n]
        self._extend(n, t + 48)
        return self.rows[n][t - n]

    def _extend(self, n: int, t: int):
        rows = self.rows
        with precision_context(self.engine.hp):
            while len(rows) <= n:
                rows.append([])
            for m in range(n + 1):
                row = rows[m]
                need = t - m
                if len(row) > need:
                    continue
                if m == 0:
                    while len(row) <= need:
                        row.append(self._g(len(row)))
                else:
                    prev = rows[m - 1]
                    # H(m, m+i) = H(m-1, m+i) + H(m-1, m+i-1) = prev[i+1] + prev[i]
                    while len(row) <= need:
                        i = len(row)
                        row.append(prev[i + 1] + prev[i])


class _Engine:
    """Offset-indexed coefficients Zc(word, o) for non-positive words.

    Words are plain pairs ``(s, r)`` of tuples here.  ``method`` selects the
    recursion: "first" peels the leading letter, "last" peels the trailing
    letter and splits off the diagonal k_{d-1} = k_d explicitly, and "auto"
    peels whichever letter gives the fastest-converging correction sums.
    """

    def __init__(self, ctx: QContext, guard: int = DEFAULT_GUARD_BITS,
                 series_tol=DEFAULT_SERIES_TOL, max_terms: int = DEFAULT_MAX_TERMS):
        self.ctx = ctx
        self.wp = ctx.prec + guard
        self.hp = self.wp + 128
        self.wctx = QContext(ctx.q_exact, self.wp)
        self.max_terms = max_terms
        with precision_context(self.wp):
            self.tol = to_real(parse_rational(series_tol))
            self.kappa = self.wctx.kappa
            self.omq = self.wctx.one_minus_q
        self.memo: dict = {}
        self.htables: dict = {}
        self._pow_cache: dict = {}
        self._z1_cache: dict = {}
        self._omq_pows: dict = {}
        self.lock = threading.RLock()
        self._interned: dict = {}

    def intern(self, r: AffineR) -> AffineR:
        return self._interned.setdefault(r, r)

    # scalar helpers -------------------------------------------------------
    def w(self, l: int) -> Real:
        return qbern_scaled(self.wctx, l)

    def zeta_np(self, sigma: int) -> Real:
        return zeta_q_nonpos(self.wctx, -sigma)

    def omq_pow(self, k: int) -> Real:
        v = self._omq_pows.get(k)
        if v is None:
            qx = self.ctx.q_exact
            with precision_context(self.hp):
                v = (to_real(qx.denominator - qx.numerator) / qx.denominator) ** k
            self._omq_pows[k] = v
        return v

    def htab(self, u: int) -> _HTable:
        tab = self.htables.get(u)
        if tab is None:
            tab = self.htables[u] = _HTable(self, u)
        return tab

    def rpow(self, r: AffineR, k: int, dh: int) -> DeltaSeries:
        """r^k / k! for k >= 0, or r^k for k < 0, complete through dh."""
        key = (r, k, dh)
        v = self._pow_cache.get(key)
        if v is None:
            if k >= 0:
                v = affine_pow(r, k, dh).scale(1 / to_real(factorial(k)))
            else:
                v = affine_recip_pow(r, -k, dh)
            self._pow_cache[key] = v
        return v

    # depth 1 --------------------------------------------------------------
    def zc1(self, sigma: int, r: AffineR, o: int, dh: int) -> DeltaSeries:
        key = (sigma, r, o, dh)
        v = self._z1_cache.get(key)
        if v is not None:
            return v
        n = 1 - sigma
        if o == 0:
            c = self.kappa * factorial(n - 1)
            if n & 1:
                c = -c
            v = self.rpow(r, -n, dh).scale(c)
        elif o < n:
            v = _ZERO
        else:
            e = o - n
            v = self.rpow(r, e, dh).scale(self.zeta_np(sigma - e))
        self._z1_cache[key] = v
        return v

    # dispatch ---------------------------------------------------------------
    def zc(self, method: str, s: tuple, r: tuple, o: int, dh: int) -> DeltaSeries:
        if o < 0:
            return _ZERO
        if len(s) == 1:
            return self.zc1(s[0], r[0], o, dh)
        key = (method, s, r, o)
        hit = self.memo.get(key)
        if hit is not None and hit.hi >= dh:
            return hit if hit.hi == dh else hit.truncate(dh)
        with precision_context(self.wp):
            if method == "first":
                val = self._first(s, r, o, dh)
            elif method == "last":
                val = self._last(s, r, o, dh)
            else:
                val = self._peel(method, _best_peel(r), s, r, o, dh)
        with self.lock:
            old = self.memo.get(key)
            if old is None or old.hi < val.hi:
                self.memo[key] = val
        return val.truncate(dh)

    # shared correction sum ------------------------------------------------
    def _correction(self, method, n_peel: int, r_peel: AffineR, r_merged: AffineR,
                    make_sub, sigma0: int, rest_budget: int, o: int, dh: int) -> DeltaSeries:
        """Sum over m >= 1 of the peeled letter at k + m, expanded in eps.

        ``make_sub(sigma)`` returns the shorter word ``(s, r)`` whose merged
        letter has exponent ``sigma`` and direction ``r_merged``; ``sigma0``
        is the unshifted exponent of that letter.
        """
        N = n_peel
        terms = []
        peel_exact = r_peel.a == 0
        # pole block: K N!/j! (-1/r)^{1+N-j} Z(sub(sigma0 - j))
        for j in range(N + 1):
            n = 1 + N - j
            mult = self.kappa * (factorial(N) // factorial(j))
            if n & 1:
                mult = -mult
            mlo = -n if peel_exact else 0
            ss, rr = make_sub(sigma0 - j)
            sub = self.zc(method, ss, rr, o, dh - mlo)
            if not sub.c:
                continue
            rp = self.rpow(r_peel, -n, max(dh - min(sub.lo, 0), 0))
            terms.append((rp * sub).truncate(dh).scale(mult))

        # infinite block, truncated adaptively in t
        if peel_exact and r_merged.a > 0:
            mode, y = "finite", None
        elif r_merged.a == 0:
            mode, y = "geometric", to_real(r_peel.b / r_merged.b)
        else:
            yq = r_peel.a / r_merged.a
            if yq >= 1:
                raise NonConvergentSum(
                    f"inner sum has ratio {yq} at delta = 0 (direction {r_peel} against {r_merged})",
                    ratio=yq,
                )
            mode, y = "geometric", to_real(yq)
        factor = None if y is None else y / (1 - y)
        tol = self.tol
        zc = self.zc
        rpow = self.rpow

        for u in range(o + 1):
            tab = self.htab(u)
            best = mpfr(0)
            small = 0
            t = max(N, u - 1)
            while True:
                m = t - N
                if m > self.max_terms:
                    raise TruncationOverflow(
                        f"inner sum did not settle within {self.max_terms} terms")
                if mode == "finite" and m - rest_budget > dh:
                    break
                ss, rr = make_sub(sigma0 - t - 1 + u)
                sub = zc(method, ss, rr, o - u, dh - m if peel_exact else dh)
                size = None
                if sub.c:
                    h = tab.get(N, t)
                    if h:
                        rp = rpow(r_peel, m, max(dh - min(sub.lo, 0), 0))
                        term = (rp * sub).truncate(dh).scale(+h)
                        terms.append(term)
                        if mode == "geometric":
                            size = term.norm()
                if mode == "geometric":
                    if size is None:
                        size = _MZERO
                    if size > best:
                        best = size
                    if size * factor <= tol * best and m >= u + 4:
                        small += 1
                        if small >= 2:
                            break
                    else:
                        small = 0
                t += 1
        return _sum_series(terms, dh)

    # peeling recursions ----------------------------------------------------
    def _first(self, s: tuple, r: tuple, o: int, dh: int) -> DeltaSeries:
        if r[0].a > 0 and r[1].a == 0:
            # the inner ratio r1/(r1+r2) is 1 at delta = 0; peel letter 2 instead
            return self._peel("first", 1, s, r, o, dh)
        return self._peel("first", 0, s, r, o, dh)

    def _last(self, s: tuple, r: tuple, o: int, dh: int) -> DeltaSeries:
        d = len(s)
        if r[-1].a > 0 and r[-2].a == 0:
            return self._peel("last", d - 2, s, r, o, dh)
        return self._peel("last", d - 1, s, r, o, dh)

    def _peel(self, method: str, p: int, s: tuple, r: tuple, o: int, dh: int) -> DeltaSeries:
        """Sum out letter p (0-based) between its neighbours.

        sum_{k_{p-1} > k_p > k_{p+1}} = sum_{k_p > k_{p+1}} - sum_{k_p > k_{p-1}}
        - (k_p = k_{p-1}).  The first sum merges into letter p+1 (or is the plain
        product with a depth-1 series when p is last), the second merges into
        letter p-1 and the diagonal is the pairing of letters p-1 and p.
        """
        d = len(s)
        sp, rp = s[p], r[p]
        terms = []
        if p + 1 < d:
            R = self.intern(rp + r[p + 1])
            head_s, head_r = s[:p], r[:p]
            tail_s, tail_r = s[p + 2:], r[p + 2:]
            sub_r = head_r + (R,) + tail_r

            def make_up(sigma):
                return head_s + (sigma,) + tail_s, sub_r

            budget = _delta_budget(head_s + tail_s, head_r + tail_r)
            terms.append(self._correction(method, -sp, rp, R, make_up, s[p + 1], budget, o, dh))
        else:
            # unconstrained k_d: product Z(prefix) * Z([s_d; r_d]) as an offset convolution
            ps, pr = s[:-1], r[:-1]
            for o1 in range(o + 1):
                z1_lo = -(1 - sp) if (o1 == 0 and rp.a == 0) else 0
                zp = self.zc(method, ps, pr, o - o1, dh - z1_lo)
                if not zp.c:
                    continue
                z1 = self.zc1(sp, rp, o1, max(dh - min(zp.lo, 0), 0))
                if z1.c:
                    terms.append((z1 * zp).truncate(dh))
        if p > 0:
            R = self.intern(r[p - 1] + rp)
            head_s, head_r = s[:p - 1], r[:p - 1]
            tail_s, tail_r = s[p + 1:], r[p + 1:]
            sub_r = head_r + (R,) + tail_r

            def make_down(sigma):
                return head_s + (sigma,) + tail_s, sub_r

            # diagonal k_{p-1} = k_p: the pairing <s_{p-1}, s_p>
            sigma = s[p - 1] + sp
            terms.append(-self.zc(method, *make_down(sigma), o - 1, dh))
            terms.append(self.zc(method, *make_down(sigma - 1), o, dh).scale(-self.omq))
            budget = _delta_budget(head_s + tail_s, head_r + tail_r)
            corr = self._correction(method, -sp, rp, R, make_down, s[p - 1], budget, o, dh)
            terms.append(-corr)
        return _sum_series(terms, dh)


def _merge_ratio(rp: AffineR, rn: AffineR) -> Fraction:
    """Geometric ratio of the correction sum when rp merges into rn (0 when finite)."""
    if rp.a == 0 and rn.a > 0:
        return Fraction(0)
    if rn.a == 0 and rp.a == 0:
        return Fraction(rp.b, rp.b + rn.b)
    return Fraction(rp.a, rp.a + rn.a)


def _best_peel(r: tuple) -> int:
    """Letter whose correction sums have the smallest worst-case ratio.

    Small ratios keep the peeled exponents in the nested sums small, which is
    what controls both the running time and the cancellation in the tables.
    """
    d = len(r)
    best, arg = None, 0
    for p in range(d):
        up = _merge_ratio(r[p], r[p + 1]) if p + 1 < d else Fraction(0)
        down = _merge_ratio(r[p], r[p - 1]) if p > 0 else Fraction(0)
        worst = max(up, down)
        if worst < 1 and (best is None or worst < best):
            best, arg = worst, p
    return arg


def _delta_budget(s: tuple, r: tuple) -> int:
    return sum(1 - x for x, y in zip(s, r) if y.a == 0)


_ZERO = DeltaSeries.zero(EXACT)
_MZERO = mpfr(0)


def _sum_series(terms, dh: int) -> DeltaSeries:
    """Sum DeltaSeries truncated at dh in one pass."""
    c: dict = {}
    hi = EXACT
    lo = 0
    for x in terms:
        if x.hi < hi:
            hi = x.hi
        if x.lo < lo:
            lo = x.lo
        for e, v in x.c.items():
            w = c.get(e)
            c[e] = v if w is None else w + v
    hi = min(hi, dh)
    c = {e: v for e, v in c.items() if e <= hi}
    return DeltaSeries(c, min(lo, hi), hi)


class ZCache:
    """Memo of regularized series and of the coefficient engines behind them.

    Reads are lock-free; writes go through a lock so concurrent callers never
    store conflicting values for one request.
    """

    def __init__(self, guard: int = DEFAULT_GUARD_BITS, series_tol=DEFAULT_SERIES_TOL,
                 max_terms: int = DEFAULT_MAX_TERMS):
        self.guard = guard
        self.series_tol = series_tol
        self.max_terms = max_terms
        self.series: dict = {}
        self.positive: dict = {}
        self.routes: dict = {}
        self._engines: dict = {}
        self._lock = threading.RLock()

    def engine(self, ctx: QContext) -> _Engine:
        key = (ctx.q_exact, ctx.prec)
        eng = self._engines.get(key)
        if eng is None:
            with self._lock:
                eng = self._engines.get(key)
                if eng is None:
                    eng = _Engine(ctx, self.guard, self.series_tol, self.max_terms)
                    self._engines[key] = eng
        return eng

    def store(self, table: dict, key, value):
        with self._lock:
            return table.setdefault(key, value)

    def clear(self):
        with self._lock:
            self.series.clear()
            self.positive.clear()
            self.routes.clear()
            self._engines.clear()


_DEFAULT_CACHE = ZCache()


def default_cache() -> ZCache:
    return _DEFAULT_CACHE


# ---------------------------------------------------------------------------
# depth one


def _const_c(ctx: QContext) -> Real:
    """M(q) + (1 - q) gamma / ln q."""
    with ctx.local():
        return m_of_q(ctx) + ctx.one_minus_q * euler_gamma(ctx.prec) / ctx.ln_q


def x_of(ctx: QContext, c: AffineR, delta_hi: int) -> TPoly:
    """Constant term of Z_q([1; c]; eps): K (T - ln c) + M(q) + (1-q) gamma/ln q."""
    if c.a == 0:
        raise DomainError(f"direction {c} diverges logarithmically at an entry equal to 1")
    with ctx.local():
        k = ctx.kappa
        const = affine_log(c, delta_hi).scale(-k) + DeltaSeries.const(_const_c(ctx))
        return TPoly((const, DeltaSeries.const(k)))


def z_depth1(ctx: QContext, s: int, r, eps_hi: int = 4, delta_hi: int = 4) -> EpsSeries:
    """Laurent expansion of sum_k q^{k(s-1)} exp(eps r [k]/q^k) / [k]^s."""
    r = r if isinstance(r, AffineR) else AffineR(r)
    s = int(s)
    if eps_hi < 0 or delta_hi < 0:
        raise DomainError("orders must be non-negative")
    with ctx.local():
        k = ctx.kappa
        out: dict = {}
        if s <= 0:
            n = 1 - s
            c = k * factorial(n - 1) * (-1 if n & 1 else 1)
            out[-n] = TPoly.const(affine_recip_pow(r, n, delta_hi).scale(c))
            for e in range(eps_hi + 1):
                coef = zeta_q_nonpos(ctx, e - s) / factorial(e)
                out[e] = TPoly.const(affine_pow(r, e, delta_hi).scale(coef))
            return EpsSeries(out, -n, eps_hi)
        if r.a == 0:
            raise DomainError(f"Z_q([{s}; {r}]) diverges logarithmically as delta -> 0")
        n = s
        for e in range(eps_hi + 1):
            rp = affine_pow(r, e, delta_hi).scale(1 / to_real(factorial(e)))
            if e < n - 1:
                out[e] = TPoly.const(rp.scale(zeta_q_convergent(ctx, (n - e,))))
            elif e == n - 1:
                base = DeltaSeries.const(k * _harmonic(n - 1) + _const_c(ctx))
                base = base - affine_log(r, delta_hi).scale(k)
                out[e] = TPoly((rp * base, rp.scale(k)))
            else:
                out[e] = TPoly.const(rp.scale(zeta_q_nonpos(ctx, e - n)))
        return EpsSeries(out, 0, eps_hi)


def _harmonic(n: int) -> Real:
    return to_real(sum((Fraction(1, i) for i in range(1, n + 1)), Fraction(0)))


# ---------------------------------------------------------------------------
# non-positive words


def _check_nonpos(word: IndexedWord):
    if word.depth == 0:
        raise DomainError("empty word")
    if not word.is_nonpositive():
        raise DomainError(f"word {word} has a positive entry")


def _nonpos_series(ctx, word, eps_hi, delta_hi, cache, method) -> EpsSeries:
    _check_nonpos(word)
    if word.depth == 1:
        return z_depth1(ctx, word.s[0], word.r[0], eps_hi, delta_hi)
    cache = default_cache() if cache is None else cache
    key = (method, ctx.q_exact, ctx.prec) + ZRequest(word, eps_hi, delta_hi).key()
    hit = cache.series.get(key)
    if hit is not None:
        return hit
    eng = cache.engine(ctx)
    P = pole_budget(word)
    coeffs = {}
    for e in range(-P, eps_hi + 1):
        with precision_context(eng.wp):
            c = eng.zc(method, word.s, tuple(eng.intern(x) for x in word.r), e + P, delta_hi)
        with ctx.local():
            c = DeltaSeries({k: +v for k, v in c.c.items()}, c.lo, c.hi)
        coeffs[e] = c
    out = EpsSeries({e: TPoly.const(c) for e, c in coeffs.items()}, -P, eps_hi)
    return cache.store(cache.series, key, out)


def z_nonpos(ctx: QContext, word: IndexedWord, eps_hi: int = 4, delta_hi: int = 4,
             cache: ZCache | None = None) -> EpsSeries:
    """Expansion of a non-positive word by peeling its first letter."""
    return _nonpos_series(ctx, word, eps_hi, delta_hi, cache, "first")


def z_nonpos_alt(ctx: QContext, word: IndexedWord, eps_hi: int = 4, delta_hi: int = 4,
                 cache: ZCache | None = None) -> EpsSeries:
    """Expansion of a non-positive word by peeling its last letter."""
    return _nonpos_series(ctx, word, eps_hi, delta_hi, cache, "last")


def z_nonpos_auto(ctx: QContext, word: IndexedWord, eps_hi: int = 4, delta_hi: int = 4,
                  cache: ZCache | None = None) -> EpsSeries:
    """Expansion of a non-positive word, peeling the best-conditioned letter at each level."""
    return _nonpos_series(ctx, word, eps_hi, delta_hi, cache, "auto")


# ---------------------------------------------------------------------------
# direct summation


def z_numeric_with_bound(ctx: QContext, word: IndexedWord, eps0, delta0=0, tail_tol=None,
                         max_k: int = 100000):
    """Direct nested sum of the damped series and a bound on the omitted tail.

    All terms are positive.  Once every letter's term ratio
    q^{s-1} ([k+1]/[k])^{max(-s,0)} exp(eps r q^{-k-1}) has dropped below one
    it keeps decreasing, so the tail of each level is bounded by a geometric
    series whose inner factor is the inner partial sum plus its own tail.
    """
    with ctx.local():
        eps0 = eps0 if isinstance(eps0, Real) else to_real(parse_rational(eps0))
        delta0 = delta0 if isinstance(delta0, Real) else to_real(parse_rational(delta0))
        if eps0 >= 0:
            raise DomainError("direct summation needs eps0 < 0")
        tol = mpfr(2) ** (-ctx.prec + 8) if tail_tol is None else (
            tail_tol if isinstance(tail_tol, Real) else to_real(parse_rational(tail_tol)))
        s = word.s
        d = word.depth
        if d == 0:
            return mpfr(1), mpfr(0)
        rates = [eps0 * r.at(delta0) for r in word.r]
        if any(x >= 0 for x in rates):
            raise DomainError("every letter needs a strictly positive direction at delta0")
        q = ctx.q
        omq = ctx.one_minus_q
        partial = [mpfr(0)] * d + [mpfr(1)]
        qk = mpfr(1)
        k = 0
        while True:
            k += 1
            qk *= q
            br = (1 - qk) / omq
            ak = br / qk
            f = [qk ** (s[m] - 1) * gmpy2.exp(rates[m] * ak) / br ** s[m] for m in range(d)]
            new = [f[m] * partial[m + 1] for m in range(d)]
            for m in range(d):
                partial[m] += new[m]
            # ratio bounds for the next index, valid for all later indices
            br1 = (1 - qk * q) / omq
            growth = br1 / br
            rho = []
            for m in range(d):
                g = q ** (s[m] - 1) * gmpy2.exp(rates[m] * (1 / (qk * q)))
                if s[m] < 0:
                    g *= growth ** (-s[m])
                rho.append(g)
            if all(x < mpfr("0.5") for x in rho):
                # tails from the innermost level outwards
                tail_in = mpfr(0)
                for m in range(d - 1, -1, -1):
                    inner = partial[m + 1] + tail_in
                    tail_in = f[m] * rho[m] * inner / (1 - rho[m])
                if tail_in <= tol * partial[0]:
                    return partial[0], tail_in
            if k > max_k:
                raise TruncationOverflow("direct summation did not reach its tail tolerance")


def z_numeric(ctx: QContext, word: IndexedWord, eps0, delta0=0, tail_tol=None) -> Real:
    return z_numeric_with_bound(ctx, word, eps0, delta0, tail_tol)[0]


# ---------------------------------------------------------------------------
# positive words


def _leading_ones(word: IndexedWord) -> int:
    n = 0
    for s in word.s:
        if s != 1:
            break
        n += 1
    return n


def z_positive_const(ctx: QContext, word: IndexedWord, delta_hi: int = 4,
                     cache: ZCache | None = None) -> TPoly:
    """eps^0 coefficient of Z_q for a word with all entries >= 1.

    A leading 1 is removed with the stuffle identity
    Z([1; c]) Z(w') = sum of Z over the stuffle of [1; c] and w';
    every word on the right other than [1; c] w' has fewer leading ones
    or is the same word again, so the recursion terminates.
    """
    if not word.is_positive():
        raise DomainError(f"word {word} has a non-positive entry")
    cache = default_cache() if cache is None else cache
    key = (ctx.q_exact, ctx.prec, word.key(), delta_hi)
    hit = cache.positive.get(key)
    if hit is not None:
        return hit
    with ctx.local():
        out = _positive_const(ctx, word, delta_hi, cache)
    return cache.store(cache.positive, key, out)


def _positive_const(ctx, word, delta_hi, cache) -> TPoly:
    if word.depth == 0:
        return TPoly.const(1)
    lead = _leading_ones(word)
    if lead == 0:
        return TPoly.const(zeta_q_convergent(ctx, word.s))
    for j in range(lead):
        if word.r[j].a == 0:
            raise DomainError(
                f"direction {word.r[j]} at a leading 1 diverges logarithmically")
    if word.depth == 1:
        return x_of(ctx, word.r[0], delta_hi)
    c = word.r[0]
    rest = word[1:]
    x = x_of(ctx, c, delta_hi)
    acc = x * z_positive_const(ctx, rest, delta_hi, cache)
    mult = mpfr(0)
    target = word.key()
    for coeff, w in stuffle(word[:1], rest, ctx).by_word():
        if w.key() == target:
            mult += coeff
            continue
        if _leading_ones(w) >= lead:
            raise DomainError(
                f"peeling {word} produces {w} with as many leading ones; "
                "unequal directions in the leading block are not supported")
        acc = acc - z_positive_const(ctx, w, delta_hi, cache).scale(coeff)
    return acc.scale(1 / mult)
