from fractions import Fraction
from math import factorial

import gmpy2
import mpmath
import pytest
from gmpy2 import mpfr

from qzeta import (
    AffineR,
    DomainError,
    IndexedWord,
    QContext,
    TruncationOverflow,
    ZCache,
    z_depth1,
    z_nonpos,
    z_nonpos_alt,
    z_nonpos_auto,
    z_numeric,
    z_positive_const,
)
from qzeta.constants import euler_gamma, m_of_q, zeta_q_nonpos
from qzeta.regularize import (
    _best_peel,
    _merge_ratio,
    delta_pole_budget,
    pole_budget,
    z_numeric_with_bound,
)
from qzeta.renorm import shifted_directions
from qzeta.series import eval_eps

ZETA21_HALF = "0.2722032056332136720970568831670300936779"


def word(*s):
    return IndexedWord(s, shifted_directions(s))


class TestDepthOne:
    def test_pole_term(self, ctx):
        for s in (0, -1, -2):
            x = z_depth1(ctx, s, AffineR(1), 2, 0)
            n = 1 - s
            assert x.lo == -n
            with ctx.local():
                want = ctx.kappa * (-1) ** n * factorial(n - 1)
                assert abs(x.coeff(-n).coeff(0).coeff(0) - want) < mpfr("1e-70")
            for e in range(-n + 1, 0):
                assert x.c.get(e) is None or x.coeff(e).is_zero()

    def test_regular_part_is_zeta_nonpos(self, ctx):
        x = z_depth1(ctx, -1, AffineR(2), 3, 0)
        with ctx.local():
            for e in range(4):
                want = zeta_q_nonpos(ctx, e + 1) * 2 ** e / factorial(e)
                assert abs(x.coeff(e).coeff(0).coeff(0) - want) < mpfr("1e-60")

    def test_s1_constant_term(self, ctx):
        tp = z_depth1(ctx, 1, AffineR(1), 0, 0).coeff(0)
        with ctx.local():
            const = m_of_q(ctx) + ctx.one_minus_q * euler_gamma(256) / ctx.ln_q
            assert tp.degree == 1
            assert tp.coeff(1).coeff(0) == ctx.kappa
            assert abs(tp.coeff(0).coeff(0) - const) < mpfr("1e-70")

    def test_s1_direction_enters_as_log(self, ctx):
        a = z_depth1(ctx, 1, AffineR(1), 0, 0).coeff(0).coeff(0).coeff(0)
        b = z_depth1(ctx, 1, AffineR(3), 0, 0).coeff(0).coeff(0).coeff(0)
        with ctx.local():
            assert abs(a - b - ctx.kappa * gmpy2.log(3)) < mpfr("1e-70")

    def test_convergent_constant(self, ctx):
        tp = z_depth1(ctx, 2, AffineR(1), 0, 0).coeff(0)
        assert tp.degree == 0
        assert abs(tp.coeff(0).coeff(0) - mpfr("0.6860084721898720901200537228730680410779", 256)) < mpfr("1e-20")

    def test_domain(self, ctx):
        with pytest.raises(DomainError):
            z_depth1(ctx, 1, AffineR(0, 1))
        with pytest.raises(DomainError):
            z_depth1(ctx, 0, AffineR(1), -1)

    @pytest.mark.parametrize("q", ["0.5", "0.3"])
    @pytest.mark.parametrize("s", [0, -1, -2])
    def test_sum_residual_is_log_periodic(self, q, s):
        """The damped sum differs from its Laurent expansion by an oscillating term.

        Its relative size is about 2|Gamma(1 - s + i alpha)| / Gamma(1 - s) with
        alpha = 2 pi / |ln q|; the bound below allows a factor of two on that.
        """
        c = QContext.make(q, 128)
        alpha = 2 * mpmath.pi / abs(mpmath.log(mpmath.mpf(q)))
        amp = 2 * abs(mpmath.gamma(1 - s + 1j * alpha)) / mpmath.gamma(1 - s)
        for e0 in ("-0.05", "-0.2"):
            v, _ = eval_eps(z_depth1(c, s, AffineR(1), 12, 0), e0)
            n = z_numeric(c, IndexedWord.of((s,)), e0)
            rel = float(abs(v - n) / abs(n))
            assert rel < 2 * float(amp)


class TestPoleBudgets:
    def test_values(self):
        assert pole_budget(word(0, -1, -2)) == 6
        assert delta_pole_budget(word(0, -1)) == 1
        assert delta_pole_budget(IndexedWord((0, -1), (AffineR(0, 1), AffineR(0, 2)))) == 3

    @pytest.mark.parametrize("s", [(0, 0), (-1, 0), (0, -2), (-1, -1, 0)])
    def test_orders_within_budget(self, ctx, cache, s):
        w = word(*s)
        x = z_nonpos(ctx, w, 1, 1, cache)
        assert x.lo >= -pole_budget(w)
        for e, tp in x.c.items():
            assert tp.degree == 0
            ds = tp.coeff(0)
            assert all(k >= -delta_pole_budget(w) for k, v in ds.c.items() if v)


class TestRoutes:
    def test_merge_ratio(self):
        assert _merge_ratio(AffineR(0, 1), AffineR(2, 1)) == 0
        assert _merge_ratio(AffineR(0, 1), AffineR(0, 3)) == Fraction(1, 4)
        assert _merge_ratio(AffineR(2, 1), AffineR(1, 1)) == Fraction(2, 3)

    def test_best_peel(self):
        assert _best_peel(shifted_directions((-2, -1, -1))) == 1
        assert _best_peel(shifted_directions((-1, -2, -1))) == 0
        assert _best_peel(shifted_directions((-2, -1))) == 1
        assert _best_peel(shifted_directions((0, -1))) == 0

    @staticmethod
    def worst(a, b, e_top=1):
        out = mpfr(0)
        for e in range(a.lo, e_top + 1):
            for k in range(-4, 2):
                x = a.coeff(e).coeff(0).coeff(k)
                out = max(out, abs(x - b.coeff(e).coeff(0).coeff(k)) / max(abs(x), 1))
        return out

    @pytest.mark.parametrize("s, same", [((-1, -1), "first"), ((-2, -1), "last"), ((0, -2), "first")])
    def test_auto_matches_chosen_route(self, ctx, cache, s, same):
        w = word(*s)
        chosen = (z_nonpos if same == "first" else z_nonpos_alt)(ctx, w, 1, 1, cache)
        assert self.worst(chosen, z_nonpos_auto(ctx, w, 1, 1, cache)) == 0

    @pytest.mark.parametrize("s", [(0, -1), (-2, 0), (-1, 0)])
    def test_routes_agree_with_finite_merge(self, ctx, cache, s):
        w = word(*s)
        assert self.worst(z_nonpos(ctx, w, 1, 1, cache), z_nonpos_alt(ctx, w, 1, 1, cache)) < mpfr("1e-60")

    @pytest.mark.parametrize("s", [(0, 0), (-1, -1), (-2, -1), (-2, -2)])
    def test_routes_agree_loosely(self, ctx, cache, s):
        # geometric merges leave a log-periodic remainder that each route expands differently
        w = word(*s)
        assert self.worst(z_nonpos(ctx, w, 1, 1, cache), z_nonpos_alt(ctx, w, 1, 1, cache)) < mpfr("1e-5")

    def test_small_term_cap_overflows(self, ctx):
        with pytest.raises(TruncationOverflow):
            z_nonpos(ctx, word(-2, -1, -1), 0, 0, ZCache(max_terms=200))

    def test_auto_handles_hard_word(self, ctx, cache):
        x = z_nonpos_auto(ctx, word(-2, -1, -1), 0, 0, cache)
        assert x.lo == -pole_budget(word(-2, -1, -1))
        assert abs(x.coeff(0).coeff(0).coeff(0)) < 1


class TestMemo:
    def test_cache_is_transparent(self, ctx):
        w = word(-1, 0)
        shared = ZCache()
        first = z_nonpos(ctx, w, 2, 2, shared)
        again = z_nonpos(ctx, w, 2, 2, shared)
        fresh = z_nonpos(ctx, w, 2, 2, ZCache())
        assert again is first
        assert first.to_json() == fresh.to_json()

    def test_clear(self, ctx):
        c = ZCache()
        z_nonpos(ctx, word(0, 0), 0, 0, c)
        assert c.series
        c.clear()
        assert not c.series and not c.routes


class TestDirectSum:
    def test_bound_is_honest(self, ctx):
        w = IndexedWord((0, -1), (AffineR(1), AffineR(2)))
        coarse, bound = z_numeric_with_bound(ctx, w, "-0.1", tail_tol="1e-8")
        fine = z_numeric(ctx, w, "-0.1")
        assert abs(fine - coarse) <= bound

    def test_empty_word(self, ctx):
        assert z_numeric(ctx, IndexedWord(), "-0.1") == 1

    def test_domain(self, ctx):
        with pytest.raises(DomainError):
            z_numeric(ctx, word(0), "0.1")
        with pytest.raises(DomainError):
            z_numeric(ctx, IndexedWord((0,), (AffineR(0, 1),)), "-0.1")

    def test_nonpositive_domain(self, ctx):
        with pytest.raises(DomainError):
            z_nonpos(ctx, word(1, 0))
        with pytest.raises(DomainError):
            z_nonpos(ctx, IndexedWord())


class TestPositive:
    def test_convergent(self, ctx, cache):
        tp = z_positive_const(ctx, IndexedWord.of((2, 1)), 0, cache)
        assert tp.degree == 0
        assert abs(tp.coeff(0).coeff(0) - mpfr(ZETA21_HALF, 256)) < mpfr("1e-20")

    def test_leading_one(self, ctx, cache):
        tp = z_positive_const(ctx, IndexedWord.of((1,)), 0, cache)
        with ctx.local():
            assert tp.coeff(1).coeff(0) == ctx.kappa

    def test_leading_ones_give_quadratic(self, ctx, cache):
        tp = z_positive_const(ctx, IndexedWord.of((1, 1)), 0, cache)
        with ctx.local():
            assert tp.degree == 2
            assert abs(tp.coeff(2).coeff(0) - ctx.kappa ** 2 / 2) < mpfr("1e-60")

    def test_domain(self, ctx):
        with pytest.raises(DomainError):
            z_positive_const(ctx, IndexedWord.of((1, 0)))
        with pytest.raises(DomainError):
            z_positive_const(ctx, IndexedWord((1,), (AffineR(0, 1),)))
