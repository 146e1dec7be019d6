"""Acceptance criteria A1-A12.

Each test records ``(ok, detail)`` in ``conftest.ACCEPTANCE`` before asserting,
and the terminal summary prints one PASS/FAIL line per criterion.
"""

import random
from fractions import Fraction

import gmpy2
import mpmath
from gmpy2 import mpfr

from conftest import ACCEPTANCE
from qzeta import (
    AffineR,
    EpsSeries,
    IndexedWord,
    QContext,
    QZetaError,
    TPoly,
    verify_stuffle,
    z_depth1,
    z_nonpos,
    z_nonpos_alt,
    zeta_directional,
    zeta_q_convergent,
    zeta_q_nonpos,
    zeta_renorm,
    zeta_renorm_shifted,
)
from qzeta.checks import limits_suite, nonpositive_words, oracle_suite, poles_suite
from qzeta.regularize import z_numeric_with_bound
from qzeta.renorm import shifted_directions
from qzeta.series import affine_series, eval_eps, pole_part

WORDS = nonpositive_words(3)


def record(key, ok, detail):
    ACCEPTANCE[key] = (bool(ok), detail)
    print(f"{key} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def fmt(x):
    return f"{float(x):.2e}"


# ---------------------------------------------------------------------------


def _fit_bernoulli(q: str, nodes: int = 8):
    """Interpolate Z(0; eps) + kappa/eps at eps = -0.1 * 2^-m with a free 1/eps column."""
    c = QContext.make(q, 256)
    w = IndexedWord.of((0,))
    with mpmath.workprec(256):
        kappa = mpmath.mpf(str(c.kappa))
        xs, ys = [], []
        for m in range(nodes):
            e = Fraction(-1, 10) / 2 ** m
            v, _ = z_numeric_with_bound(c, w, e)
            x = mpmath.mpf(e.numerator) / e.denominator
            xs.append(x)
            ys.append(mpmath.mpf(str(v)) + kappa / x)
        a = mpmath.matrix([[x ** (j - 1) for j in range(nodes)] for x in xs])
        coef = mpmath.lu_solve(a, mpmath.matrix(ys))
        errs = []
        for l in range(4):
            got = coef[l + 1] * mpmath.factorial(l)
            want = mpmath.mpf(str(zeta_q_nonpos(c, l)))
            errs.append(abs(got / want - 1))
    return errs


def test_a1_bernoulli_fit():
    worst = {}
    for q in ("0.3", "0.5", "0.7"):
        worst[q] = max(_fit_bernoulli(q))
    ok = all(v <= 1e-6 for v in worst.values())
    record("A1", ok, "max rel error by q: " + ", ".join(f"{q}: {fmt(v)}" for q, v in worst.items()))


def test_a2_classical_limits(cache):
    cases = list(limits_suite(256, cache=cache))
    bad = [c.label for c in cases if not c.ok]
    detail = "; ".join(f"{c.label} err {fmt(c.error)}" for c in cases if c.error is not None)
    record("A2", not bad, detail if not bad else f"failed {bad}; {detail}")


def test_a3_depth2_oracle(ctx, cache):
    cases = list(oracle_suite(ctx, cache))
    bad = [f"{c.label}: {c.note if c.error is None else fmt(c.error)}" for c in cases if not c.ok]
    worst = max((c.error for c in cases if c.error is not None), default=mpfr(0))
    detail = f"{len(cases) - len(bad)}/{len(cases)} within 1e-20 (max {fmt(worst)})"
    record("A3", not bad, detail + ("" if not bad else "; " + "; ".join(bad)))


def test_a4_pole_cancellation(ctx, cache):
    cases = list(poles_suite(ctx, cache, shifted=False))
    bad = [c.label for c in cases if not c.ok]
    worst = max((c.error for c in cases if c.error is not None), default=mpfr(0))
    record("A4", not bad, f"{len(cases)} words, max scaled residual {fmt(worst)}"
           + (f"; failed {bad}" if bad else ""))


def test_a5_laurent_vs_sum(ctx, cache):
    fails, worst, n = [], 0.0, 0
    with ctx.local():
        d0 = mpfr("0.001")
        for s in WORDS:
            w = IndexedWord(s, shifted_directions(s))
            try:
                z = z_nonpos(ctx, w, 4, 4, cache)
            except QZetaError as exc:
                fails.append(f"{s}: {type(exc).__name__}")
                continue
            for e0 in ("-0.2", "-0.1", "-0.05"):
                n += 1
                v, rem = eval_eps(z, e0, d0)
                num, tail = z_numeric_with_bound(ctx, w, e0, "0.001")
                ratio = float(abs(v - num) / (rem + tail))
                worst = max(worst, ratio)
                if ratio > 1:
                    fails.append(f"{s}@{e0}: rel {fmt(abs(v - num) / abs(num))}")
    detail = f"{n - len(fails)}/{n} within bounds, worst err/bound {worst:.1e}"
    record("A5", not fails, detail + ("" if not fails else "; e.g. " + "; ".join(fails[:4])))


def test_a6_recursion_cross_check(ctx, cache):
    fails, worst = [], mpfr(0)
    for s in WORDS:
        if len(s) < 2:
            continue
        w = IndexedWord(s, shifted_directions(s))
        try:
            a = z_nonpos(ctx, w, 0, 0, cache)
            b = z_nonpos_alt(ctx, w, 0, 0, cache)
        except QZetaError as exc:
            fails.append(f"{s}: {type(exc).__name__}")
            continue
        with ctx.local():
            err = (a - b).norm() / max(a.norm(), b.norm(), 1)
        worst = max(worst, err)
        if err > mpfr("1e-20"):
            fails.append(f"{s}: {fmt(err)}")
    n = sum(1 for s in WORDS if len(s) >= 2)
    detail = f"{n - len(fails)}/{n} agree, max scaled discrepancy {fmt(worst)}"
    record("A6", not fails, detail + ("" if not fails else "; " + "; ".join(fails[:5])))


def test_a7_nonpositive_stuffle(ctx, cache):
    pairs = [((0,), (0,)), ((0,), (-1,)), ((-1,), (-1,)), ((0,), (0, -1))]
    out = []
    for a, b in pairs:
        rep = verify_stuffle(ctx, a, b, cache=cache)
        out.append((a, b, rep.max_rel_diff))
    ok = all(r <= mpfr("1e-15") for *_, r in out)
    record("A7", ok, ", ".join(f"{a}*{b}: {fmt(r)}" for a, b, r in out))


def test_a8_positive_stuffle_with_shift(ctx, cache):
    rep = verify_stuffle(ctx, (1,), (1,), cache=cache)
    with ctx.local():
        base = zeta_renorm(ctx, (1,), cache)
        shifted = zeta_renorm_shifted(ctx, (1,), (1,), cache)
        want = ctx.one_minus_q * gmpy2.log(2) / ctx.ln_q
        gap = abs(shifted.value - base.value - want)
    ok = len(rep.lhs) == 3 and rep.max_rel_diff <= mpfr("1e-15") and gap <= mpfr("1e-20")
    record("A8", ok, f"stuffle rel {fmt(rep.max_rel_diff)} (T-degree {len(rep.lhs) - 1}), "
                     f"shift identity {fmt(gap)}")


def test_a9_directional_invariance(ctx, cache):
    rng = random.Random(2024)
    worst = mpfr(0)
    for s in ((2, 1), (3, 1, 1)):
        base = zeta_q_convergent(ctx, s)
        vals = []
        for _ in range(5):
            r = tuple(AffineR(Fraction(rng.randint(1, 12), rng.randint(1, 12)), rng.randint(0, 3))
                      for _ in s)
            vals.append(zeta_directional(ctx, IndexedWord(s, r), 0, cache).coeff(0).coeff(0))
        with ctx.local():
            spread = max(vals) - min(vals)
            off = max(abs(v - base) for v in vals)
        worst = max(worst, spread, off)
    record("A9", worst <= mpfr("1e-12"), f"max spread or offset {fmt(worst)}")


def test_a10_delta_regularity(ctx, cache):
    cases = [c for c in poles_suite(ctx, cache) if c.label.startswith("delta")]
    bad = [c.label for c in cases if not c.ok]
    worst = max((c.error for c in cases if c.error is not None), default=mpfr(0))
    record("A10", not bad, f"{len(cases)} shifted values, max scaled delta pole {fmt(worst)}"
           + (f"; failed {bad}" if bad else ""))


def test_a11_derivative_identity(ctx):
    r = AffineR(2, 1)
    eh, dh = 5, 4
    worst = mpfr(0)
    with ctx.local():
        rs = EpsSeries.const(TPoly.const(affine_series(r)))
        for s in range(-2, 3):
            lhs = z_depth1(ctx, s, r, eh, dh).derivative()
            rhs = rs * z_depth1(ctx, s - 1, r, eh, dh)
            top = min(lhs.hi, rhs.hi)
            for e in range(min(lhs.lo, rhs.lo), top + 1):
                a, b = lhs.coeff(e), rhs.coeff(e)
                for k in range(max(a.degree, b.degree) + 1):
                    x, y = a.coeff(k), b.coeff(k)
                    for m in range(min(x.lo, y.lo), min(x.hi, y.hi, dh) + 1):
                        worst = max(worst, abs(x.coeff(m) - y.coeff(m)))
    record("A11", worst <= mpfr(2) ** -200, f"s in -2..2, max coefficient gap {fmt(worst)}")


def _random_series(rng):
    lo = rng.randint(-3, 1)
    c = {}
    for e in range(lo, lo + rng.randint(0, 4)):
        c[e] = TPoly([EpsSeries.const(rng.randint(-9, 9)).coeff(0).coeff(0)
                      for _ in range(rng.randint(1, 2))])
    return EpsSeries(c, lo)


def test_a12_rota_baxter():
    rng = random.Random(12)
    bad = 0
    for _ in range(300):
        x, y = _random_series(rng), _random_series(rng)
        P = pole_part
        diff = P(x) * P(y) - (P(x * P(y)) + P(P(x) * y) - P(x * y))
        if any(v for tp in diff.c.values() for ds in tp.c for v in ds.c.values()):
            bad += 1
    record("A12", bad == 0, f"300 random pairs, {bad} violations of the weight -1 identity")
