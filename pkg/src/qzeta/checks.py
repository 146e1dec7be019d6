"""Verification sweeps shared by the command line and the test suite."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

import gmpy2
from gmpy2 import mpfr

from .constants import QContext, Real, m_of_q, euler_gamma
from .errors import QZetaError
from .indexalg import IndexedWord
from .regularize import ZCache
from .renorm import (
    birkhoff,
    depth2_closed_form,
    q_limit_probe,
    shifted_directions,
    verify_stuffle,
    zeta_directional,
    zeta_renorm,
    zeta_renorm_shifted,
)

ENTRIES = (0, -1, -2)


@dataclass
class Case:
    label: str
    error: Real | None
    tol: Real
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.error is not None and self.error <= self.tol


def nonpositive_words(max_depth: int = 3, entries=ENTRIES) -> list[tuple]:
    return [s for d in range(1, max_depth + 1) for s in itertools.product(entries, repeat=d)]


def shift_vectors(s: tuple) -> list[tuple]:
    """All binary vectors that leave zero entries unshifted."""
    choices = [(0,) if x == 0 else (0, 1) for x in s]
    return list(itertools.product(*choices))


def _guard(label: str, tol, fn: Callable[[], tuple]) -> Case:
    try:
        err, note = fn()
        return Case(label, err, tol, note)
    except QZetaError as exc:
        return Case(label, None, tol, f"{type(exc).__name__}: {exc}")


def stuffle_suite(ctx: QContext, cache: ZCache | None = None, tol=None) -> Iterator[Case]:
    rel = mpfr("1e-15") if tol is None else tol
    pairs = [((0,), (0,)), ((0,), (-1,)), ((-1,), (-1,)), ((0,), (0, -1)), ((1,), (1,))]
    for a, b in pairs:
        def run(a=a, b=b):
            rep = verify_stuffle(ctx, a, b, cache=cache)
            return rep.max_rel_diff, f"lhs={[float(x) for x in rep.lhs]}"
        yield _guard(f"stuffle {a}*{b}", rel, run)

    def shift():
        with ctx.local():
            base = zeta_renorm(ctx, (1,), cache)
            shifted = zeta_renorm_shifted(ctx, (1,), (1,), cache)
            want = ctx.one_minus_q * gmpy2.log(2) / ctx.ln_q
            return abs(shifted.coeffs[0] - base.coeffs[0] - want), "zeta^(1)(1) - zeta(1)"
    yield _guard("shift (1) by (1)", mpfr("1e-20") if tol is None else tol, shift)


def oracle_suite(ctx: QContext, cache: ZCache | None = None, tol=None,
                 delta_hi: int = 4) -> Iterator[Case]:
    tol = mpfr("1e-20") if tol is None else tol
    for s1, s2 in itertools.product(ENTRIES, repeat=2):
        def run(s1=s1, s2=s2):
            r = shifted_directions((s1, s2))
            pipe = zeta_directional(ctx, IndexedWord((s1, s2), r), delta_hi, cache).coeff(0)
            closed = depth2_closed_form(ctx, s1, s2, r[0], r[1], delta_hi)
            lo = min(pipe.lo, closed.lo)
            err = max(abs(pipe.coeff(k) - closed.coeff(k)) for k in range(lo, delta_hi + 1))
            return err, f"delta^0: {float(pipe.coeff(0)):.15e}"
        yield _guard(f"closed form ({s1},{s2})", tol, run)


def poles_suite(ctx: QContext, cache: ZCache | None = None, tol=None,
                max_depth: int = 3, shifted: bool = True) -> Iterator[Case]:
    """Pole cancellation in eps (plus part) and in delta (shifted values)."""
    tol = mpfr("1e-20") if tol is None else tol
    for s in nonpositive_words(max_depth):
        def eps_run(s=s):
            res = birkhoff(ctx, IndexedWord(s, shifted_directions(s)), 0, 0, cache)
            return res.residual / max(res.scale, 1), f"scale {float(res.scale):.3e}"
        yield _guard(f"eps poles {s}", tol, eps_run)
    if not shifted:
        return
    for s in nonpositive_words(max_depth):
        for f in shift_vectors(s):
            def delta_run(s=s, f=f):
                v = zeta_renorm_shifted(ctx, s, f, cache, strict=False)
                return v.residual_delta / v.scale, f"value {float(v.value):.15e}"
            yield _guard(f"delta poles {s} f={f}", tol, delta_run)


def limits_suite(prec: int = 256, ks=range(4, 15), cache: ZCache | None = None,
                 tol=None) -> Iterator[Case]:
    tol = mpfr("1e-3") if tol is None else tol
    family = [QContext(Fraction(2 ** k - 1, 2 ** k), prec) for k in ks]
    for target, want in (((0,), Fraction(-1, 2)), ((-1,), Fraction(-1, 12)), ((-2,), Fraction(0))):
        def run(target=target, want=want):
            rep = q_limit_probe(family, target, cache)
            note = f"limit {float(rep.limit):.12f} stability {float(rep.stability):.1e}"
            if not rep.monotone:
                note += " (non-monotone)"
            return abs(rep.limit - mpfr(want.numerator) / want.denominator), note
        yield _guard(f"q -> 1 limit {target}", tol, run)

    def gamma():
        m = m_of_q(family[-1])
        return abs(m - euler_gamma(prec)), f"M(q) = {float(m):.10f}"
    yield _guard(f"M(q) at q = {family[-1].q_exact}", mpfr("0.02"), gamma)


SUITES = {
    "stuffle": lambda ctx, cache, tol: stuffle_suite(ctx, cache, tol),
    "oracle": lambda ctx, cache, tol: oracle_suite(ctx, cache, tol),
    "poles": lambda ctx, cache, tol: poles_suite(ctx, cache, tol),
    "limits": lambda ctx, cache, tol: limits_suite(ctx.prec, cache=cache, tol=tol),
}
