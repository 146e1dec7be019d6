"""Recover zeta_q(-l) by polynomial fitting of the damped depth-one sum.

Z(0; eps) + kappa/eps is sampled at eps = eps0 * 2^-m and interpolated with
a free 1/eps column; l! times the eps^l coefficient should reproduce
zeta_q(-l). The log-periodic remainder of the damped sum limits how well
this can work, and at q = 1/2 the nodes all sit at the same phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath

from _config import emit, parse
from qzeta import IndexedWord, QContext, zeta_q_nonpos
from qzeta.regularize import z_numeric_with_bound


@dataclass(frozen=True)
class Config:
    """Bernoulli recovery by interpolation."""

    qs: tuple[str, ...] = ("0.3", "0.5", "0.7")
    nodes: int = 8
    eps0: str = "-0.1"
    ratio: str = "1/2"
    l_max: int = 3
    prec: int = 256


def fit(cfg: Config, q: str) -> list[dict]:
    ctx = QContext.make(q, cfg.prec)
    w = IndexedWord.of((0,))
    e0, step = Fraction(cfg.eps0), Fraction(cfg.ratio)
    with mpmath.workprec(cfg.prec):
        kappa = mpmath.mpf(str(ctx.kappa))
        xs, ys = [], []
        for m in range(cfg.nodes):
            e = e0 * step ** m
            v, _ = z_numeric_with_bound(ctx, w, e)
            x = mpmath.mpf(e.numerator) / e.denominator
            xs.append(x)
            ys.append(mpmath.mpf(str(v)) + kappa / x)
        a = mpmath.matrix([[x ** (j - 1) for j in range(cfg.nodes)] for x in xs])
        coef = mpmath.lu_solve(a, mpmath.matrix(ys))
        out = []
        for l in range(cfg.l_max + 1):
            got = coef[l + 1] * mpmath.factorial(l)
            want = mpmath.mpf(str(zeta_q_nonpos(ctx, l)))
            out.append({"q": q, "l": l, "fit": float(got), "exact": float(want),
                        "rel_error": float(abs(got / want - 1))})
    return out


def main(argv=None):
    cfg = parse(Config, argv)
    emit(cfg, [row for q in cfg.qs for row in fit(cfg, q)])


if __name__ == "__main__":
    main()
