"""Compare depth-one damped sums with their Laurent expansion in eps.

The difference is not a truncation error: it oscillates in ln|eps| with
period ln q and does not shrink as eps -> 0. Each row reports the observed
relative gap next to the amplitude 2|Gamma(1 - s + i alpha)| / Gamma(1 - s),
alpha = 2 pi / |ln q|.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath

from _config import emit, parse
from qzeta import AffineR, IndexedWord, QContext, z_depth1, z_numeric
from qzeta.series import eval_eps


@dataclass(frozen=True)
class Config:
    """Depth-one Laurent expansion against the damped sum."""

    qs: tuple[str, ...] = ("0.3", "0.5", "0.7")
    s: tuple[int, ...] = (0, -1, -2)
    eps: tuple[str, ...] = ("-0.2", "-0.1", "-0.05", "-0.025")
    eps_order: int = 14
    prec: int = 128


def amplitude(q: str, s: int) -> float:
    alpha = 2 * mpmath.pi / abs(mpmath.log(mpmath.mpf(q)))
    return float(2 * abs(mpmath.gamma(1 - s + 1j * alpha)) / mpmath.gamma(1 - s))


def main(argv=None):
    cfg = parse(Config, argv)
    rows = []
    for q in cfg.qs:
        ctx = QContext.make(q, cfg.prec)
        for s in cfg.s:
            z = z_depth1(ctx, s, AffineR(1), cfg.eps_order, 0)
            for e0 in cfg.eps:
                laurent, rem = eval_eps(z, e0)
                direct = z_numeric(ctx, IndexedWord.of((s,)), e0)
                rows.append({
                    "q": q, "s": s, "eps": e0,
                    "rel_gap": float(abs(laurent - direct) / abs(direct)),
                    "truncation": float(rem / abs(direct)),
                    "amplitude": amplitude(q, s),
                })
    emit(cfg, rows)


if __name__ == "__main__":
    main()
