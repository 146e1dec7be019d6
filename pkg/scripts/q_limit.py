"""Renormalized values along q_k = 1 - 2^-k with a Richardson step per level.

Depth-one targets approach the classical values -1/2, -1/12 and 0; the last
row tracks M(q) against Euler's constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from _config import emit, parse
from qzeta import QContext, ZCache, euler_gamma, m_of_q, q_limit_probe


@dataclass(frozen=True)
class Config:
    """q -> 1 limits of renormalized values."""

    k_min: int = 4
    k_max: int = 14
    targets: tuple[int, ...] = (0, -1, -2)
    depth2: bool = False
    prec: int = 256


def main(argv=None):
    cfg = parse(Config, argv)
    family = [QContext(Fraction(2 ** k - 1, 2 ** k), cfg.prec) for k in range(cfg.k_min, cfg.k_max + 1)]
    cache = ZCache()
    words = [(t,) for t in cfg.targets]
    if cfg.depth2:
        words += [(a, b) for a in cfg.targets for b in cfg.targets]
    rows = []
    for w in words:
        rep = q_limit_probe(family, w, cache)
        rows.append({
            "s": list(w),
            "values": [float(v) for v in rep.values],
            "richardson": [float(v) for v in rep.richardson],
            "limit": float(rep.limit),
            "stability": float(rep.stability),
            "monotone": rep.monotone,
        })
    m = m_of_q(family[-1])
    rows.append({"M(q)": float(m), "gamma": float(euler_gamma(cfg.prec)), "q": str(family[-1].q_exact)})
    emit(cfg, rows)


if __name__ == "__main__":
    main()
