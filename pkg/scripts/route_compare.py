"""How much the peeling routes disagree on the regularized constant term.

For every non-positive word up to the given depth this runs the first-letter,
last-letter and cheapest-letter recursions and reports the spread of the
eps^0 delta^0 coefficient, plus which route the Birkhoff step settled on.
"""

from __future__ import annotations

from dataclasses import dataclass

from _config import emit, parse
from qzeta import (IndexedWord, QContext, QZetaError, ZCache, shifted_directions, z_nonpos,
                   z_nonpos_alt, z_nonpos_auto, zeta_renorm)
from qzeta.checks import nonpositive_words
from qzeta.regularize import _merge_ratio

ROUTES = {"first": z_nonpos, "last": z_nonpos_alt, "auto": z_nonpos_auto}


@dataclass(frozen=True)
class Config:
    """Peeling-route disagreement for non-positive words."""

    q: str = "0.5"
    max_depth: int = 2
    prec: int = 256


def main(argv=None):
    cfg = parse(Config, argv)
    ctx = QContext.make(cfg.q, cfg.prec)
    cache = ZCache()
    rows = []
    for s in nonpositive_words(cfg.max_depth):
        if len(s) < 2:
            continue
        r = shifted_directions(s)
        w = IndexedWord(s, r)
        vals = {}
        for name, fn in ROUTES.items():
            try:
                vals[name] = fn(ctx, w, 0, 0, cache).coeff(0).coeff(0).coeff(0)
            except QZetaError as exc:
                vals[name] = type(exc).__name__
        nums = [v for v in vals.values() if not isinstance(v, str)]
        with ctx.local():
            spread = max(nums) - min(nums) if nums else None
            scale = max((abs(v) for v in nums), default=1)
        rows.append({
            "s": list(s),
            "ratios": [str(_merge_ratio(a, b)) for a, b in zip(r, r[1:])],
            "values": {k: v if isinstance(v, str) else float(v) for k, v in vals.items()},
            "rel_spread": None if spread is None else float(spread / max(scale, 1)),
            "renorm_route": zeta_renorm(ctx, s, cache).route,
        })
    emit(cfg, rows)


if __name__ == "__main__":
    main()
