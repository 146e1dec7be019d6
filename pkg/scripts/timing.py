"""Wall time of renormalized values by word and working precision."""

from __future__ import annotations

import time
from dataclasses import dataclass

from _config import emit, parse
from qzeta import QContext, ZCache, zeta_renorm
from qzeta.checks import nonpositive_words


@dataclass(frozen=True)
class Config:
    """Timing sweep over depth and precision."""

    q: str = "0.5"
    max_depth: int = 2
    precs: tuple[int, ...] = (128, 256, 512)
    shared_cache: bool = False


def main(argv=None):
    cfg = parse(Config, argv)
    rows = []
    for prec in cfg.precs:
        ctx = QContext.make(cfg.q, prec)
        shared = ZCache()
        for s in nonpositive_words(cfg.max_depth):
            cache = shared if cfg.shared_cache else ZCache()
            t0 = time.perf_counter()
            v = zeta_renorm(ctx, s, cache)
            rows.append({"prec": prec, "s": list(s), "seconds": round(time.perf_counter() - t0, 4),
                         "route": v.route, "value": float(v.value)})
    emit(cfg, rows)


if __name__ == "__main__":
    main()
