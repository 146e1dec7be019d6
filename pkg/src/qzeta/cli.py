"""Command line: compute, table and verify."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
from dataclasses import dataclass

from .checks import SUITES
from .constants import DEFAULT_PRECISION, MIN_PRECISION, QContext, parse_rational, to_real
from .errors import DomainError, InvalidShift, QZetaError, ResidualPole
from .regularize import ZCache
from .renorm import ShiftVector, birkhoff_plus, shifted_directions, zeta_renorm_shifted
from .indexalg import IndexedWord
from .series import format_real

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RESIDUAL = 2
EXIT_VERIFY = 3

CSV_COLUMNS = ["s", "f", "q", "t_power", "coefficient", "residual_delta", "residual_eps"]


@dataclass(frozen=True)
class RunConfig:
    q: str = "0.5"
    precision_bits: int = DEFAULT_PRECISION
    eps_order: int = 4
    delta_order: int = 4
    tol: str | None = None
    format: str = "json"

    def __post_init__(self):
        try:
            qx = parse_rational(self.q)
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse q={self.q!r}") from exc
        if not 0 < qx < 1:
            raise DomainError("q must lie strictly inside (0, 1)")
        if self.precision_bits < MIN_PRECISION:
            raise DomainError(f"precision must be at least {MIN_PRECISION} bits")
        if self.eps_order < 0 or self.delta_order < 0:
            raise DomainError("orders must be non-negative")
        if self.format not in ("json", "csv"):
            raise DomainError(f"unknown format {self.format!r}")
        if self.tol is not None:
            try:
                t = parse_rational(self.tol)
            except (ValueError, ZeroDivisionError) as exc:
                raise DomainError(f"cannot parse tol={self.tol!r}") from exc
            if t <= 0:
                raise DomainError("tol must be positive")

    def context(self) -> QContext:
        return QContext.make(self.q, self.precision_bits)

    def tol_real(self, ctx: QContext):
        if self.tol is None:
            return None
        with ctx.local():
            return to_real(parse_rational(self.tol))


def _record(cfg: RunConfig, ctx: QContext, s, f, value, series=None) -> dict:
    with ctx.local():
        rec = {
            "s": list(s),
            "f": list(f),
            "q": cfg.q,
            "value": {"T_coeffs": [format_real(c) for c in value.coeffs]},
            "residual_delta": format_real(value.residual_delta),
            "residual_eps": format_real(value.residual_eps),
            "meta": {
                "orders": {"eps": cfg.eps_order, "delta": cfg.delta_order},
                "precision": cfg.precision_bits,
                "route": value.route,
            },
        }
        if series is not None:
            rec["plus_part"] = series.to_json(cfg.delta_order)
    return rec


def _csv_rows(rec: dict) -> list[list]:
    s = " ".join(map(str, rec["s"]))
    f = " ".join(map(str, rec["f"]))
    return [[s, f, rec["q"], k, c, rec["residual_delta"], rec["residual_eps"]]
            for k, c in enumerate(rec["value"]["T_coeffs"])]


def _emit(records: list[dict], fmt: str, out, single: bool):
    if fmt == "json":
        payload = records[0] if single else records
        out.write(json.dumps(payload, indent=2) + "\n")
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in records:
        w.writerows(_csv_rows(rec))
    out.write(buf.getvalue())


def cmd_compute(cfg: RunConfig, s: list[int], f: list[int] | None, out, series: bool = False) -> int:
    ctx = cfg.context()
    f = [0] * len(s) if f is None else f
    cache = ZCache()
    value = zeta_renorm_shifted(ctx, s, ShiftVector(tuple(f)), cache, tol=cfg.tol_real(ctx))
    plus = None
    if series and all(x <= 0 for x in s):
        word = IndexedWord(tuple(s), shifted_directions(s, f))
        plus = birkhoff_plus(ctx, word, cfg.eps_order, cfg.delta_order, cache)
    _emit([_record(cfg, ctx, s, f, value, plus)], cfg.format, out, single=True)
    return EXIT_OK


def cmd_table(cfg: RunConfig, entries: list[int], depth: int, out) -> int:
    ctx = cfg.context()
    cache = ZCache()
    records = []
    for s in itertools.product(entries, repeat=depth) if entries else ():
        value = zeta_renorm_shifted(ctx, s, ShiftVector.zeros(depth), cache, tol=cfg.tol_real(ctx))
        records.append(_record(cfg, ctx, s, [0] * depth, value))
    _emit(records, cfg.format, out, single=False)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, suite: str, out) -> int:
    ctx = cfg.context()
    cache = ZCache()
    failed = 0
    rows = []
    for case in SUITES[suite](ctx, cache, cfg.tol_real(ctx)):
        status = "PASS" if case.ok else "FAIL"
        failed += not case.ok
        err = "n/a" if case.error is None else f"{float(case.error):.3e}"
        rows.append({"case": case.label, "status": status, "error": err,
                     "tol": f"{float(case.tol):.1e}", "note": case.note})
        if cfg.format == "csv":
            continue
        out.write(f"{status} {case.label}: error {err} (tol {float(case.tol):.1e}) {case.note}\n")
        out.flush()
    if cfg.format == "csv":
        w = csv.DictWriter(out, fieldnames=["case", "status", "error", "tol", "note"],
                           lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    else:
        out.write(f"{suite}: {len(rows) - failed}/{len(rows)} passed\n")
    return EXIT_VERIFY if failed else EXIT_OK


def _default_precision() -> int:
    env = os.environ.get("QZETA_PRECISION_BITS")
    if env is None:
        return DEFAULT_PRECISION
    try:
        return int(env)
    except ValueError:
        raise DomainError(f"QZETA_PRECISION_BITS must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", default="0.5", help="base q as a decimal or fraction string")
    common.add_argument("--prec-bits", type=int, default=None,
                        help="working precision (default $QZETA_PRECISION_BITS or 256)")
    common.add_argument("--eps-order", type=int, default=4)
    common.add_argument("--delta-order", type=int, default=4)
    common.add_argument("--tol", default=None, help="tolerance override")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="qzeta", description="Renormalized multiple q-zeta values.")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("compute", parents=[common], help="one renormalized value")
    c.add_argument("--s", type=int, nargs="+", required=True)
    c.add_argument("--f", type=int, nargs="+", default=None, help="shifting vector (0/1)")
    c.add_argument("--series", action="store_true", help="also print the plus part in eps")
    t = sub.add_parser("table", parents=[common], help="grid of renormalized values")
    t.add_argument("--entries", type=int, nargs="*", default=[0, -1])
    t.add_argument("--depth", type=int, default=1)
    v = sub.add_parser("verify", parents=[common], help="run a verification sweep")
    v.add_argument("--suite", choices=sorted(SUITES), required=True)
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        prec = args.prec_bits if args.prec_bits is not None else _default_precision()
        cfg = RunConfig(args.q, prec, args.eps_order, args.delta_order, args.tol, args.format)
        if args.command == "compute":
            if args.f is not None and len(args.f) != len(args.s):
                raise InvalidShift("--f must have as many entries as --s")
            return cmd_compute(cfg, args.s, args.f, out, args.series)
        if args.command == "table":
            if args.depth < 1:
                raise DomainError("--depth must be at least 1")
            return cmd_table(cfg, args.entries, args.depth, out)
        return cmd_verify(cfg, args.suite, out)
    except ResidualPole as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESIDUAL
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QZetaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
