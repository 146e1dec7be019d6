"""Dataclass configs with command-line overrides and JSON output."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import typing


def _flag(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text}")


def parse(cls, argv=None):
    """Build ``cls`` from defaults, overriding any field given as ``--name``."""
    ap = argparse.ArgumentParser(description=(cls.__doc__ or "").strip())
    hints = typing.get_type_hints(cls)
    for f in dataclasses.fields(cls):
        kind = hints[f.name]
        flag = "--" + f.name.replace("_", "-")
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        if typing.get_origin(kind) is tuple:
            item = typing.get_args(kind)[0]
            ap.add_argument(flag, nargs="*", type=item, default=default)
        elif kind is bool:
            ap.add_argument(flag, type=_flag, default=default)
        else:
            ap.add_argument(flag, type=kind, default=default)
    ns = ap.parse_args(argv)
    return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in vars(ns).items()})


def emit(config, rows, out=sys.stdout):
    json.dump({"config": dataclasses.asdict(config), "rows": rows}, out, indent=1)
    out.write("\n")
