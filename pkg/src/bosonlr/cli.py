"""Command-line entry point.

    bosonlr run <subcommand> <config.yaml> [--threads N] [--seed S]
                [--dense-threshold D] [--out DIR]

Exit status is 0 when every check passes, 1 when any check fails and 2 on a
configuration error.  Outputs go to --out, else $BOSONLR_OUT, else
``bosonlr_out/<subcommand>``.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import experiments as E
from .config import ConfigError, load_config

SUBCOMMANDS = ("lightcone", "moments", "truncation", "duhamel", "opineq", "badstate",
               "interp", "bounds")
OUT_ENV = "BOSONLR_OUT"

_AUDITS = {
    "moments": E.moment_conservation_audit,
    "truncation": E.truncation_error_audit,
    "duhamel": E.duhamel_inequality_audit,
    "opineq": E.operator_inequality_audit,
    "badstate": E.badstate_audit,
    "interp": E.interpolation_audit,
    "bounds": E.bounds_audit,
}


# ------------------------------------------------------------ serialization

def format_float(x):
    """17 significant digits; nan/inf as JSON-style tokens."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


def to_json(obj, indent=2, _level=0):
    """JSON text with sorted keys and 17-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{pad}{json.dumps(k)}: {to_json(v, indent, _level + 1)}"
                          for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        body = ",\n".join(pad + to_json(v, indent, _level + 1) for v in obj)
        return "[\n" + body + "\n" + end + "]"
    if hasattr(obj, "to_dict"):
        return to_json(obj.to_dict(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _row(rec):
    return rec.row() if hasattr(rec, "row") else dict(rec)


def emit(records, fmt, path):
    """Write records as CSV (scan header) or JSON."""
    if records is None or (hasattr(records, "__len__") and len(records) == 0):
        raise ValueError("nothing to emit")
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(E.CSV_FIELDS) + "\n")
        for rec in records:
            row = _row(rec)
            buf.write(",".join("" if row[k] is None else format_float(row[k])
                               if isinstance(row[k], float) else str(row[k])
                               for k in E.CSV_FIELDS) + "\n")
        text = buf.getvalue()
    elif fmt == "json":
        data = [_row(r) for r in records] if isinstance(records, list) else records
        text = to_json(data) + "\n"
    else:
        raise ValueError("format must be 'csv' or 'json'")
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append({k: (None if v == "" else int(v) if k == "R" else float(v))
                    for k, v in r.items()})
    return out


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# ------------------------------------------------------------------- run

def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def output_dir(sub, out=None):
    if out:
        return out
    env = os.environ.get(OUT_ENV)
    return env if env else os.path.join("bosonlr_out", sub)


def run(sub, config_path, threads=None, seed=None, dense_threshold=None, out=None,
        stdout=None, stderr=None):
    """Run one experiment and return the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    if sub not in SUBCOMMANDS:
        print(f"unknown subcommand {sub!r}; choose from {', '.join(SUBCOMMANDS)}", file=stderr)
        return 2
    started = _now()
    overrides = {"threads": threads, "seed": seed, "dense_threshold": dense_threshold}
    try:
        cfg = load_config(config_path, overrides)
        if sub == "lightcone":
            records = E.lightcone_scan(cfg)
            rep = E.lightcone_report(cfg, records)
        else:
            records = None
            rep = _AUDITS[sub](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return 2
    except OSError as exc:
        print(f"config error: <file>: {exc}", file=stderr)
        return 2
    except E.PreconditionError as exc:
        print(f"config error: precondition: {exc}", file=stderr)
        return 2
    odir = output_dir(sub, out)
    os.makedirs(odir, exist_ok=True)
    outputs = []
    if records is not None:
        path = os.path.join(odir, "scan.csv")
        emit(records, "csv", path)
        outputs.append(path)
    path = os.path.join(odir, "report.json")
    emit(rep.to_dict(), "json", path)
    outputs.append(path)
    text = rep.to_text()
    path = os.path.join(odir, "report.txt")
    with open(path, "w") as fh:
        fh.write(text)
    outputs.append(path)
    stdout.write(text)
    if sub == "bounds":
        stdout.write(to_json(rep.data) + "\n")
    manifest = {
        "config": cfg.raw,
        "version": __version__,
        "subcommand": sub,
        "started": started,
        "finished": _now(),
        "results": {sub: "PASS" if rep.passed else "FAIL"},
        "outputs": outputs,
        "run": {"seed": cfg.seed, "threads": cfg.threads,
                "dense_threshold": cfg.dense_threshold},
    }
    emit(manifest, "json", os.path.join(odir, "manifest.json"))
    return 0 if rep.passed else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="bosonlr", description="Light-cone experiments and "
                                 "audits for Bose-Hubbard type models.")
    subs = ap.add_subparsers(dest="command", required=True)
    r = subs.add_parser("run", help="run an experiment")
    r.add_argument("subcommand", choices=SUBCOMMANDS)
    r.add_argument("config")
    r.add_argument("--threads", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--dense-threshold", type=int)
    r.add_argument("--out")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.config, args.threads, args.seed, args.dense_threshold,
               args.out)


if __name__ == "__main__":
    sys.exit(main())
