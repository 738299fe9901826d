"""Command line interface.

    hardy-lorentz [--mode M] [--seed S] [--tolerance T] <command> [options] [input]

Inputs are JSON documents read from a file path or standard input.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import arith
from .atomic import decompose
from .bmo import EstimatorConfig, bmo_exact, bmo_seq_estimate
from .errors import HardyLorentzError
from .experiments import EXPERIMENTS, run_experiment
from .fracint import fractional_integral
from .hardy import ALL_NORMS, h_norm, qd_norm
from .lorentz import LorentzIndex, lorentz_norm, parse_exponent
from .process import enumerate_stopping_times
from .serialize import (
    decomposition_doc,
    dumps,
    martingale_doc,
    parse_decomposition,
    parse_martingale,
    parse_tree,
)

NORM_KINDS = ALL_NORMS + ("Lpq", "bmo", "bmo-seq")

EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_HARD_FAILURE = 1


def _read_doc(path: str | None) -> dict:
    if path in (None, "-"):
        return json.load(sys.stdin)
    with open(path) as fh:
        return json.load(fh)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt_value(x) -> str:
    return f"{float(x):.17g}"


def _martingale_input(doc: dict, mode: str, residual: bool = False):
    if "decomposition" in doc:
        dec = parse_decomposition(doc, mode)
        return dec.source - dec.reconstruct() if residual else dec.source
    return parse_martingale(doc, mode)


def cmd_norm(args) -> int:
    f = _martingale_input(_read_doc(args.input), args.mode, args.residual)
    p, q = parse_exponent(args.p), parse_exponent(args.q)
    if args.kind in ("star", "S", "s"):
        value = h_norm(f, args.kind, LorentzIndex(p, q))
    elif args.kind in ("Q", "D"):
        value = qd_norm(f, args.kind, LorentzIndex(p, q))
    elif args.kind == "Lpq":
        value = lorentz_norm(f.terminal, f.tree.leaf_masses(), LorentzIndex(p, q))
    elif args.kind == "bmo":
        value = bmo_exact(f, float(args.r), float(args.alpha))
    else:
        est = bmo_seq_estimate(f, float(args.r), float(q), float(args.alpha), EstimatorConfig(seed=args.seed))
        if args.witness:
            _emit(dumps(est.to_doc()), args.out)
            return 0
        value = est.value
    _emit(_fmt_value(value) + "\n", args.out)
    return 0


def cmd_decompose(args) -> int:
    f = parse_martingale(_read_doc(args.input), args.mode)
    dec = decompose(f, parse_exponent(args.p), args.target, A=parse_exponent(args.A))
    _emit(dumps(decomposition_doc(dec)), args.out)
    return 0


def cmd_fracint(args) -> int:
    f = parse_martingale(_read_doc(args.input), args.mode)
    _emit(dumps(martingale_doc(fractional_integral(f, parse_exponent(args.alpha)))), args.out)
    return 0


def cmd_experiment(args) -> int:
    config = _read_doc(args.config)
    report = run_experiment(args.name, config)
    if args.out:
        report.write(args.out)
    sys.stdout.write(dumps(report.summary_doc()))
    return 0 if report.ok else EXIT_HARD_FAILURE


def cmd_enumerate(args) -> int:
    doc = _read_doc(args.input)
    tree = parse_tree(doc["tree"] if "tree" in doc else doc, args.mode)
    times = [list(nu.stop_set) for nu in enumerate_stopping_times(tree, args.cap)]
    _emit(dumps({"count": len(times), "stopping_times": times}), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hardy-lorentz", description=__doc__.splitlines()[0] if __doc__ else None)
    ap.add_argument("--mode", choices=arith.MODES, default=arith.RATIONAL)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tolerance", type=float, default=None, help="relative tolerance for float mode")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_io(p):
        p.add_argument("input", nargs="?", default=None, help="input document (default: stdin)")
        p.add_argument("--out", default=None)
        return p

    p = with_io(sub.add_parser("norm", help="norm of a serialized martingale"))
    p.add_argument("--kind", choices=NORM_KINDS, required=True)
    p.add_argument("--p", default="1")
    p.add_argument("--q", default="1")
    p.add_argument("--r", default="2")
    p.add_argument("--alpha", default="0")
    p.add_argument("--residual", action="store_true", help="on a decomposition document, use f minus the reconstruction")
    p.add_argument("--witness", action="store_true", help="bmo-seq: print the estimate with its witness")
    p.set_defaults(func=cmd_norm)

    p = with_io(sub.add_parser("decompose", help="atomic decomposition document"))
    p.add_argument("--target", choices=("s", "Q", "D"), required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--A", default="3")
    p.set_defaults(func=cmd_decompose)

    p = with_io(sub.add_parser("fracint", help="fractional integral of a martingale"))
    p.add_argument("--alpha", required=True)
    p.set_defaults(func=cmd_fracint)

    p = sub.add_parser("experiment", help="run a batch experiment")
    p.add_argument("--name", choices=EXPERIMENTS, required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="directory for the CSV and JSON summary")
    p.set_defaults(func=cmd_experiment)

    p = with_io(sub.add_parser("enumerate-stopping-times", help="list every stop rule of a tree"))
    p.add_argument("--cap", type=int, default=10**6)
    p.set_defaults(func=cmd_enumerate)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if args.tolerance is not None:
        arith.FLOAT_RTOL = args.tolerance
    try:
        return args.func(args)
    except HardyLorentzError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_USAGE
