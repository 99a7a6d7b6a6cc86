"""Command-line front end.

Exit codes: 0 when every requested check passes, 1 on a failed check or a
computation aborted by a consistency gate, 2 on a usage error and 3 when an
input or output file cannot be read, parsed or written.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .calculus import Calculus
from .errors import QMError, StructureParseError
from .exterior import build_antisymmetrizer
from .fock import BraidOperator, fock_suite, load_braid
from .ncalgebra import build_engine
from .operators import GammaSet, identity_suite, make_classical_gammas
from .structures import _matrix, dump_structure, load_structure, validate
from .waves import DispersionModel, evaluate_grid, verify_u_algebra, verify_z0_series

__all__ = ["run", "main", "parse_grid"]


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers

def _load(path):
    try:
        return load_structure(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except StructureParseError as exc:
        raise InputError(f"{path}: {exc}") from None


def _calculus(sd):
    sd.require_valid()
    return Calculus(build_engine(sd))


def _fmt(x) -> str:
    return f"{x:.17g}"


def parse_grid(text: str, n: int):
    """Axis values for every coordinate from ``a:b:steps`` or single values."""
    items = text.split(",")
    if len(items) != n:
        raise UsageError(f"--grid needs {n} comma-separated entries, got {len(items)}")
    axes = []
    for item in items:
        parts = item.split(":")
        try:
            if len(parts) == 1:
                axes.append([float(parts[0])])
            elif len(parts) == 3:
                steps = int(parts[2])
                if steps < 1:
                    raise UsageError(f"grid entry {item!r}: steps must be >= 1")
                axes.append([float(v) for v in np.linspace(float(parts[0]), float(parts[1]), steps)])
            else:
                raise ValueError
        except ValueError:
            raise UsageError(f"bad grid entry {item!r}; expected a:b:steps or a number") from None
    return axes


def _check_lines(checks):
    out = []
    for c in checks:
        tag = {"pass": "PASS", "fail": "FAIL", "skip": "SKIP"}[c.status]
        line = f"{tag}  {c.name}"
        if c.witness:
            line += f": {c.witness}"
        out.append(line)
    return out


def _checks_json(checks):
    return [{"name": c.name, "status": c.status, "witness": c.witness} for c in checks]


def _summary(checks) -> str:
    ran = [c for c in checks if c.status != "skip"]
    return f"{sum(c.passed for c in ran)}/{len(ran)} checks passed"


def _report(args, out, checks, extra=None) -> int:
    checks = list(checks)
    ok = all(c.status != "fail" for c in checks)
    if args.json:
        doc = dict(extra or {})
        doc.update(checks=_checks_json(checks), summary=_summary(checks), ok=ok)
        print(json.dumps(doc, indent=1), file=out)
    else:
        for line in _check_lines(checks):
            print(line, file=out)
        print(_summary(checks), file=out)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# subcommands

def cmd_validate(args, out) -> int:
    sd = _load(args.structure)
    if args.dump:
        print(dump_structure(sd), file=out)
        return 0
    return _report(args, out, validate(sd))


def cmd_dims(args, out) -> int:
    sd = _load(args.structure)
    sd.require_valid()
    rows = []
    for k in range(args.max_degree + 1):
        a = build_antisymmetrizer(sd, k, max_degree=max(args.max_degree, 1))
        rows.append({"degree": k, "size": sd.n ** k, "rank": a.rank})
    if args.json:
        print(json.dumps({"rows": rows}, indent=1), file=out)
    else:
        print(f"{'n':>3} {'N^n':>8} {'rank':>6}", file=out)
        for r in rows:
            print(f"{r['degree']:>3} {r['size']:>8} {r['rank']:>6}", file=out)
    return 0


def cmd_derive(args, out) -> int:
    sd = _load(args.structure)
    calc = _calculus(sd)
    if not 0 <= args.index < sd.n:
        raise UsageError(f"index {args.index} out of range 0..{sd.n - 1}")
    try:
        poly = calc.engine.parse(args.poly)
    except StructureParseError as exc:
        raise UsageError(f"bad polynomial {args.poly!r}: {exc}") from None
    result = calc.partial(args.index, poly)
    if args.json:
        print(json.dumps({"input": str(poly), "index": args.index, "result": str(result)}), file=out)
    else:
        print(result, file=out)
    return 0


def _read_gammas(path):
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if isinstance(data, dict):
        data = data.get("gammas")
    if not isinstance(data, list) or not data:
        raise InputError(f"{path}: expected a list of gamma matrices or an object with 'gammas'")
    try:
        mats = [_matrix(m, f"gammas[{a}]") for a, m in enumerate(data)]
    except StructureParseError as exc:
        raise InputError(f"{path}: {exc}") from None
    return GammaSet.from_lists(mats)


def cmd_identities(args, out) -> int:
    sd = _load(args.structure)
    calc = _calculus(sd)
    note = None
    if args.gammas:
        gammas = _read_gammas(args.gammas)
    elif sd.gammas is not None:
        gammas = GammaSet.from_lists(sd.gammas)
    else:
        try:
            gammas = make_classical_gammas(sd)
        except QMError as exc:
            gammas, note = None, f"no gamma matrices ({exc})"
    checks = identity_suite(calc, gammas, max_degree=args.max_degree, seed=args.seed,
                            samples=args.samples)
    if note and not args.json:
        print(f"note: {note}", file=out)
    return _report(args, out, checks, {"note": note} if note else None)


def cmd_dispersion(args, out) -> int:
    sd = _load(args.structure)
    _calculus(sd)
    model = DispersionModel.from_structure(sd, args.mass)
    axes = parse_grid(args.grid, sd.n)
    if args.emit_gnuplot and not args.out:
        raise UsageError("--emit-gnuplot needs --out")
    points = list(itertools.product(*axes))
    results = evaluate_grid(model, points, jobs=args.jobs)
    header = [f"p{k}" for k in range(sd.n)] + ["m2", "re_prop", "im_prop"]
    rows = []
    for p, (m2, prop) in zip(points, results):
        re, im = (math.nan, math.nan) if prop is None else (prop.real, prop.imag)
        rows.append(list(p) + [m2, re, im])
    poles = sum(1 for _, prop in results if prop is None)
    text = ",".join(header) + "\n" + "".join(",".join(_fmt(v) for v in r) + "\n" for r in rows)
    if args.out:
        try:
            Path(args.out).write_text(text)
            if args.emit_gnuplot:
                _gnuplot_path(args.out).write_text(_gnuplot(args.out, header, axes))
        except OSError as exc:
            raise InputError(f"cannot write {args.out}: {exc.strerror or exc}") from None
    if args.json:
        doc = {"header": header, "rows": len(rows), "poles": poles, "out": args.out}
        if not args.out:
            doc["data"] = [[None if math.isnan(v) else v for v in r] for r in rows]
        print(json.dumps(doc, indent=1), file=out)
    elif args.out:
        print(f"wrote {len(rows)} rows to {args.out} ({poles} on-shell)", file=out)
    else:
        out.write(text)
    return 0


def _gnuplot_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".gp")


def _gnuplot(csv_path, header, axes) -> str:
    name = Path(csv_path).name
    varying = [k for k, ax in enumerate(axes) if len(ax) > 1]
    col = {h: i + 1 for i, h in enumerate(header)}
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set datafile missing 'nan'",
    ]
    if len(varying) >= 2:
        a, b = varying[:2]
        lines += [f"set xlabel 'p{a}'", f"set ylabel 'p{b}'", "set zlabel 'm2'",
                  f"splot '{name}' using {a + 1}:{b + 1}:{col['m2']} with points"]
    elif len(varying) == 1:
        a = varying[0]
        lines += [f"set xlabel 'p{a}'",
                  f"plot '{name}' using {a + 1}:{col['m2']} with lines, "
                  f"'' using {a + 1}:{col['re_prop']} with lines"]
    else:
        lines += [f"plot '{name}' using 0:{col['m2']} with points"]
    lines.append("pause mouse close")
    return "\n".join(lines) + "\n"


def cmd_fock_check(args, out) -> int:
    sd = _load(args.structure)
    calc = _calculus(sd)
    if args.braid:
        try:
            braid = load_braid(args.braid, calc.engine)
        except OSError as exc:
            raise InputError(f"cannot read {args.braid}: {exc.strerror or exc}") from None
        except StructureParseError as exc:
            raise InputError(str(exc)) from None
    else:
        braid = BraidOperator(calc.engine)

    def W(a):
        return calc.partial(0, a)

    checks = fock_suite(braid, args.n, W=W, seed=args.seed, samples=args.samples)
    return _report(args, out, checks, {"n": args.n, "braid": "flip" if braid.is_flip else "matrix"})


def cmd_verify_series(args, out) -> int:
    sd = _load(args.structure)
    calc = _calculus(sd)
    checks = []
    ran = False
    if sd.z_is_zero:
        ran = True
        n_max = args.n_max if args.n_max is not None else 4
        checks += [replace(c, name=f"[Z=0] {c.name}") for c in verify_z0_series(calc, n_max)]
    if sd.is_flip:
        ran = True
        n_max = args.n_max if args.n_max is not None else 6
        checks += [replace(c, name=f"[R=tau] {c.name}") for c in verify_u_algebra(calc, n_max)]
    if not ran:
        raise QMError("plane-wave series need Z = 0 or R = tau")
    return _report(args, out, checks)


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed for randomized suites (default 42)")

    parser = argparse.ArgumentParser(
        prog="qminkowski",
        description="Exact differential calculus on quantum Minkowski spaces.",
        epilog="Exit codes: 0 all checks pass, 1 check failed, 2 usage error, 3 I/O error.",
    )
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--seed", type=int, default=42, help="seed for randomized suites (default 42)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("validate", parents=[common], help="check structure data consistency")
    p.add_argument("structure")
    p.add_argument("--dump", action="store_true", help="print the canonical structure file instead")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dims", parents=[common], help="ranks of the antisymmetrizers")
    p.add_argument("structure")
    p.add_argument("--max-degree", type=int, default=5)
    p.set_defaults(func=cmd_dims)

    p = sub.add_parser("derive", parents=[common], help="partial derivative of a polynomial")
    p.add_argument("structure")
    p.add_argument("poly", help="e.g. '(3/2+1/2i)*x0*x2 + x1'")
    p.add_argument("index", type=int)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("identities", parents=[common], help="operator identity suite")
    p.add_argument("structure")
    p.add_argument("--gammas", help="JSON file with gamma matrices")
    p.add_argument("--max-degree", type=int, default=4)
    p.add_argument("--samples", type=int, default=6)
    p.set_defaults(func=cmd_identities)

    p = sub.add_parser("dispersion", parents=[common], help="sample m^2 and the propagator")
    p.add_argument("structure")
    p.add_argument("--grid", required=True, help="a:b:steps or a value per coordinate, comma separated")
    p.add_argument("--mass", type=float, default=0.0)
    p.add_argument("--out", help="CSV file (default stdout)")
    p.add_argument("--emit-gnuplot", action="store_true", help="write <out>.gp next to the CSV")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("fock-check", parents=[common], help="interchange operator and Fock suite")
    p.add_argument("structure")
    p.add_argument("--braid", help='JSON file {"n": N, "b": [[...]]}; default is the flip')
    p.add_argument("-n", type=int, default=3, help="number of particles")
    p.add_argument("--samples", type=int, default=3)
    p.set_defaults(func=cmd_fock_check)

    p = sub.add_parser("verify-series", parents=[common], help="plane-wave series identities")
    p.add_argument("structure")
    p.add_argument("--n-max", type=int, default=None)
    p.set_defaults(func=cmd_verify_series)
    return parser


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"qminkowski: error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"qminkowski: {exc}", file=sys.stderr)
        return 3
    except QMError as exc:
        print(f"qminkowski: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())
