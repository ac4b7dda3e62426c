"""Command-line front end: ``foldsing {classify,clairaut,portrait,trace,validate}``."""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

from . import expr as ex
from .clairaut import classify_family, dara_check, is_clairaut_type, is_reduced
from .classify import classify_equilibrium, classify_implicit_point, find_field_equilibria, scan_implicit
from .config import Config
from .errors import InputError, NumericError
from .flow import FlowLimits, integrate
from .portrait import PortraitSpec, Viewport, build, render_family, to_svg
from .report import (clairaut_equation_report, dumps, family_report, point_report, umbrella_report,
                     validate_report)
from .surface import UV, XYP, Box, EquationSurface
from .umbrella import UmbrellaInput, reduce_and_integrate
from .validate import run_suite

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str, n: int | None = None, what: str = "point") -> tuple[float, ...]:
    try:
        vals = tuple(float(s) for s in text.split(","))
    except ValueError as exc:
        raise InputError(f"{what} must be comma-separated numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise InputError(f"{what} needs {n} numbers, got {len(vals)}")
    return vals


def _parts(text: str, n: int, what: str) -> list[str]:
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != n or not all(parts):
        raise InputError(f"{what} needs {n} comma-separated expressions")
    return parts


def _config(args) -> Config:
    cfg = Config.load(args.config)
    overrides = {}
    for item in args.set or ():
        if "=" not in item:
            raise InputError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        one = Config.from_text(f"{key} = {value}")
        overrides[key] = getattr(one, key)
    if getattr(args, "tol_zero", None) is not None:
        overrides["tol_zero"] = args.tol_zero
    if getattr(args, "jet_order", None) is not None:
        overrides["jet_order"] = args.jet_order
    return cfg.with_overrides(**overrides)


def _surface(args) -> EquationSurface:
    box = Box.parse(args.box) if args.box else Box()
    aliases = {"ydot": ex.neg(ex.Var("p"))} if getattr(args, "xdot", 1) < 0 else None
    return EquationSurface.implicit(args.equation, box, aliases)


def _write_atomic(path: str, text: str) -> None:
    """Write via a temporary sibling so a failure leaves no partial file."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, obj) -> None:
    text = dumps(obj)
    if getattr(args, "output", None):
        _write_atomic(args.output, text)
    else:
        sys.stdout.write(text)


# -- commands ----------------------------------------------------------------

def _umbrella_chart(x: str, y: str, h: str, config: Config) -> UmbrellaInput:
    """Accept only charts of the shape (v^2, u, h)."""
    from .jets import evaluate_jet

    order = config.jet_order
    jx = evaluate_jet(ex.parse_expression(x, UV), (0, 0), order, UV)
    jy = evaluate_jet(ex.parse_expression(y, UV), (0, 0), order, UV)
    want_x = {(0, 2): 1.0}
    want_y = {(1, 0): 1.0}
    if jx.to_dict(1e-12) != want_x or jy.to_dict(1e-12) != want_y:
        raise InputError("parametric analysis expects the chart (v^2, u, h(u, v))")
    return UmbrellaInput.parse(h, order, config.tol_on_surface)


def cmd_classify(args) -> int:
    config = _config(args)
    given = [a for a in (args.equation, args.field, args.parametric) if a is not None]
    if len(given) != 1:
        raise InputError("give exactly one of --equation, --field, --parametric")
    if args.parametric is not None:
        x, y, h = _parts(args.parametric, 3, "--parametric")
        if args.at is not None and any(c != 0 for c in _floats(args.at, 2)):
            raise InputError("parametric analysis runs at the chart origin (u, v) = (0, 0)")
        cert = reduce_and_integrate(_umbrella_chart(x, y, h, config), config)
        out = umbrella_report(cert, args.parametric, config)
    elif args.field is not None:
        f = _parts(args.field, 2, "--field")
        if args.scan:
            box = Box.parse(args.box) if args.box else Box()
            out = [point_report(classify_equilibrium(f, q, config), "field", args.field, config)
                   for q in find_field_equilibria(f, box, config)]
        else:
            at = _floats(args.at or "0,0", 2)
            out = point_report(classify_equilibrium(f, at, config), "field", args.field, config)
    else:
        s = _surface(args)
        if args.scan:
            out = [point_report(r, "equation", args.equation, config) for r in scan_implicit(s, s.box, config)]
        else:
            at = _floats(args.at or "0,0,0", 3)
            out = point_report(classify_implicit_point(s, at, config), "equation", args.equation, config)
    for rep in out if isinstance(out, list) else [out]:
        validate_report(rep)
    _emit(args, out)
    return EXIT_OK


def cmd_clairaut(args) -> int:
    config = _config(args)
    if (args.family is None) == (args.equation is None):
        raise InputError("give exactly one of --family, --equation")
    if args.family is not None:
        out = family_report(classify_family(args.family, config), args.family, config)
    else:
        s = _surface(args)
        base = _floats(args.at or "0,0,0", 3)
        out = clairaut_equation_report(args.equation, base, is_clairaut_type(s, s.box, config),
                                       is_reduced(s, s.box, config), dara_check(s, base, args.order, config),
                                       config)
    validate_report(out)
    _emit(args, out)
    return EXIT_OK


def cmd_portrait(args) -> int:
    config = _config(args)
    given = [a for a in (args.equation, args.field, args.family) if a is not None]
    if len(given) != 1:
        raise InputError("give exactly one of --equation, --field, --family")
    box = Box.parse(args.box) if args.box else Box()
    vp = Viewport.of(box)
    if args.family is not None:
        t_range = _floats(args.t_range, 2, "--t-range")
        svg = render_family(args.family, t_range, viewport=vp, width=args.width, height=args.height, config=config)
        summary = {"output": args.output, "family": args.family, "kind": classify_family(args.family, config).kind}
    else:
        grid = args.grid or config.portrait_grid
        if args.field is not None:
            f = tuple(ex.parse_expression(e, ("x", "y")) for e in _parts(args.field, 2, "--field"))
            spec = PortraitSpec(vector_field=f, box=box, grid=grid, seeds="list" if args.seed else "grid",
                                points=[_floats(q) for q in args.seed or ()], width=args.width, height=args.height)
        else:
            s = _surface(args)
            spec = PortraitSpec(surface=s, box=box, grid=grid, seeds="list" if args.seed else args.seeds,
                                points=[_floats(q, 3) for q in args.seed or ()], width=args.width,
                                height=args.height)
        portrait = build(spec, config)
        svg = to_svg(portrait)
        summary = {"output": args.output, **portrait.summary()}
    _write_atomic(args.output, svg)
    sys.stdout.write(dumps(summary))
    return EXIT_OK


def cmd_trace(args) -> int:
    config = _config(args)
    s = _surface(args)
    seed = _floats(args.seed, 3, "--seed")
    if args.dir not in (-1, 1):
        raise InputError("--dir must be 1 or -1")
    limits = FlowLimits(max_length=args.max_length, max_step=args.max_step)
    curve = integrate(s, seed, args.dir, limits, s.box, config)
    _write_atomic(args.output, curve.to_csv())
    events = [{"index": i, "event": e, "t": float(curve.t[i])} for i, e in curve.events]
    sys.stdout.write(dumps({"output": args.output, "samples": len(curve), "length": curve.length,
                            "events": events}))
    return EXIT_OK


def cmd_validate(args) -> int:
    config = _config(args)
    result = run_suite(config)
    for row in result["cases"]:
        if row["report"] is not None:
            validate_report(row["report"])
    _emit(args, result)
    return EXIT_OK if result["failed"] == 0 else EXIT_NUMERIC


# -- parser ------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value config file (default: $FOLDSING_CONFIG)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--tol-zero", type=float, help="zero test tolerance")
    p.add_argument("--jet-order", type=int, help="jet truncation order")


def _equation_args(p: argparse.ArgumentParser, required: bool = False):
    p.add_argument("--equation", required=required, help="G(x, y, p) or 'lhs = rhs'; ydot is an alias of p")
    p.add_argument("--xdot", type=int, choices=(-1, 1), default=1, help="sign of xdot; ydot = xdot * p")
    p.add_argument("--box", help="x_min,x_max,y_min,y_max,p_min,p_max")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="foldsing", description="Point singularities of implicit first-order ODEs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="classify a point (or scan a box)")
    _equation_args(p)
    p.add_argument("--field", help="plane field f1,f2 over x, y")
    p.add_argument("--parametric", help="chart x,y,p over u, v; must be v^2,u,h")
    p.add_argument("--at", help="point (x,y,p), or (x,y) for --field")
    p.add_argument("--scan", action="store_true", help="find and classify all singular points in --box")
    p.add_argument("-o", "--output", help="write JSON here instead of stdout")
    _common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("clairaut", help="Clairaut tests for a family F(t,x) or an equation G")
    p.add_argument("--family", help="generating family F(t, x)")
    _equation_args(p)
    p.add_argument("--at", help="base point for the Dara test (default origin)")
    p.add_argument("--order", type=int, default=4, help="jet order of the Dara test")
    p.add_argument("-o", "--output")
    _common(p)
    p.set_defaults(func=cmd_clairaut)

    p = sub.add_parser("portrait", help="render an SVG phase portrait")
    _equation_args(p)
    p.add_argument("--field", help="plane field f1,f2 over x, y")
    p.add_argument("--family", help="generating family F(t, x): draw solutions and envelope")
    p.add_argument("--t-range", default="-1,1", help="t interval for --family")
    p.add_argument("--grid", type=int, help="seed grid size n (n x n)")
    p.add_argument("--seeds", choices=("grid", "criminant", "eigen"), default="grid")
    p.add_argument("--seed", action="append", help="explicit seed point (repeatable)")
    p.add_argument("--width", type=int, default=480)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("-o", "--output", required=True)
    _common(p)
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("trace", help="integrate one phase curve to CSV")
    _equation_args(p, required=True)
    p.add_argument("--seed", required=True, help="x,y,p")
    p.add_argument("--dir", type=int, default=1)
    p.add_argument("--max-length", type=float, default=10.0)
    p.add_argument("--max-step", type=float, default=None)
    p.add_argument("-o", "--output", required=True)
    _common(p)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("validate", help="run the built-in normal-form suite")
    p.add_argument("-o", "--output")
    _common(p)
    p.set_defaults(func=cmd_validate)
    return parser


_VALUE_OPTIONS = frozenset({"--box", "--at", "--seed", "--t-range", "--field", "--equation", "--parametric",
                            "--family"})


def _glue(argv: list[str]) -> list[str]:
    """Join value options with their argument so values like -1,1,... are not read as flags."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_OPTIONS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(_glue(list(sys.argv[1:] if argv is None else argv)))
    try:
        return args.func(args)
    except InputError as exc:
        print(f"foldsing: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"foldsing: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
