"""``subhyp`` command-line front end.

Every subcommand writes one JSON document (to ``--out`` or stdout) carrying
``schema_version``, the resolved configuration, the grid step ``h`` and the
seed.  Exit codes: 0 success, 1 geometry or I/O error (error JSON), 2 usage
error, 3 when ``verify`` finds a failed invariant check.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .domain import MAX_CELLS, PolygonDomain, load_domain
from .errors import GeometryError
from .generators import GENERATORS, DomainSpec, generate
from .geom import Point, Square
from .growing import build_fields, evaluate_h_m, growing_inequalities_report
from .metrics import alpha_from_p, arc_diameter_estimate, classify_extension, d_alpha, s_alpha_estimate
from .narrow_path import build_narrow_chain, verify_narrow_invariants
from .render import render_svg
from .separation import separating_square
from .wide_path import build_wide_chain, complement_report, verify_wide_invariants

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_GEOMETRY, EXIT_USAGE, EXIT_AUDIT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _point(text: str) -> Point:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}") from None
    if not (math.isfinite(x) and math.isfinite(y)):
        raise argparse.ArgumentTypeError(f"non-finite coordinate in {text!r}")
    return Point(x, y)


def _square(text: str) -> Square:
    try:
        cx, cy, r = (float(v) for v in text.split(","))
        return Square(Point(cx, cy), r)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected cx,cy,r with r > 0 but got {text!r}") from None


def _positive(kind):
    def parse(text: str):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v
    parse.__name__ = f"positive {kind.__name__}"
    return parse


def _params(text: str) -> dict:
    """``{"n": 6}`` or ``n=6,omega=0.05``."""
    text = text.strip()
    if not text:
        return {}
    if text.startswith("{"):
        try:
            value = json.loads(text)
        except json.JSONDecodeError as exc:
            raise argparse.ArgumentTypeError(f"bad params JSON: {exc}") from None
        if not isinstance(value, dict):
            raise argparse.ArgumentTypeError("params JSON must be an object")
        return value
    out = {}
    for item in text.split(","):
        key, sep, raw = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected key=value but got {item!r}")
        try:
            num = float(raw)
        except ValueError:
            raise argparse.ArgumentTypeError(f"non-numeric value in {item!r}") from None
        out[key.strip()] = int(num) if num.is_integer() and "." not in raw else num
    return out


def _clean(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars unwrapped, tuples to lists, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Square):
        return obj.to_dict()
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _emit(doc: dict, out: Optional[str]) -> None:
    text = dumps(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_domain(args) -> PolygonDomain:
    data = json.loads(Path(args.domain).read_text())
    verts = data.get("vertices") if isinstance(data, dict) else None
    if verts is None:
        raise GeometryError("domain file has no 'vertices' list", path=str(args.domain))
    d = load_domain(verts)
    d.max_cells = args.max_cells
    return d


def _grid(args, d: PolygonDomain):
    if args.h is None:
        args.h = d.default_h()
    return d.grid(args.h)


def _config(args) -> dict:
    # Output locations are not part of the run configuration, so two runs that
    # differ only in where they write produce identical documents.
    skip = {"func", "config", "command", "out", "svg", "trace_csv"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _envelope(args, result: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": args.command, "config": _config(args),
            "h": getattr(args, "h", None), "seed": getattr(args, "seed", None), "result": result}


# ---------------------------------------------------------------- commands

def cmd_gen(args) -> tuple[dict, int]:
    d = generate(DomainSpec(args.kind, args.params, args.seed))
    doc = {"schema_version": SCHEMA_VERSION, "vertices": d.vertices.tolist(),
           "generator": {"kind": args.kind, "params": args.params, "seed": args.seed}}
    return doc, EXIT_OK


def cmd_separate(args) -> tuple[dict, int]:
    d = _load_domain(args)
    g = _grid(args, d)
    sep = separating_square(d, g, args.host, args.b)
    return _envelope(args, {"square": sep.square.to_dict(), "anchor": list(sep.anchor), "verdict": sep.verdict,
                            "param": sep.param, "verified": list(sep.verified),
                            "evaluations": sep.evaluations}), EXIT_OK


def _wide(args, d: PolygonDomain):
    return build_wide_chain(d, _grid(args, d), args.source, args.target, max_k=args.max_k)


def cmd_wide_path(args) -> tuple[dict, int]:
    d = _load_domain(args)
    chain = _wide(args, d)
    if args.svg:
        render_svg(d, [chain], out=args.svg)
    return _envelope(args, chain.to_dict()), EXIT_OK


def cmd_narrow_path(args) -> tuple[dict, int]:
    d = _load_domain(args)
    chain = build_narrow_chain(_wide(args, d), d)
    if args.svg:
        render_svg(d, [chain], out=args.svg)
    return _envelope(args, chain.to_dict()), EXIT_OK


def cmd_dalpha(args) -> tuple[dict, int]:
    d = _load_domain(args)
    res = d_alpha(d, _grid(args, d), args.source, args.target, args.alpha, refine=args.refine)
    return _envelope(args, res.to_dict()), EXIT_OK


def cmd_salpha(args) -> tuple[dict, int]:
    d = _load_domain(args)
    g = _grid(args, d)
    est = s_alpha_estimate(d, g, args.alpha, args.budget, args.seed, args.probe or ())
    result = est.to_dict()
    if args.arc_diameter:
        result["arc_diameter"] = arc_diameter_estimate(d, g, args.budget, args.seed, args.probe or ())
    return _envelope(args, result), EXIT_OK


def cmd_classify(args) -> tuple[dict, int]:
    d = _load_domain(args)
    verdict = classify_extension(d, _grid(args, d), args.p, args.m, args.budget, args.seed, args.probe or ())
    if args.trace_csv:
        with open(args.trace_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["h", "budget", "value"])
            for row in verdict.growth_trace:
                w.writerow([repr(row["h"]), row["budget"], repr(row["value"])])
    return _envelope(args, verdict.to_dict()), EXIT_OK


def _fields(args, d: PolygonDomain):
    narrow = build_narrow_chain(_wide(args, d), d)
    weight, grid, fields = build_fields(narrow, args.p, args.narrow_h, args.max_cells)
    return narrow, grid, fields


def cmd_growing_fn(args) -> tuple[dict, int]:
    d = _load_domain(args)
    narrow, grid, fields = _fields(args, d)
    at = args.at or narrow.parent.y
    ev = evaluate_h_m(fields, args.m, at, seed=args.seed)
    rep = growing_inequalities_report(narrow, fields, args.m, args.p)
    return _envelope(args, {"h_m": ev.value, "phi1": ev.phi[0], "phi2": ev.phi[1], "at": list(ev.z),
                            "narrow_h": grid.h, "path_value": ev.path_value, "alt_value": ev.alt_value,
                            "path_residual": ev.residual,
                            "derivative_checks": rep.values.get("derivatives", {}),
                            "inequality_report": rep.to_dict()}), EXIT_OK


def _chain_doc(path: str) -> dict:
    doc = json.loads(Path(path).read_text())
    return doc.get("result", doc)


def cmd_render(args) -> tuple[Optional[dict], int]:
    d = _load_domain(args)
    chains = [_chain_doc(p) for p in args.chain or ()]
    geodesics = [_chain_doc(p)["path"] for p in args.geodesic or ()]
    render_svg(d, chains, geodesics, out=args.out)
    return None, EXIT_OK


def run_audit(d: PolygonDomain, x, y, h: float, p: float = 4.0, m: int = 2,
              narrow_h: Optional[float] = None, max_cells: int = MAX_CELLS, max_k: int = 10_000) -> dict:
    """Wide and narrow invariants, complement structure at ``h`` and ``h/2`` and the chain inequalities."""
    g = d.grid(h)
    wide = build_wide_chain(d, g, x, y, max_k=max_k)
    audits = {"wide": verify_wide_invariants(wide, d, g).to_dict(),
              "complement": complement_report(wide, d, g).to_dict(),
              "complement_half_h": complement_report(wide, d, d.grid(h / 2)).to_dict()}
    narrow = build_narrow_chain(wide, d)
    audits["narrow"] = verify_narrow_invariants(narrow, d, g).to_dict()
    alpha = alpha_from_p(p)
    dist = d_alpha(d, g, x, y, alpha).value
    _, _, fields = build_fields(narrow, p, narrow_h, max_cells)
    audits["growing"] = growing_inequalities_report(narrow, fields, m, p, d_alpha_value=dist).to_dict()
    return {"passed": all(a["passed"] for a in audits.values()), "k": wide.k, "alpha": alpha,
            "d_alpha": dist, "audits": audits}


def cmd_verify(args) -> tuple[dict, int]:
    d = _load_domain(args)
    if args.h is None:
        args.h = d.default_h()
    result = run_audit(d, args.source, args.target, args.h, args.p, args.m, args.narrow_h,
                       args.max_cells, args.max_k)
    return _envelope(args, result), EXIT_OK if result["passed"] else EXIT_AUDIT


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser, domain: bool = True, out_required: bool = False) -> None:
    if domain:
        p.add_argument("--domain", required=True, help="domain JSON file with a 'vertices' list")
        p.add_argument("--h", type=_positive(float), default=None, help="grid step (default: bbox diagonal / 512)")
        p.add_argument("--max-cells", type=_positive(int), default=MAX_CELLS, help="raster cell budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=out_required, help="output path (default: stdout)")
    p.add_argument("--config", help="JSON file of option defaults; command-line flags take precedence")


def _endpoints(p: argparse.ArgumentParser) -> None:
    p.add_argument("--from", dest="source", type=_point, required=True, metavar="X,Y")
    p.add_argument("--to", dest="target", type=_point, required=True, metavar="X,Y")


def _chain_opts(p: argparse.ArgumentParser) -> None:
    _endpoints(p)
    p.add_argument("--max-k", type=_positive(int), default=10_000, help="chain length limit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subhyp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen", help="generate a test domain")
    p.add_argument("--kind", required=True, choices=sorted(GENERATORS))
    p.add_argument("--params", type=_params, default={}, help='JSON object or "k=v,k=v"')
    _common(p, domain=False)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("separate", help="separating square for a host square and a target point")
    _common(p)
    p.add_argument("--host", type=_square, required=True, metavar="CX,CY,R")
    p.add_argument("--b", type=_point, required=True, metavar="X,Y")
    p.set_defaults(func=cmd_separate)

    for name, func, what in (("wide-path", cmd_wide_path, "wide"), ("narrow-path", cmd_narrow_path, "narrow")):
        p = sub.add_parser(name, help=f"{what} square chain between two points")
        _common(p)
        _chain_opts(p)
        p.add_argument("--svg", help="also draw the chain to this SVG file")
        p.set_defaults(func=func)

    p = sub.add_parser("dalpha", help="grid geodesic estimate of the alpha-metric")
    _common(p)
    _endpoints(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--refine", action="store_true", help="also report the value at h/2")
    p.set_defaults(func=cmd_dalpha)

    p = sub.add_parser("salpha", help="sampled lower estimate of the subhyperbolicity constant")
    _common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--budget", type=_positive(int), default=240, help="number of sampled pairs")
    p.add_argument("--probe", type=_point, action="append", metavar="X,Y", help="extra point; all probe pairs are used")
    p.add_argument("--arc-diameter", action="store_true", help="also estimate the arc-diameter constant")
    p.set_defaults(func=cmd_salpha)

    p = sub.add_parser("classify", help="extension-domain verdict from s_alpha growth")
    _common(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--m", type=_positive(int), required=True)
    p.add_argument("--budget", type=_positive(int), default=240)
    p.add_argument("--probe", type=_point, action="append", metavar="X,Y")
    p.add_argument("--trace-csv", help="write the growth trace as CSV")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("growing-fn", help="evaluate the growing function on the narrow path")
    _common(p)
    _chain_opts(p)
    p.add_argument("--m", type=_positive(int), required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--at", type=_point, metavar="X,Y", help="evaluation point (default: the --to point)")
    p.add_argument("--narrow-h", type=_positive(float), default=None, help="narrow-path grid step")
    p.set_defaults(func=cmd_growing_fn)

    p = sub.add_parser("render", help="draw a domain with chains and geodesics as SVG")
    _common(p, out_required=True)
    p.add_argument("--chain", action="append", help="wide-path / narrow-path output JSON")
    p.add_argument("--geodesic", action="append", help="dalpha output JSON")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("verify", help="full invariant audit for a point pair")
    _common(p)
    _chain_opts(p)
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--m", type=_positive(int), default=2)
    p.add_argument("--narrow-h", type=_positive(float), default=None)
    p.set_defaults(func=cmd_verify)
    parser.subcommands = sub.choices
    return parser


def _config_value(action: argparse.Action, value: Any) -> Any:
    """Run a config-file value through the option's own type parser."""
    if action.type is None or value is None:
        return value

    def conv(v):
        if isinstance(v, dict):
            v = json.dumps(v)
        elif isinstance(v, list):
            v = ",".join(map(str, v))
        return action.type(str(v))

    if isinstance(action, argparse._AppendAction):
        return [conv(v) for v in value]
    return conv(value)


def _parse(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Apply ``--config`` values as subcommand defaults, then parse the command line."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    command = argv[0] if argv else None
    if not known.config or command not in parser.subcommands:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {known.config}: {exc}")
    if not isinstance(cfg, dict):
        parser.error("config file must hold a JSON object")
    sub = parser.subcommands[command]
    actions = {}
    for a in sub._actions:
        if a.dest not in ("config", "help"):
            actions[a.dest] = a
            actions.update((o.lstrip("-").replace("-", "_"), a) for o in a.option_strings)
    defaults = {}
    for key, value in cfg.items():
        action = actions.get(key.replace("-", "_"))
        if action is None:
            parser.error(f"unknown config key {key!r} for {command}")
        try:
            defaults[action.dest] = _config_value(action, value)
        except argparse.ArgumentTypeError as exc:
            parser.error(f"config key {key!r}: {exc}")
        action.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _check(args) -> None:
    if getattr(args, "p", None) is not None and not args.p > 2:
        raise UsageError("--p must exceed 2")
    if getattr(args, "alpha", None) is not None and not 0 <= args.alpha <= 1:
        raise UsageError("--alpha must lie in [0, 1]")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _check(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"subhyp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        doc, code = args.func(args)
    except GeometryError as exc:
        err = {"schema_version": SCHEMA_VERSION, "command": args.command, **exc.to_dict()}
        _emit(err, getattr(args, "out", None) if args.command != "render" else None)
        return EXIT_GEOMETRY
    except OSError as exc:
        err = {"schema_version": SCHEMA_VERSION, "command": args.command, "error": "IoError",
               "message": str(exc), "details": {"path": exc.filename}}
        sys.stdout.write(dumps(err))
        return EXIT_GEOMETRY
    if doc is not None:
        _emit(doc, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
