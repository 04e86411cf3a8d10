"""Command-line front end.

Exit status is 0 on success, 1 when the input describes a degenerate patch
(identically vanishing implicit equation, collinear anchors, undefined scan
direction) and 2 when the input is malformed.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .apps import DEFAULT_OFFSETS, ImplicitPatch, Ray, precision_study, raycast, scan_csv, scan_line
from .errors import (ConsistencyError, DegenerateAnchorError, DegenerateDirectionError,
                     DegenerateSurfaceError)
from .expand import TrivariatePoly, emit_slp, evaluate_poly
from .geometry import evaluate
from .numeric import DEFAULT_REL_TOL, classify, verdict_for

EXIT_OK, EXIT_DEGENERATE, EXIT_MALFORMED = 0, 1, 2
DEGENERATE_ERRORS = (DegenerateSurfaceError, DegenerateAnchorError, DegenerateDirectionError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _write(path, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _floats(values) -> list:
    return [float(v) for v in values]


def cmd_implicitize(args) -> None:
    patch = ImplicitPatch(io.read_net(args.net), args.normalize)
    poly = patch.poly
    slp = emit_slp(poly)
    _write(args.output, poly.to_json())
    slp_path = args.slp or str(Path(args.output).with_suffix(".slp"))
    _write(slp_path, slp.to_text())
    if args.cayley:
        _write(args.cayley, io.dumps(io.cayley_to_json_dict(patch.cayley)))
    if args.transform and patch.transform is not None:
        _write(args.transform, io.dumps(patch.transform.to_json_dict()))
    summary = {"kind": patch.net.kind, "normalized": args.normalize, "degree": poly.degree,
               "max_degree": poly.max_degree, "terms": len(poly), "n_mul": slp.n_mul,
               "n_add": slp.n_add}
    sys.stdout.write(io.dumps(summary))


def _polynomial_classification(poly: TrivariatePoly, q, rel_tol: float) -> dict:
    value = float(evaluate_poly(poly, q))
    magnitude = TrivariatePoly({e: abs(c) for e, c in poly.terms.items()}, poly.max_degree)
    scale = rel_tol * float(evaluate_poly(magnitude, np.abs(q)))
    return {"value": value, "verdict": verdict_for(value, scale), "tolerance_scale": scale}


def cmd_classify(args) -> None:
    patch = ImplicitPatch(io.read_net(args.net), args.normalize)
    q = patch.to_frame(np.array(_floats(args.point)))
    if args.evaluator == "determinant":
        doc = classify(patch.cayley, q, args.rel_tol).to_dict()
    else:
        doc = _polynomial_classification(patch.poly, q, args.rel_tol)
    _write(args.output, io.dumps({"evaluator": args.evaluator, **doc}))


def cmd_raycast(args) -> None:
    net = io.read_net(args.net)
    ray = Ray(_floats(args.origin), _floats(args.direction))
    hits = raycast(net, ray, tuple(args.t_range), normalize=args.normalize)
    doc = [{"t": h.t, "point": _floats(h.point), "uv": [float(h.domain_point.u), float(h.domain_point.v)],
            "residual": h.residual} for h in hits]
    _write(args.output, io.dumps(doc))


def cmd_scan(args) -> None:
    records = scan_line(io.read_net(args.net), tuple(args.uv), tuple(args.t_range),
                        args.n_samples, args.normalize)
    _write(args.output, scan_csv(records))


def cmd_study(args) -> None:
    offsets = args.offsets if args.offsets else list(DEFAULT_OFFSETS)
    report = precision_study(io.read_net(args.net), offsets, tuple(args.uv), tuple(args.t_range),
                             args.n_samples, args.t_tol)
    _write(args.output, report.to_csv())


def cmd_eval(args) -> None:
    p = evaluate(io.read_net(args.net), tuple(args.uv))
    _write(args.output, io.dumps({"uv": _floats(args.uv), "point": _floats(p)}))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="biquad-implicit",
                     description="Implicit forms of biquadratic Bezier triangles and quads.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("net", help="control net JSON file")
        p.set_defaults(func=fn)
        return p

    def output(p, required=False):
        p.add_argument("-o", "--output", required=required,
                       help="output file" + ("" if required else " (default: stdout)"))

    def normalize(p):
        p.add_argument("--normalize", action="store_true",
                       help="work in the normalized frame of the net")

    p = command("implicitize", cmd_implicitize, "expand the implicit polynomial")
    output(p, required=True)
    p.add_argument("--slp", help="straight-line program path (default: output with .slp suffix)")
    p.add_argument("--cayley", help="also write the Cayley matrix JSON here")
    p.add_argument("--transform", help="also write the normalization transform JSON here")
    normalize(p)

    p = command("classify", cmd_classify, "on-surface / side test for a point")
    p.add_argument("--point", nargs=3, type=float, required=True, metavar=("X", "Y", "Z"))
    p.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL)
    p.add_argument("--evaluator", choices=("determinant", "polynomial"), default="determinant")
    normalize(p)
    output(p)

    p = command("raycast", cmd_raycast, "ray / patch intersections")
    p.add_argument("--origin", nargs=3, type=float, required=True, metavar=("X", "Y", "Z"))
    p.add_argument("--direction", nargs=3, type=float, required=True, metavar=("X", "Y", "Z"))
    p.add_argument("--t-range", nargs=2, type=float, required=True, metavar=("T0", "T1"))
    normalize(p)
    output(p)

    for name, fn, help_text in (("scan", cmd_scan, "sample both evaluators along p + t p/|p|"),
                                ("study", cmd_study, "zero-crossing detection under offsets")):
        p = command(name, fn, help_text)
        p.add_argument("--uv", nargs=2, type=float, default=(0.33, 0.33), metavar=("U", "V"))
        p.add_argument("--t-range", nargs=2, type=float, default=(-1.0, 1.0), metavar=("T0", "T1"))
        p.add_argument("--n-samples", type=int, default=201)
        if name == "scan":
            normalize(p)
        else:
            p.add_argument("--offsets", nargs="+", type=float,
                           help="offsets added to every coordinate (default: 0 1e4 6.5e4 1e6 1e13)")
            p.add_argument("--t-tol", type=float, default=1e-6)
        output(p)

    p = command("eval", cmd_eval, "surface point at a domain point")
    p.add_argument("--uv", nargs=2, type=float, required=True, metavar=("U", "V"))
    output(p)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except DEGENERATE_ERRORS as exc:
        print(f"degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConsistencyError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
