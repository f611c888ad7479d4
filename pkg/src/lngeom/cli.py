"""lngeom command line: apply LayerNorm to CSV files, report the geometry of
its image, sample point clouds, verify invariants and emit figure data.

Exit status: 0 success, 1 verification failure, 2 usage or configuration
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .cloud import GAUSSIAN, SAMPLERS, sample
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    LayerNormGeometryError,
    NonFiniteError,
    ShapeError,
)
from .fileio import (
    params_to_dict,
    read_params,
    read_points,
    sidecar_path,
    write_json,
    write_rows,
)
from .geometry import orthogonal_subspace, principal_axes, semi_axis_lengths_alt
from .layernorm import LayerNormParams, trace_stages
from .verification import rel_diff, verify

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

GEOMETRY_AGREEMENT_RTOL = 1e-8
FIGURE_GAIN = (1.0, 2.0, 2.0)
FIGURE_BIAS = (1.0, 1.0, 1.0)
FIGURE_EPSILON = 0.1


def _header(n: int, trace: bool) -> list[str]:
    cols = [f"x{i}" for i in range(n)]
    if trace:
        cols += ["mu", "sigma2"]
        for group in ("centered", "normalized", "scaled"):
            cols += [f"{group}{i}" for i in range(n)]
    return cols


def cmd_apply(args) -> int:
    p = read_params(args.params)
    points = read_points(args.input, p.n)
    rows = []
    for a in points:
        tr = trace_stages(a, p)
        row = list(tr.output)
        if args.trace:
            row += [tr.mu, tr.sigma2, *tr.centered, *tr.normalized, *tr.scaled]
        rows.append(row)
    header = _header(p.n, args.trace) if args.header else None
    write_rows(args.output, rows, header=header, exact=args.exact)
    write_json(
        sidecar_path(args.output),
        {
            "command": "apply",
            "version": __version__,
            "params": params_to_dict(p),
            "input": str(args.input),
            "rows": len(rows),
            "trace": bool(args.trace),
            "format": "17g" if args.exact else "6f",
        },
    )
    return EXIT_OK


def geometry_report(p: LayerNormParams) -> dict:
    sub = orthogonal_subspace(p)
    model = principal_axes(p)
    alt = semi_axis_lengths_alt(p)
    if alt.shape == model.semi_axis_lengths.shape:
        disagreement = rel_diff(model.semi_axis_lengths, alt) if alt.size else 0.0
    else:
        disagreement = float("inf")
    return {
        "schema": 1,
        "version": __version__,
        "params": params_to_dict(p),
        "orthogonal_subspace": {"kind": sub.kind, "basis": sub.basis.tolist()},
        "principal_axes": {
            "center": model.center.tolist(),
            "directions": model.axis_directions.tolist(),
            "lengths": model.semi_axis_lengths.tolist(),
            "lambda_spectrum": model.lambda_spectrum.tolist(),
            "orthogonal_direction": model.orthogonal_direction.tolist(),
            "collapsed_directions": list(model.collapsed_directions),
            "degenerate_groups": [list(g) for g in model.degenerate_groups],
            "zero_mode_residual": model.zero_mode_residual,
        },
        "alternate_lengths": alt.tolist(),
        "agreement": {
            "max_relative_discrepancy": disagreement,
            "tolerance": GEOMETRY_AGREEMENT_RTOL,
            "passed": disagreement <= GEOMETRY_AGREEMENT_RTOL,
        },
    }


def cmd_geometry(args) -> int:
    p = read_params(args.params)
    report = geometry_report(p)
    write_json(args.output, report)
    if not report["agreement"]["passed"]:
        print(
            f"semi-axis routes disagree: {report['agreement']['max_relative_discrepancy']:.3e}",
            file=sys.stderr,
        )
        return EXIT_FAILED
    return EXIT_OK


def cmd_sample(args) -> int:
    cloud = sample(args.sampler, args.n, args.count, args.seed, radius=args.radius)
    header = [f"x{i}" for i in range(cloud.n)] if args.header else None
    write_rows(args.output, cloud.points, header=header, exact=True)
    meta = {"command": "sample", "version": __version__, **cloud.metadata(), "radius": args.radius}
    write_json(sidecar_path(args.output), meta)
    return EXIT_OK


def cmd_verify(args) -> int:
    p = read_params(args.params)
    inputs = read_points(args.input, p.n)
    applied = None
    if args.applied:
        applied = read_points(args.applied, p.n)
        if applied.shape[0] != inputs.shape[0]:
            raise ConfigurationError(
                f"{args.applied} has {applied.shape[0]} rows but {args.input} has {inputs.shape[0]}"
            )
    report = verify(p, inputs, applied)
    report["input"] = str(args.input)
    if args.applied:
        report["applied"] = str(args.applied)
    write_json(args.report, report)
    if not report["passed"]:
        print(f"invariant failure: {', '.join(report['failed'])}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_figure(args) -> int:
    from .figures import epsilon_figure, steps_figure

    if args.params:
        p = read_params(args.params)
    else:
        p = LayerNormParams(FIGURE_GAIN, FIGURE_BIAS, FIGURE_EPSILON)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    cloud = sample(args.sampler, 3, args.count, args.seed, radius=args.radius)
    if args.which == "steps":
        steps_figure(cloud, p, outdir)
    else:
        epsilon_figure(cloud, p, outdir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lngeom", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ap = sub.add_parser("apply", help="apply LayerNorm to every row of a CSV file")
    ap.add_argument("--params", required=True, help="params JSON file")
    ap.add_argument("--input", required=True, help="input CSV, one vector per row")
    ap.add_argument("--output", required=True, help="output CSV")
    ap.add_argument("--trace", action="store_true", help="append mu, sigma2, centered, normalized, scaled columns")
    ap.add_argument("--header", action="store_true", help="write a header row")
    ap.add_argument("--exact", action="store_true", help="17 significant digits instead of 6 decimals")
    ap.set_defaults(func=cmd_apply)

    gp = sub.add_parser("geometry", help="orthogonal subspace and principal axes as JSON")
    gp.add_argument("--params", required=True)
    gp.add_argument("--output", required=True)
    gp.set_defaults(func=cmd_geometry)

    sp = sub.add_parser("sample", help="write a deterministic point cloud as CSV")
    sp.add_argument("--sampler", choices=SAMPLERS, default=GAUSSIAN)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--radius", type=float, default=1.0, help="sphere-uniform radius")
    sp.add_argument("--header", action="store_true")
    sp.add_argument("--output", required=True)
    sp.set_defaults(func=cmd_sample)

    vp = sub.add_parser("verify", help="check LayerNorm and geometry invariants")
    vp.add_argument("--params", required=True)
    vp.add_argument("--input", required=True, help="input CSV")
    vp.add_argument("--applied", help="output CSV from `apply --exact` to check as well")
    vp.add_argument("--report", "--output", dest="report", required=True, help="report JSON path")
    vp.set_defaults(func=cmd_verify)

    fp = sub.add_parser("figure", help="CSV and SVG panels for N = 3")
    fp.add_argument("which", choices=("steps", "epsilon"))
    fp.add_argument("--output", required=True, help="output directory")
    fp.add_argument("--params", help="params JSON (n = 3); default g=(1,2,2), b=(1,1,1), eps=0.1")
    fp.add_argument("--sampler", choices=SAMPLERS, default=GAUSSIAN)
    fp.add_argument("--count", type=int, default=1000)
    fp.add_argument("--seed", type=int, default=0)
    fp.add_argument("--radius", type=float, default=1.0)
    fp.set_defaults(func=cmd_figure)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ShapeError, NonFiniteError, DegenerateInputError) as exc:
        print(f"lngeom: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"lngeom: {exc}", file=sys.stderr)
        return EXIT_IO
    except LayerNormGeometryError as exc:
        print(f"lngeom: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
