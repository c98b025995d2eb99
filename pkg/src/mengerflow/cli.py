"""Command-line front end for energies, flows and knot file handling.

Exit codes: 0 ok, 2 usage or parse failure, 3 degenerate input,
4 flow abort (partial outputs are kept).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import energy as energy_mod
from .flow import FlowAbortError, FlowConfig, redistribute, run_flow
from .knot import (
    DegenerateKnotError,
    build_grid,
    default_samples,
    fourier_from_polygon,
    load_coefficients,
    load_polygon,
    save_coefficients,
)

EXIT_USAGE = 2
EXIT_DEGENERATE = 3
EXIT_ABORT = 4


def _fmt(value: float) -> str:
    # 12 significant digits reproduce the reference circle value verbatim
    return f"{value:.12g}"


def _load_knot(path):
    try:
        return load_coefficients(path)
    except OSError as exc:
        raise SystemExit(_fail(f"cannot read knot file: {exc}", EXIT_USAGE))
    except ValueError as exc:
        raise SystemExit(_fail(str(exc), EXIT_USAGE))


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_energy(args) -> int:
    knot = _load_knot(args.knot_file)
    m = args.samples or default_samples(knot.n_modes)
    try:
        grid = build_grid(knot, m)
        rep = energy_mod.report(grid, args.p, args.lam)
    except DegenerateKnotError as exc:
        return _fail(str(exc), EXIT_DEGENERATE)
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)
    print(f"length    = {_fmt(rep.length)}")
    print(f"mp        = {_fmt(rep.mp)}")
    print(f"ep        = {_fmt(rep.ep)}")
    if rep.ep_lambda is not None:
        print(f"ep_lambda = {_fmt(rep.ep_lambda)}")
    print(f"thickness = {_fmt(rep.thickness)}")
    return 0


def cmd_flow(args) -> int:
    knot = _load_knot(args.knot_file)
    kind = args.energy.replace("-", "_")
    if kind == "ep_lambda" and args.lam is None:
        return _fail("--energy ep-lambda requires --lambda", EXIT_USAGE)
    try:
        config = FlowConfig(
            p=args.p,
            energy_kind=kind,
            lam=args.lam,
            m_samples=args.samples,
            steps=args.steps,
            tau_max=args.tau_max,
            epsilon=args.epsilon,
            redistribute_every=args.redistribute_every,
            initial_redistribution=not args.no_initial_redistribution,
            log_every=args.log_every,
            frame_every=args.frame_every,
        )
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)
    try:
        state, _ = run_flow(knot, config, out_dir=args.out_dir)
    except DegenerateKnotError as exc:
        return _fail(str(exc), EXIT_DEGENERATE)
    except FlowAbortError as exc:
        return _fail(str(exc), EXIT_ABORT)
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)
    rep = state.report
    print(
        f"steps={state.step} time={_fmt(state.time)} length={_fmt(rep.length)} "
        f"ep={_fmt(rep.ep)}"
    )
    return 0


def cmd_redistribute(args) -> int:
    knot = _load_knot(args.knot_file)
    try:
        new = redistribute(knot, args.samples, args.modes)
    except DegenerateKnotError as exc:
        return _fail(str(exc), EXIT_DEGENERATE)
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)
    save_coefficients(new, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_import(args) -> int:
    try:
        vertices = load_polygon(args.xyz_file)
    except OSError as exc:
        return _fail(f"cannot read polygon: {exc}", EXIT_USAGE)
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)
    if vertices.shape[0] < 2 * args.modes + 2:
        return _fail(
            f"need at least 2N+2 = {2 * args.modes + 2} vertices, got {vertices.shape[0]}",
            EXIT_USAGE,
        )
    try:
        knot = fourier_from_polygon(vertices, args.modes)
    except ValueError as exc:
        return _fail(str(exc), EXIT_DEGENERATE)
    save_coefficients(knot, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_info(args) -> int:
    knot = _load_knot(args.knot_file)
    m = default_samples(knot.n_modes)
    try:
        grid = build_grid(knot, m)
    except DegenerateKnotError as exc:
        return _fail(str(exc), EXIT_DEGENERATE)
    print(f"modes     = {knot.n_modes}")
    print(f"samples   = {m} (default)")
    print(f"length    = {_fmt(grid.h * float(np.sum(grid.speed)))}")
    print(f"min|g'|   = {_fmt(grid.min_speed)}")
    max_k = int(np.argmax(
        np.max(np.abs(knot.cos_coeffs), axis=1) + np.max(np.abs(knot.sin_coeffs), axis=1)
    )) + 1
    print(f"dominant  = mode {max_k}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mengerflow",
        description="Gradient flow for the integral Menger curvature of Fourier knots.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("energy", help="evaluate energies of a knot file")
    pe.add_argument("knot_file")
    pe.add_argument("--p", type=float, default=3.0)
    pe.add_argument("--samples", type=int, default=None)
    pe.add_argument("--lambda", dest="lam", type=float, default=None)
    pe.set_defaults(func=cmd_energy)

    pf = sub.add_parser("flow", help="run a gradient flow")
    pf.add_argument("knot_file")
    pf.add_argument("--p", type=float, default=3.0)
    pf.add_argument("--energy", choices=["mp", "ep", "ep-lambda"], default="ep")
    pf.add_argument("--lambda", dest="lam", type=float, default=None)
    pf.add_argument("--steps", type=int, default=1000)
    pf.add_argument("--samples", type=int, default=None)
    pf.add_argument("--tau-max", type=float, default=0.01)
    pf.add_argument("--epsilon", type=float, default=0.05)
    pf.add_argument("--redistribute-every", type=int, default=1)
    pf.add_argument("--no-initial-redistribution", action="store_true")
    pf.add_argument("--out-dir", default="flow_out")
    pf.add_argument("--log-every", type=int, default=10)
    pf.add_argument("--frame-every", type=int, default=500)
    pf.set_defaults(func=cmd_flow)

    pr = sub.add_parser("redistribute", help="redistribute coefficients by arclength")
    pr.add_argument("knot_file")
    pr.add_argument("--samples", type=int, default=None)
    pr.add_argument("--modes", type=int, default=None)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_redistribute)

    pi = sub.add_parser("import", help="fit Fourier coefficients to a polygon")
    pi.add_argument("xyz_file")
    pi.add_argument("--modes", type=int, default=20)
    pi.add_argument("--out", required=True)
    pi.set_defaults(func=cmd_import)

    pn = sub.add_parser("info", help="summarize a knot file")
    pn.add_argument("knot_file")
    pn.set_defaults(func=cmd_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
