"""Command-line front end.

Subcommands: ``run``, ``fig1``, ``check``, ``converge``.  Exit codes: 0 ok,
1 check failure, 2 config error, 3 numerical-consistency error,
4 quadrature non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .approx import SeparatedPacketSummary, separated_expectation, two_packet_velocities
from .checks import format_table, run_checks
from .config import RunConfig, load_config
from .dispersion import Massless
from .errors import ConfigError, DegenerateFieldError, DomainError, NumericalConsistencyError, UsageError
from .field import GaussianComponent, GaussianSuperposition, GridField
from .observables import angle_between, moments, trajectory
from .quadrature import DEFAULT_MARGIN, DEFAULT_MAX_N, DEFAULT_POINTS, auto_grid, converge

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NOCONV = 0, 1, 2, 3, 4

CSV_TAG = "# wavekin-trajectory v1"
COLUMNS = (
    "t", "norm", "px", "py", "pz", "E", "rx", "ry", "rz", "rEx", "rEy", "rEz",
    "vgx", "vgy", "vgz", "vEx", "vEy", "vEz", "Lx", "Ly", "Lz", "Nx", "Ny", "Nz",
    "Lext_px", "Lext_py", "Lext_pz", "Lint_px", "Lint_py", "Lint_pz",
    "Lext_ex", "Lext_ey", "Lext_ez", "Lint_ex", "Lint_ey", "Lint_ez",
)

# model example: two Gaussian packets, massless dispersion, c = 1
FIG1_AMPLITUDES = (0.5, 0.87)
FIG1_CENTERS = ((0.3, 0.5, 0.0), (1.2, 0.7, 0.0))
FIG1_WIDTHS = (0.1, 0.15)
FIG1_AGREEMENT = 0.02

log = logging.getLogger("wavekin")


def fig1_field(renormalize: bool = False) -> GaussianSuperposition:
    """The two-packet example; ``renormalize`` replaces A2 = 0.87 by sqrt(3)/2."""
    a1, a2 = FIG1_AMPLITUDES
    if renormalize:
        a2 = math.sqrt(1.0 - a1 * a1)
    return GaussianSuperposition(
        tuple(GaussianComponent(a, k, d) for a, k, d in zip((a1, a2), FIG1_CENTERS, FIG1_WIDTHS))
    )


def state_row(s) -> list[float]:
    vals = [s.t, s.norm, *s.p_mean, s.E_mean, *s.r_prob, *s.r_energy, *s.v_group, *s.v_energy,
            *s.L_total, *s.N_boost, *s.L_ext_prob, *s.L_int_prob, *s.L_ext_energy, *s.L_int_energy]
    return [float(v) for v in vals]


def format_trajectory(states, fmt: str) -> str:
    rows = [state_row(s) for s in states]
    if fmt == "json":
        doc = {"format": "wavekin-trajectory", "version": 1, "columns": list(COLUMNS), "rows": rows}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(CSV_TAG + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([repr(v) for v in row])
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    return cfg.override(
        points_per_axis=args.grid_n, margin=args.grid_margin, tol=args.tol, max_n=args.max_n,
        format=args.format, path=args.output,
    )


def _grid(cfg: RunConfig):
    if isinstance(cfg.field, GridField):
        return cfg.field.spec
    return auto_grid(cfg.field, cfg.margin, cfg.points_per_axis)


def cmd_run(args) -> int:
    cfg = _config(args)
    states = trajectory(cfg.field, cfg.dispersion, _grid(cfg), cfg.t0, cfg.t1, cfg.steps, threads=args.threads)
    _emit(format_trajectory(states, cfg.format), cfg.path)
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _config(args)
    states = trajectory(cfg.field, cfg.dispersion, _grid(cfg), cfg.t0, cfg.t1, cfg.steps, threads=args.threads)
    results = run_checks(states, cfg.dispersion, tol=args.tol)
    table = format_table(results)
    _emit(table + "\n", args.output)
    return EXIT_OK if all(r.ok for r in results) else EXIT_CHECK


def _velocities(field, disp, spec, t):
    m = moments(field, disp, spec, t)
    return np.concatenate([m.vg / m.norm, m.omega_vg / m.energy])


def _speeds(v_prob, v_energy) -> dict:
    return {
        "v_prob": v_prob.tolist(),
        "v_energy": v_energy.tolist(),
        "speed_prob": float(np.linalg.norm(v_prob)),
        "speed_energy": float(np.linalg.norm(v_energy)),
        "angle_deg": math.degrees(angle_between(v_prob, v_energy)),
    }


def fig1_report(points: int = DEFAULT_POINTS, margin: float = DEFAULT_MARGIN, tol: float = 1e-8,
                max_n: int = DEFAULT_MAX_N, renormalize: bool = False, threads: int = 1):
    """Oracle and quadrature velocities for the two-packet example; returns ``(report, convergence)``."""
    field = fig1_field(renormalize)
    disp = Massless(1.0)
    summary = SeparatedPacketSummary.from_field(field)
    vp_o, ve_o = two_packet_velocities(summary, disp)
    oracle = _speeds(vp_o, ve_o)
    oracle["p_mean"] = separated_expectation(summary, lambda k: k).tolist()
    oracle["E_mean"] = separated_expectation(summary, lambda k: disp.omega(k))

    conv = converge(field, disp, _velocities, 0.0, tol, points_per_axis=points, margin=margin,
                    max_n=max_n, threads=threads)
    spec, _ = conv.levels[0]
    m = moments(field, disp, spec, 0.0, threads=threads)
    v = np.asarray(conv.levels[0][1])
    quad = _speeds(v[:3], v[3:])
    quad["p_mean"] = (m.p / m.norm).tolist()
    quad["E_mean"] = m.energy / m.norm
    quad["grid_n"] = list(spec.n)
    quad["error_estimate"] = conv.error_estimate
    rel = {
        "v_prob": float(np.linalg.norm(v[:3] - vp_o) / np.linalg.norm(vp_o)),
        "v_energy": float(np.linalg.norm(v[3:] - ve_o) / np.linalg.norm(ve_o)),
    }
    theta = np.linspace(0.0, 2 * math.pi, 73)
    report = {
        "parameters": {
            "A": [c.amplitude.real for c in field.components],
            "k": [list(c.k0) for c in field.components],
            "delta": [c.delta for c in field.components],
            "dispersion": disp.to_dict(),
            "renormalize": renormalize,
        },
        "oracle": oracle,
        "quadrature": quad,
        "relative_difference": rel,
        "agreement": all(r <= FIG1_AGREEMENT for r in rel.values()),
        "noncollinear": quad["angle_deg"] > 0,
        "reference_circle": {"radius": disp.c, "xy": np.round(np.stack([np.cos(theta), np.sin(theta)], 1), 12).tolist()},
        "convergence": {"converged": conv.converged, "error_estimate": conv.error_estimate},
    }
    return report, conv


def cmd_fig1(args) -> int:
    points = args.points or args.grid_n or DEFAULT_POINTS
    report, conv = fig1_report(
        points=points, margin=args.grid_margin or DEFAULT_MARGIN, tol=args.tol or 1e-8,
        max_n=args.max_n or DEFAULT_MAX_N, renormalize=args.renormalize, threads=args.threads,
    )
    if not conv.converged:
        sys.stderr.write("quadrature did not converge:\n" + json.dumps(conv.to_dict(), indent=1) + "\n")
        return EXIT_NOCONV
    if not report["agreement"]:
        sys.stderr.write(
            f"warning: quadrature and separated-packet velocities differ by more than "
            f"{FIG1_AGREEMENT:.0%}: {report['relative_difference']}\n"
        )
    _emit(json.dumps(report, indent=1) + "\n", args.output)
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = _config(args)
    spec = cfg.field.spec if isinstance(cfg.field, GridField) else None
    if spec is not None:
        raise UsageError("converge refines auto-sized grids; grid-file fields have a fixed resolution")
    report = converge(cfg.field, cfg.dispersion, args.observable, args.t, cfg.tol,
                      points_per_axis=cfg.points_per_axis, margin=cfg.margin, max_n=cfg.max_n,
                      threads=args.threads)
    text = json.dumps(report.to_dict(), indent=1) + "\n"
    if not report.converged:
        sys.stderr.write(text)
        return EXIT_NOCONV
    _emit(text, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid-n", type=int, help=f"points per axis (default {DEFAULT_POINTS})")
    common.add_argument("--grid-margin", type=float, help=f"box margin in packet widths (default {DEFAULT_MARGIN:g})")
    common.add_argument("--tol", type=float, help="convergence tolerance; for 'check', overrides every invariant tolerance")
    common.add_argument("--max-n", type=int, help=f"refinement cap per axis (default {DEFAULT_MAX_N})")
    common.add_argument("--threads", type=int, default=1, help="worker threads for integrand evaluation")
    common.add_argument("--output", "-o", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="trajectory format for 'run'")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="wavekin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="write the kinematic trajectory of a configured field")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fig1", parents=[common], help="two-packet example: oracle vs quadrature velocities")
    p.add_argument("--points", type=int, help="alias of --grid-n")
    p.add_argument("--renormalize", action="store_true", help="use |A2|^2 = 0.75 so the weights sum to 1")
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("check", parents=[common], help="run the invariant suite on a configured field")
    p.add_argument("config")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("converge", parents=[common], help="grid-refinement study of one observable")
    p.add_argument("config")
    p.add_argument("--observable", required=True, help="KinematicState field, e.g. E_mean or v_group")
    p.add_argument("--t", type=float, default=0.0, help="evaluation time")
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except NumericalConsistencyError as exc:
        sys.stderr.write(f"numerical consistency failure [{exc.check}]: {exc}\n")
        return EXIT_NUMERIC
    except (DegenerateFieldError, DomainError, UsageError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
