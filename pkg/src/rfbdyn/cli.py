"""Command-line surface.

Subcommands: simulate, sweep, eigen, bifurcate, field, calibrate.  Every
command accepts --config <path>, --out <dir> and repeatable --set
section.key=value overrides mirroring the config keys.  Failures exit
nonzero after printing a machine-readable error JSON to stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import io
from .analysis import (CalibrationTargets, bifurcation_scan, calibrate,
                       fixed_point, phase_lags, spectrum_at,
                       vector_field_slice)
from .config import RunConfig, config_keys, load_config
from .errors import EmptyBoundaryError, UnclassifiableError
from .integrator import integrate
from .model import nondimensionalize
from .sweep import classify_cell, extract_boundary, run_sweep

# Plane levels of the standard vector-field figure set: three slices
# through each axis around the small-concentration oscillation region.
DEFAULT_FIELD_PLANES = (
    ("x2", -2.0e-3), ("x2", 0.0), ("x2", 2.0e-3),
    ("x3", 0.60), ("x3", 0.66), ("x3", 0.70),
    ("x1", 0.50e-4), ("x1", 1.0e-4), ("x1", 2.0e-4),
)
FIELD_RANGES = {
    # plane axis -> (u_range, v_range) for the in-plane axes
    "x2": ((1e-6, 5e-4), (0.50, 0.80)),
    "x3": ((1e-6, 5e-4), (-2.5e-3, 2.5e-3)),
    "x1": ((-2.5e-3, 2.5e-3), (0.50, 0.80)),
}


def _parse_set(pairs: list[str]) -> dict[str, str]:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        out[key.strip()] = value.strip()
    return out


def _load(args) -> tuple[RunConfig, str]:
    cfg = load_config(args.config, _parse_set(args.set))
    out_dir = args.out if args.out is not None else cfg.output_dir
    io.ensure_dir(out_dir)
    return cfg, out_dir


def _provenance_doc(cfg: RunConfig) -> dict:
    return dict(cfg.provenance)


def cmd_simulate(args) -> int:
    cfg, out_dir = _load(args)
    traj = integrate(cfg.battery, cfg.circuit, cfg.operating, cfg.integrator)
    io.trajectory_csv(traj, os.path.join(out_dir, "trajectory.csv"))
    label, eps_t, n_osc, t_f, limited = None, None, None, None, False
    try:
        label, eps_t, n_osc, t_f, limited = classify_cell(traj, cfg.thresholds)
    except UnclassifiableError:
        pass
    summary = {
        "end_event": traj.end_event.kind.value,
        "t_event_s": traj.end_event.t,
        "case_label": label,
        "epsilon_t": eps_t,
        "oscillation_count": n_osc,
        "t_f_s": t_f,
        "time_limited": limited,
        "conservation_residual": traj.conservation_residual(),
        "samples": int(traj.t.size),
        "provenance": _provenance_doc(cfg),
    }
    io.write_json(os.path.join(out_dir, "summary.json"), summary)
    print(json.dumps({"written": ["trajectory.csv", "summary.json"],
                      "case_label": label}))
    return 0


def cmd_sweep(args) -> int:
    cfg, out_dir = _load(args)
    spec = cfg.sweep
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("RFB_DYN_WORKERS", spec.workers))
    if workers != spec.workers:
        spec = replace(spec, workers=workers)
    result = run_sweep(spec, cfg.battery, cfg.circuit)
    io.map_csv(result, os.path.join(out_dir, "map.csv"))
    written = ["map.csv"]
    try:
        boundary = extract_boundary(result, spec.thresholds.eta)
        io.boundary_csv(boundary, os.path.join(out_dir, "boundary.csv"))
        written.append("boundary.csv")
    except EmptyBoundaryError:
        boundary = None
    io.write_json(os.path.join(out_dir, "sweep_summary.json"), {
        "cells": int(result.epsilon_t.size),
        "failed_cells": int(np.count_nonzero(result.error != "")),
        "boundary_points": 0 if boundary is None else int(len(boundary)),
        "workers": workers,
        "provenance": _provenance_doc(cfg),
    })
    written.append("sweep_summary.json")
    print(json.dumps({"written": written}))
    return 0


def cmd_eigen(args) -> int:
    cfg, out_dir = _load(args)
    w_list = [float(w) for w in args.W.split(",")] if args.W else \
        [cfg.operating.W_L_per_min]
    specs, lags = [], []
    for w in w_list:
        d = nondimensionalize(cfg.battery, cfg.circuit, w / 60.0)
        spec = spectrum_at(fixed_point(d).x1, d)
        specs.append(spec)
        lags.append(phase_lags(spec))
    doc = io.spectrum_json(specs, lags, w_list,
                           extras={"provenance": _provenance_doc(cfg)})
    io.write_json(os.path.join(out_dir, "eigen.json"), doc)
    print(json.dumps({"written": ["eigen.json"], "W_L_per_min": w_list}))
    return 0


def cmd_bifurcate(args) -> int:
    cfg, out_dir = _load(args)
    d = nondimensionalize(cfg.battery, cfg.circuit, cfg.operating.W_L_per_s)
    res = bifurcation_scan(d, (args.x1_min, args.x1_max), args.samples)
    io.write_json(os.path.join(out_dir, "bifurcation.json"), {
        "x1_c": res.x1_c,
        "x1_range": [args.x1_min, args.x1_max],
        "W_L_per_min": cfg.operating.W_L_per_min,
        "provenance": _provenance_doc(cfg),
    })
    io.bifurcation_branch_csv(res, os.path.join(out_dir, "branches.csv"))
    print(json.dumps({"written": ["bifurcation.json", "branches.csv"],
                      "x1_c": res.x1_c}))
    return 0


def cmd_field(args) -> int:
    cfg, out_dir = _load(args)
    d = nondimensionalize(cfg.battery, cfg.circuit, cfg.operating.W_L_per_s)
    if args.plane:
        planes = []
        for item in args.plane:
            axis, _, level = item.partition("=")
            planes.append((axis.strip(), float(level)))
    else:
        planes = list(DEFAULT_FIELD_PLANES)
    written = []
    for axis, level in planes:
        u_range, v_range = FIELD_RANGES[axis]
        sl = vector_field_slice(d, axis, level, u_range, v_range,
                                n_u=args.n, n_v=args.n)
        tag = f"{axis}_{level:g}"
        f1 = f"field_{tag}.csv"
        f2 = f"nullclines_{tag}.csv"
        io.field_slice_csv(sl, os.path.join(out_dir, f1))
        io.nullcline_csv(sl, os.path.join(out_dir, f2))
        written += [f1, f2]
    print(json.dumps({"written": written}))
    return 0


def cmd_calibrate(args) -> int:
    cfg, out_dir = _load(args)
    res = calibrate(CalibrationTargets(), cfg.battery)
    doc = io.calibration_json(res)
    doc["provenance"] = _provenance_doc(cfg)
    io.write_json(os.path.join(out_dir, "calibration.json"), doc)
    print(json.dumps({"written": ["calibration.json"],
                      "E_e0_V": res.E_e0, "L_H": res.L_ind,
                      "r_total_ohm": res.r_total}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfbdyn",
        description="Flow-battery transient simulation and dynamical analysis",
        epilog="Config keys: " + ", ".join(config_keys()))
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="config file path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")

    p = sub.add_parser("simulate", help="run one trajectory")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run the (W, c_c0) grid sweep")
    common(p)
    p.add_argument("--workers", type=int, default=None,
                   help="process count (overrides config and RFB_DYN_WORKERS)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eigen", help="fixed-point eigen spectra for a W list")
    common(p)
    p.add_argument("--W", default=None,
                   help="comma-separated flow rates in L/min")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("bifurcate", help="scan for the eigenvalue conjoining point")
    common(p)
    p.add_argument("--x1-min", type=float, default=1e-6, dest="x1_min")
    p.add_argument("--x1-max", type=float, default=5e-3, dest="x1_max")
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(func=cmd_bifurcate)

    p = sub.add_parser("field", help="export vector-field slices")
    common(p)
    p.add_argument("--plane", action="append", default=None, metavar="AXIS=LEVEL",
                   help="e.g. x2=0.0 (repeatable; default: the standard nine)")
    p.add_argument("--n", type=int, default=25, help="grid points per axis")
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("calibrate", help="derive (E_e0, L, r_total) from targets")
    common(p)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
