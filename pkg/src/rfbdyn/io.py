"""CSV/JSON emission for every result kind.

CSV: comma separated, mandatory header, LF endings, UTF-8.  Floats are
written with repr (shortest round-trip representation), so re-parsing a
file reproduces the in-memory values exactly.  Units are encoded in column
names to keep L/min vs L/s unambiguous.
"""

from __future__ import annotations

import json
import os
from typing import Iterable

import numpy as np

from .analysis import BifurcationResult, CalibrationResult, FieldSlice
from .integrator import Trajectory
from .sweep import SweepResult


def fmt(value) -> str:
    """Shortest round-trip text for a scalar."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str, header: list[str], rows: Iterable[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def trajectory_csv(traj: Trajectory, path: str) -> None:
    write_csv(path,
              ["t_s", "c_c_mol_per_L", "c_t_mol_per_L", "i_A", "emf_V"],
              zip(traj.t, traj.c_c, traj.c_t, traj.i, traj.emf))


def map_csv(result: SweepResult, path: str) -> None:
    rows = []
    for ic, c0 in enumerate(result.c_c0_values):
        for iw, w in enumerate(result.W_values):
            rows.append((w, c0, result.epsilon_t[ic, iw],
                         result.case_label[ic, iw], result.t_f[ic, iw],
                         result.end_event[ic, iw]))
    write_csv(path,
              ["W_L_per_min", "c_c0_mol_per_L", "epsilon_t", "case_label",
               "t_f_s", "end_event"],
              rows)


def boundary_csv(points: np.ndarray, path: str) -> None:
    write_csv(path, ["c_c0_mol_per_L", "W_star_L_per_min"],
              ((p[0], p[1]) for p in points))


def field_slice_csv(sl: FieldSlice, path: str) -> None:
    rows = []
    for iu, uu in enumerate(sl.u):
        for iv, vv in enumerate(sl.v):
            rows.append((uu, vv, sl.dx1[iu, iv], sl.dx2[iu, iv],
                         sl.dx3[iu, iv], int(sl.valid[iu, iv])))
    write_csv(path,
              [sl.axis_u, sl.axis_v, "dx1_dtau", "dx2_dtau", "dx3_dtau", "valid"],
              rows)


def nullcline_csv(sl: FieldSlice, path: str) -> None:
    out = [(u, v, "fast") for u, v in sl.fast_nullcline]
    out += [(u, v, "slow") for u, v in sl.slow_nullcline]
    write_csv(path, [sl.axis_u, sl.axis_v, "kind"], out)


def spectrum_json(specs, lags, w_list, extras=None) -> dict:
    entries = []
    for w, spec, lag in zip(w_list, specs, lags):
        entries.append({
            "W_L_per_min": w,
            "eigenvalues": [[z.real, z.imag] for z in spec.lam],
            "phase_lags_deg": list(lag),
        })
    doc = {"spectra": entries}
    if extras:
        doc.update(extras)
    return doc


def bifurcation_branch_csv(res: BifurcationResult, path: str) -> None:
    rows = []
    for x1, spec, disc in zip(res.x1_samples, res.spectra, res.discriminants):
        lam = spec.lam
        rows.append((x1, lam[0].real, lam[0].imag, lam[1].real, lam[1].imag,
                     lam[2].real, lam[2].imag, disc))
    write_csv(path,
              ["x1", "re_lambda1", "im_lambda1", "re_lambda2", "im_lambda2",
               "re_lambda3", "im_lambda3", "discriminant"],
              rows)


def calibration_json(res: CalibrationResult) -> dict:
    return {
        "E_e0_V": res.E_e0,
        "L_H": res.L_ind,
        "r_total_ohm": res.r_total,
        "residuals": res.residuals,
    }


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
