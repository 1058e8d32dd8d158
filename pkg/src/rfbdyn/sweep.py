"""Parameter-grid sweeps over (flow rate, initial concentration).

Cells are independent runs distributed over a process pool; the result grid
is assembled in index order, so it is bit-identical for any worker count.
Per-cell failures (blowups, runs that never discharge) are recorded in the
cell and never abort the sweep.
"""

from __future__ import annotations

import multiprocessing as mp
from dataclasses import dataclass, field

import numpy as np

from .analysis import ClassifierThresholds, classify
from .errors import EmptyBoundaryError
from .integrator import (EventKind, IntegratorConfig, Trajectory, integrate,
                         warm_up)
from .params import BatteryParams, CircuitParams, OperatingCondition


@dataclass(frozen=True)
class SweepSpec:
    """Grid ranges (W in L/min), per-cell integration policy and thresholds.

    The per-cell horizon is min(t_end_ceiling, t_end_base + t_end_scale / W):
    slow flows discharge slowly, so the cap grows as W shrinks, bounded by a
    hard ceiling for the worst-case cell.
    """

    W_min: float = 0.001
    W_max: float = 0.200
    W_count: int = 40
    c_c0_min: float = 0.01
    c_c0_max: float = 1.00
    c_c0_count: int = 20
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    thresholds: ClassifierThresholds = field(default_factory=ClassifierThresholds)
    workers: int = 1
    # horizon = base + scale/W, capped by the ceiling.  A complete discharge
    # has a flow-independent bulk phase of roughly alpha_t F (r1+r2) c_t0 / E
    # (~3100 s for a full tank at the default parameters, covered by base)
    # followed by an exponential tail on the alpha_t/W scale (covered by
    # scale/W); cells that stop early terminate on their events long before
    # the cap is reached.
    t_end_base: float = 4000.0     # s
    t_end_scale: float = 600.0     # s * (L/min)
    t_end_ceiling: float = 30000.0  # s

    def __post_init__(self) -> None:
        problems = []
        if not (0.0 < self.W_min < self.W_max):
            problems.append("sweep needs 0 < W_min < W_max")
        if not (0.0 < self.c_c0_min < self.c_c0_max):
            problems.append("sweep needs 0 < c_c0_min < c_c0_max")
        if self.W_count < 2 or self.c_c0_count < 2:
            problems.append("sweep counts must be >= 2")
        if self.workers < 1:
            problems.append("sweep.workers must be >= 1")
        if (self.t_end_base < 0.0 or self.t_end_scale <= 0.0
                or self.t_end_ceiling <= 0.0):
            problems.append("sweep time caps must be positive")
        if problems:
            raise ValueError("; ".join(problems))

    def W_values(self) -> np.ndarray:
        return np.linspace(self.W_min, self.W_max, self.W_count)

    def c_c0_values(self) -> np.ndarray:
        return np.linspace(self.c_c0_min, self.c_c0_max, self.c_c0_count)

    def cell_config(self, w_L_per_min: float) -> IntegratorConfig:
        t_end = min(self.t_end_ceiling,
                    self.t_end_base + self.t_end_scale / w_L_per_min)
        base = self.integrator
        return IntegratorConfig(h=base.h, t_end=t_end,
                                record_stride=base.record_stride,
                                current_zero_rel=base.current_zero_rel,
                                conc_floor_frac=base.conc_floor_frac,
                                current_zero_A=base.current_zero_A,
                                depletion_floor=base.depletion_floor)


@dataclass(frozen=True)
class SweepResult:
    """One cell per grid point, indexed [i_c_c0, i_W].

    epsilon_t is NaN where classification failed; case_label holds the
    CaseLabel value string or '' there.  time_limited flags cells whose
    epsilon_t is partial because the horizon cap hit first.
    """

    W_values: np.ndarray
    c_c0_values: np.ndarray
    epsilon_t: np.ndarray
    case_label: np.ndarray
    t_f: np.ndarray
    end_event: np.ndarray
    oscillation_count: np.ndarray
    conservation: np.ndarray
    time_limited: np.ndarray
    error: np.ndarray

    def boundary(self, eta: float) -> np.ndarray:
        """The epsilon_t = eta level polyline; see extract_boundary."""
        return extract_boundary(self, eta)


def classify_cell(traj: Trajectory, thresholds: ClassifierThresholds):
    """classify() unpacked into a plain tuple, with the capped-run flag."""
    time_limited = traj.end_event.kind is EventKind.TIME_LIMIT
    cls = classify(traj, thresholds)
    return cls.label.value, cls.epsilon_t, cls.oscillation_count, cls.t_f, time_limited


def _run_cell(args) -> tuple:
    battery, circuit, spec, w, c0 = args
    cfg = spec.cell_config(w)
    try:
        traj = integrate(battery, circuit,
                         OperatingCondition(W_L_per_min=w, c_c0=c0), cfg)
        label, eps_t, n_osc, t_f, limited = classify_cell(traj, spec.thresholds)
        return (eps_t, label, t_f, traj.end_event.kind.value, n_osc,
                traj.conservation_residual(), limited, "")
    except Exception as exc:  # recorded, never fatal for the sweep
        return (np.nan, "", np.nan, "", 0, np.nan, False, f"{type(exc).__name__}: {exc}")


def run_sweep(spec: SweepSpec,
              battery: BatteryParams = BatteryParams(),
              circuit: CircuitParams = CircuitParams()) -> SweepResult:
    """Simulate and classify every grid cell.

    Results are independent of worker count and execution order; each cell
    is one independent integrate + classify at its own horizon cap.
    """
    ws = spec.W_values()
    cs = spec.c_c0_values()
    jobs = [(battery, circuit, spec, float(w), float(c0))
            for c0 in cs for w in ws]
    if spec.workers > 1:
        warm_up()  # compile before forking so children inherit the kernel
        with mp.get_context("fork").Pool(spec.workers) as pool:
            rows = pool.map(_run_cell, jobs, chunksize=4)
    else:
        rows = [_run_cell(j) for j in jobs]

    shape = (spec.c_c0_count, spec.W_count)
    eps = np.array([r[0] for r in rows]).reshape(shape)
    labels = np.array([r[1] for r in rows], dtype=object).reshape(shape)
    t_f = np.array([r[2] for r in rows]).reshape(shape)
    events = np.array([r[3] for r in rows], dtype=object).reshape(shape)
    n_osc_arr = np.array([r[4] for r in rows], dtype=int).reshape(shape)
    cons = np.array([r[5] for r in rows]).reshape(shape)
    limited = np.array([r[6] for r in rows], dtype=bool).reshape(shape)
    errors = np.array([r[7] for r in rows], dtype=object).reshape(shape)
    return SweepResult(W_values=ws, c_c0_values=cs, epsilon_t=eps,
                       case_label=labels, t_f=t_f, end_event=events,
                       oscillation_count=n_osc_arr, conservation=cons,
                       time_limited=limited, error=errors)


def probe_boundary_cell(battery: BatteryParams, circuit: CircuitParams,
                        spec: SweepSpec, c0: float, w_lo: float, w_hi: float,
                        rel_width: float = 1e-4, max_iter: int = 20):
    """Re-simulate on the consumption edge between two grid flows.

    Consumption jumps across the dividing line (premature stall below,
    near-complete discharge above), so the grid-interpolated boundary W* is
    only resolved to a cell width.  This bisects actual re-runs on the
    predicate epsilon_t >= eta until the bracket is relatively tight, then
    returns (W, classify_cell result) for the surviving side, i.e. a run
    sitting on the line itself.  w_lo must fall below the line and w_hi
    above it.
    """
    def run(w):
        traj = integrate(battery, circuit,
                         OperatingCondition(W_L_per_min=w, c_c0=c0),
                         spec.cell_config(w))
        return classify_cell(traj, spec.thresholds)

    eta = spec.thresholds.eta
    lo, hi = w_lo, w_hi
    best = run(hi)
    if best[1] < eta or np.isnan(best[1]):
        raise ValueError(f"w_hi={w_hi} does not consume past eta={eta}")
    best_w = hi
    for _ in range(max_iter):
        if (hi - lo) <= rel_width * hi:
            break
        mid = 0.5 * (lo + hi)
        cell = run(mid)
        if np.isnan(cell[1]) or cell[1] < eta:
            lo = mid
        else:
            hi, best, best_w = mid, cell, mid
    return best_w, best


def extract_boundary(result: SweepResult, eta: float) -> np.ndarray:
    """Level curve epsilon_t = eta as one (c_c0, W*) point per straddling column.

    Within each c_c0 column the first adjacent W pair whose consumption
    straddles eta is linearly interpolated.  Columns without a straddle
    contribute no point.  Raises EmptyBoundaryError when no column straddles.
    """
    if result.W_values.size < 2 or result.c_c0_values.size < 2:
        raise ValueError("boundary extraction needs at least a 2x2 grid")
    points = []
    for ic, c0 in enumerate(result.c_c0_values):
        col = result.epsilon_t[ic]
        for iw in range(col.size - 1):
            lo, hi = col[iw], col[iw + 1]
            if np.isnan(lo) or np.isnan(hi):
                continue
            if (lo < eta) and (hi >= eta):
                frac = (eta - lo) / (hi - lo)
                w_star = result.W_values[iw] + frac * (result.W_values[iw + 1]
                                                       - result.W_values[iw])
                points.append((float(c0), float(w_star)))
                break
    if not points:
        raise EmptyBoundaryError(f"no column straddles epsilon_t = {eta}")
    return np.array(points)
