"""Fixed-step RK4 integration with per-step event detection.

The step size is fixed (default h = 0.001 s); there is no adaptive control.
Events (current falling to zero after a discharge has started, a
concentration reaching the domain floor, or a numerical blowup) are checked
on every step, not only on stored samples, and terminate the run with a
recorded end event rather than an exception so that parameter sweeps survive
pathological cells.

The dimensional first-order system has a compiled fast path (`integrate`);
`rk4_step` and `integrate_fixed` are the generic pure-Python equivalents
used for the alternative formulations and for cross-checks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import NoDischargeError, NumericalBlowupError
from .model import nernst_emf
from .params import BatteryParams, CircuitParams, OperatingCondition


class EventKind(enum.Enum):
    TIME_LIMIT = "time_limit"
    CURRENT_ZERO = "current_zero"
    DEPLETED = "depleted"
    BLOWUP = "blowup"


@dataclass(frozen=True)
class EndEvent:
    kind: EventKind
    t: float


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size, horizon, recording stride and event thresholds.

    current_zero_rel is the discharge-end threshold as a fraction of the
    current scale i_hat = E_e0/(r1+r2); the detector arms once the current
    has exceeded twice the threshold.  conc_floor_frac sets the domain
    guard as a fraction of c_max.  The floor must sit low enough that a
    complete discharge can actually run out (the leftover tank concentration
    at termination scales with the EMF remaining at the floor) yet high
    enough that the fastest EMF mode, with angular frequency close to
    sqrt(nernst_slope)/t_hat, stays inside the RK4 stability region at the
    configured h.  1e-11 satisfies both at the default parameters.
    Absolute overrides (in A, mol/L) take precedence when set.
    """

    h: float = 1e-3
    t_end: float = 5000.0
    record_stride: int = 100
    current_zero_rel: float = 1e-4
    conc_floor_frac: float = 1e-11
    current_zero_A: float | None = None
    depletion_floor: float | None = None

    def __post_init__(self) -> None:
        problems = []
        if not self.h > 0.0:
            problems.append("integrator.h must be positive")
        if not self.t_end > 0.0:
            problems.append("integrator.t_end must be positive")
        if self.record_stride < 1:
            problems.append("integrator.record_stride must be >= 1")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class Trajectory:
    """Stored samples of one run plus its end event.

    charge_mol is the cumulative consumed ion amount, the running trapezoid
    of i/F over every step (not just stored ones).  The EMF series is
    nernst_emf applied to the stored cell concentrations.
    """

    t: np.ndarray
    c_c: np.ndarray
    c_t: np.ndarray
    i: np.ndarray
    emf: np.ndarray
    charge_mol: np.ndarray
    end_event: EndEvent
    i_scale: float
    battery: BatteryParams
    circuit: CircuitParams
    operating: OperatingCondition
    config: IntegratorConfig

    def __len__(self) -> int:
        return self.t.size

    def conservation_residual(self) -> float:
        """max |delta(alpha_c c_c + alpha_t c_t) + consumed| / (alpha_t c_t0).

        Zero for an exact integration; the RK4/trapezoid mismatch makes it a
        genuine consistency check of the integrator at O(h^2).
        """
        b = self.battery
        inventory = b.alpha_c * self.c_c + b.alpha_t * self.c_t
        drift = inventory - inventory[0] + self.charge_mol
        return float(np.max(np.abs(drift)) / (b.alpha_t * self.c_t[0]))


# End-event codes inside the compiled kernel.
_EV_TIME_LIMIT = 0
_EV_CURRENT_ZERO = 1
_EV_DEPLETED = 2
_EV_BLOWUP = 3


@njit(cache=True)
def _first_order_kernel(cc0, ct0, i0, h, n_max, stride,
                        alpha_c, alpha_t, faraday, c_max, e_e0, two_rt_f,
                        r_total, l_ind, w,
                        floor_c, arm_i, tol_i,
                        t_out, cc_out, ct_out, i_out, q_out):
    """March the first-order system, recording every `stride` steps.

    Returns (samples stored, event code, event time).  A step whose stage
    or result would leave [floor_c, c_max - floor_c] is rejected and the
    run ends at the last valid state, so every stored sample is in-domain.
    """
    wc = w / alpha_c
    wt = w / alpha_t
    inv_acf = 1.0 / (alpha_c * faraday)
    ceil_c = c_max - floor_c

    cc = cc0
    ct = ct0
    i = i0
    charge_as = 0.0          # integral of i dt, A s
    armed = i0 > arm_i

    t_out[0] = 0.0
    cc_out[0] = cc
    ct_out[0] = ct
    i_out[0] = i
    q_out[0] = 0.0
    n_rec = 1
    last_stored = 0

    event = _EV_TIME_LIMIT
    t_ev = n_max * h

    n = 0
    while n < n_max:
        ok = True
        # stage 1
        if cc <= 0.0 or cc >= c_max:
            ok = False
            k1c = k1t = k1i = 0.0
        else:
            emf = e_e0 + two_rt_f * math.log(cc / (c_max - cc))
            k1c = wc * (ct - cc) - i * inv_acf
            k1t = wt * (cc - ct)
            k1i = -(r_total * i - emf) / l_ind
        if ok:
            c2 = cc + 0.5 * h * k1c
            if c2 <= 0.0 or c2 >= c_max:
                ok = False
                k2c = k2t = k2i = 0.0
            else:
                t2 = ct + 0.5 * h * k1t
                i2 = i + 0.5 * h * k1i
                emf = e_e0 + two_rt_f * math.log(c2 / (c_max - c2))
                k2c = wc * (t2 - c2) - i2 * inv_acf
                k2t = wt * (c2 - t2)
                k2i = -(r_total * i2 - emf) / l_ind
        if ok:
            c3 = cc + 0.5 * h * k2c
            if c3 <= 0.0 or c3 >= c_max:
                ok = False
                k3c = k3t = k3i = 0.0
            else:
                t3 = ct + 0.5 * h * k2t
                i3 = i + 0.5 * h * k2i
                emf = e_e0 + two_rt_f * math.log(c3 / (c_max - c3))
                k3c = wc * (t3 - c3) - i3 * inv_acf
                k3t = wt * (c3 - t3)
                k3i = -(r_total * i3 - emf) / l_ind
        if ok:
            c4 = cc + h * k3c
            if c4 <= 0.0 or c4 >= c_max:
                ok = False
                k4c = k4t = k4i = 0.0
            else:
                t4 = ct + h * k3t
                i4 = i + h * k3i
                emf = e_e0 + two_rt_f * math.log(c4 / (c_max - c4))
                k4c = wc * (t4 - c4) - i4 * inv_acf
                k4t = wt * (c4 - t4)
                k4i = -(r_total * i4 - emf) / l_ind
        if not ok:
            event = _EV_DEPLETED
            t_ev = n * h
            break

        h6 = h / 6.0
        cc_new = cc + h6 * (k1c + 2.0 * (k2c + k3c) + k4c)
        ct_new = ct + h6 * (k1t + 2.0 * (k2t + k3t) + k4t)
        i_new = i + h6 * (k1i + 2.0 * (k2i + k3i) + k4i)

        if not (math.isfinite(cc_new) and math.isfinite(ct_new) and math.isfinite(i_new)):
            event = _EV_BLOWUP
            t_ev = (n + 1) * h
            break
        if (cc_new < floor_c or ct_new < floor_c
                or cc_new > ceil_c or ct_new > ceil_c):
            event = _EV_DEPLETED
            t_ev = n * h
            break

        charge_as += 0.5 * (i + i_new) * h
        cc = cc_new
        ct = ct_new
        i = i_new
        n += 1

        stop = False
        if armed:
            if i < tol_i:
                event = _EV_CURRENT_ZERO
                t_ev = n * h
                stop = True
        elif i > arm_i:
            armed = True

        if stop or n % stride == 0:
            t_out[n_rec] = n * h
            cc_out[n_rec] = cc
            ct_out[n_rec] = ct
            i_out[n_rec] = i
            q_out[n_rec] = charge_as / faraday
            n_rec += 1
            last_stored = n
        if stop:
            break

    # make sure the terminal state is stored exactly once
    if last_stored != n:
        t_out[n_rec] = n * h
        cc_out[n_rec] = cc
        ct_out[n_rec] = ct
        i_out[n_rec] = i
        q_out[n_rec] = charge_as / faraday
        n_rec += 1
    if event == _EV_TIME_LIMIT:
        t_ev = n * h
    return n_rec, event, t_ev


_EVENT_KINDS = {
    _EV_TIME_LIMIT: EventKind.TIME_LIMIT,
    _EV_CURRENT_ZERO: EventKind.CURRENT_ZERO,
    _EV_DEPLETED: EventKind.DEPLETED,
    _EV_BLOWUP: EventKind.BLOWUP,
}


def initial_current(battery: BatteryParams, circuit: CircuitParams,
                    operating: OperatingCondition) -> float:
    """Current at t = 0: zero for an open switch, the steady preload value
    E(c_c0)/(r1 + r_pre) when a preload resistance is given."""
    if operating.preload_resistance is None:
        return 0.0
    return nernst_emf(operating.c_c0, battery) / (circuit.r1 + operating.preload_resistance)


def integrate(battery: BatteryParams, circuit: CircuitParams,
              operating: OperatingCondition,
              cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Run the first-order system from the step-change initial condition.

    The initial state has c_c = c_t = c_c0 and the current set by the
    initial-current mode.  Returns the recorded trajectory with its end
    event; numerical blowups are recorded, never raised.
    """
    operating.validate_against(battery)
    i_hat = battery.E_e0 / circuit.r_total
    tol_i = (cfg.current_zero_A if cfg.current_zero_A is not None
             else cfg.current_zero_rel * i_hat)
    floor_c = (cfg.depletion_floor if cfg.depletion_floor is not None
               else cfg.conc_floor_frac * battery.c_max)
    n_max = int(round(cfg.t_end / cfg.h))
    if n_max < 1:
        raise ValueError("t_end must cover at least one step")
    cap = n_max // cfg.record_stride + 3
    t_out = np.empty(cap)
    cc_out = np.empty(cap)
    ct_out = np.empty(cap)
    i_out = np.empty(cap)
    q_out = np.empty(cap)

    n_rec, ev_code, t_ev = _first_order_kernel(
        operating.c_c0, operating.c_c0, initial_current(battery, circuit, operating),
        cfg.h, n_max, cfg.record_stride,
        battery.alpha_c, battery.alpha_t, battery.F, battery.c_max,
        battery.E_e0, battery.thermal_voltage,
        circuit.r_total, circuit.L_ind, operating.W_L_per_s,
        floor_c, 2.0 * tol_i, tol_i,
        t_out, cc_out, ct_out, i_out, q_out)

    t = t_out[:n_rec].copy()
    c_c = cc_out[:n_rec].copy()
    c_t = ct_out[:n_rec].copy()
    i = i_out[:n_rec].copy()
    charge = q_out[:n_rec].copy()
    emf = nernst_emf(c_c, battery)
    return Trajectory(t=t, c_c=c_c, c_t=c_t, i=i, emf=emf, charge_mol=charge,
                      end_event=EndEvent(_EVENT_KINDS[ev_code], t_ev),
                      i_scale=i_hat, battery=battery, circuit=circuit,
                      operating=operating, config=cfg)


def rk4_step(rhs, y, h: float):
    """Classical four-stage RK4 update for an autonomous system.

    rhs maps a state array to its derivative.  Deterministic; raises
    NumericalBlowupError if the result is non-finite.
    """
    y = np.asarray(y, dtype=float)
    k1 = np.asarray(rhs(y), dtype=float)
    k2 = np.asarray(rhs(y + 0.5 * h * k1), dtype=float)
    k3 = np.asarray(rhs(y + 0.5 * h * k2), dtype=float)
    k4 = np.asarray(rhs(y + h * k3), dtype=float)
    out = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowupError("non-finite state after RK4 step")
    return out


def integrate_fixed(rhs, y0, h: float, n_steps: int, record_stride: int = 1):
    """Generic fixed-step RK4 march, recording every record_stride steps.

    Returns (t, Y) with Y of shape (n_samples, len(y0)); the terminal state
    is always included.  Exceptions from rhs (e.g. domain errors) propagate.
    """
    y = np.asarray(y0, dtype=float)
    n_rec = n_steps // record_stride + 2
    t_arr = np.empty(n_rec)
    y_arr = np.empty((n_rec, y.size))
    t_arr[0] = 0.0
    y_arr[0] = y
    k = 1
    last_stored = 0
    for n in range(1, n_steps + 1):
        y = rk4_step(rhs, y, h)
        if n % record_stride == 0:
            t_arr[k] = n * h
            y_arr[k] = y
            k += 1
            last_stored = n
    if last_stored != n_steps:
        t_arr[k] = n_steps * h
        y_arr[k] = y
        k += 1
    return t_arr[:k].copy(), y_arr[:k].copy()


def detect_discharge_end(traj: Trajectory, tol: float | None = None) -> tuple[float, float]:
    """Time and tank concentration at the end of discharging.

    This is the first time, after the current has exceeded twice the
    threshold, that it falls back below the threshold, or else the depletion
    event time when the run ended at the concentration floor.  The
    threshold defaults to the run's configured current-zero level.
    Raises NoDischargeError if the current never armed the detector.
    """
    if traj.t.size == 0:
        raise NoDischargeError("empty trajectory")
    if tol is None:
        tol = (traj.config.current_zero_A if traj.config.current_zero_A is not None
               else traj.config.current_zero_rel * traj.i_scale)
    if traj.end_event.kind in (EventKind.DEPLETED, EventKind.CURRENT_ZERO):
        # the kernel already located the event at step resolution; a
        # depleted cell is by definition at the end of its discharge
        return traj.end_event.t, float(traj.c_t[-1])
    armed = np.nonzero(traj.i > 2.0 * tol)[0]
    if armed.size == 0:
        raise NoDischargeError("current never exceeded the arming threshold")
    after = np.nonzero(traj.i[armed[0]:] < tol)[0]
    if after.size == 0:
        raise NoDischargeError("current never fell back below the threshold")
    k = armed[0] + after[0]
    return float(traj.t[k]), float(traj.c_t[k])


def warm_up() -> None:
    """Force JIT compilation of the kernel (e.g. before forking workers)."""
    cfg = IntegratorConfig(t_end=0.01, record_stride=1)
    integrate(BatteryParams(), CircuitParams(), OperatingCondition(), cfg)
