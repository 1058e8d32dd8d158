"""Governing equations of the flow battery coupled to an RL load loop.

Every function here is a pure function of its arguments.  Three equivalent
formulations of the same dynamics are provided and cross-validated by the
test suite:

* first-order state form in (c_c, c_t, i), the primary simulation form,
* second-order form in (c_c, dc_c/dt, i) with the tank eliminated,
* dimensionless form in (x1, x2, x3) on the time scale t_hat.

Sign convention: positive current discharges the battery (ions are consumed
in the cell at rate i/F), which is the direction the voltage-loop equation
drives the current for a positive EMF.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError
from .params import BatteryParams, CircuitParams, DimensionlessParams


def nernst_emf(c_c, p: BatteryParams):
    """Open-circuit EMF (V) of the cell at concentration c_c (mol/L).

    E = E_e0 + (2RT/F) ln(c_c / (c_max - c_c)); equals E_e0 exactly at half
    charge.  Accepts scalars or numpy arrays.  Raises DomainError at or
    beyond the logarithmic singularities c_c <= 0, c_c >= c_max.
    """
    c = np.asarray(c_c, dtype=float)
    if np.any(c <= 0.0) or np.any(c >= p.c_max):
        raise DomainError(f"c_c must lie strictly inside (0, {p.c_max})")
    out = p.E_e0 + p.thermal_voltage * np.log(c / (p.c_max - c))
    return float(out) if np.isscalar(c_c) else out


def nernst_dimensionless(x1, epsilon: float):
    """Dimensionless EMF: 1 + epsilon * ln(x1 / (1 - x1)) for x1 in (0, 1).

    Multiplied by E_e0 this reproduces nernst_emf at c_c = c_max * x1.
    """
    x = np.asarray(x1, dtype=float)
    if np.any(x <= 0.0) or np.any(x >= 1.0):
        raise DomainError("x1 must lie strictly inside (0, 1)")
    out = 1.0 + epsilon * np.log(x / (1.0 - x))
    return float(out) if np.isscalar(x1) else out


def nernst_slope(x1, epsilon: float):
    """Derivative of the dimensionless EMF with respect to x1.

    Equals epsilon / (x1 (1 - x1)); finite-difference checked in the tests.
    This is the stiffness source of the linearized model: it diverges at
    both concentration extremes.
    """
    x = np.asarray(x1, dtype=float)
    if np.any(x <= 0.0) or np.any(x >= 1.0):
        raise DomainError("x1 must lie strictly inside (0, 1)")
    out = epsilon / (x * (1.0 - x))
    return float(out) if np.isscalar(x1) else out


def state_rhs(c_c: float, c_t: float, i: float,
              battery: BatteryParams, circuit: CircuitParams,
              w_L_per_s: float) -> tuple[float, float, float]:
    """Time derivatives of (c_c, c_t, i) in the first-order form.

    dc_c/dt = (W/alpha_c)(c_t - c_c) - i/(alpha_c F)   flow exchange + reaction
    dc_t/dt = (W/alpha_t)(c_c - c_t)                   flow exchange only
    di/dt   = -[(r1+r2) i - E(c_c)] / L                voltage loop

    Total ion content alpha_c c_c + alpha_t c_t changes at exactly -i/F.
    """
    emf = nernst_emf(c_c, battery)
    dcc = (w_L_per_s / battery.alpha_c) * (c_t - c_c) - i / (battery.alpha_c * battery.F)
    dct = (w_L_per_s / battery.alpha_t) * (c_c - c_t)
    di = -(circuit.r_total * i - emf) / circuit.L_ind
    return dcc, dct, di


def second_order_rhs(c_c: float, v: float, i: float,
                     battery: BatteryParams, circuit: CircuitParams,
                     w_L_per_s: float) -> tuple[float, float, float]:
    """Time derivatives of (c_c, v, i) with v = dc_c/dt and the tank eliminated.

    dv/dt = -W(1/alpha_c + 1/alpha_t) v
            + ((r1+r2)/L - W/alpha_t) i/(alpha_c F)
            - E(c_c)/(alpha_c F L)

    Differentiating the first-order form and substituting the voltage loop
    gives exactly this; the forms are interchangeable whenever W > 0.
    """
    emf = nernst_emf(c_c, battery)
    acF = battery.alpha_c * battery.F
    dv = (-w_L_per_s * (1.0 / battery.alpha_c + 1.0 / battery.alpha_t) * v
          + (circuit.r_total / circuit.L_ind - w_L_per_s / battery.alpha_t) * i / acF
          - emf / (acF * circuit.L_ind))
    di = -(circuit.r_total * i - emf) / circuit.L_ind
    return v, dv, di


def cell_rate_from_state(c_c: float, c_t: float, i: float,
                         battery: BatteryParams, w_L_per_s: float) -> float:
    """v = dc_c/dt evaluated from a first-order state (maps between the forms)."""
    return (w_L_per_s / battery.alpha_c) * (c_t - c_c) - i / (battery.alpha_c * battery.F)


def tank_from_cell_rate(c_c: float, v: float, i: float,
                        battery: BatteryParams, w_L_per_s: float) -> float:
    """Invert cell_rate_from_state for c_t.  Requires W > 0."""
    if w_L_per_s <= 0.0:
        raise ValueError("tank concentration is not recoverable from v when W = 0")
    return c_c + (battery.alpha_c / w_L_per_s) * (v + i / (battery.alpha_c * battery.F))


def nondimensionalize(battery: BatteryParams, circuit: CircuitParams,
                      w_L_per_s: float) -> DimensionlessParams:
    """Scales and dimensionless groups for an operating point.

    c_hat = c_max, t_hat = sqrt(alpha_c F L c_max / E_e0),
    i_hat = E_e0/(r1+r2), t_hat' = L/(r1+r2),
    beta = W (1/alpha_c + 1/alpha_t) t_hat, gamma = W L / (alpha_t (r1+r2)),
    delta = t_hat'/t_hat, epsilon = 2RT/(F E_e0).
    """
    if w_L_per_s < 0.0:
        raise ValueError("flow rate must be >= 0")
    r = circuit.r_total
    c_hat = battery.c_max
    t_hat = math.sqrt(battery.alpha_c * battery.F * circuit.L_ind * battery.c_max
                      / battery.E_e0)
    i_hat = battery.E_e0 / r
    t_hat_prime = circuit.L_ind / r
    beta = w_L_per_s * (1.0 / battery.alpha_c + 1.0 / battery.alpha_t) * t_hat
    gamma = w_L_per_s * circuit.L_ind / (battery.alpha_t * r)
    delta = t_hat_prime / t_hat
    epsilon = battery.thermal_voltage / battery.E_e0
    return DimensionlessParams(beta=beta, gamma=gamma, delta=delta, epsilon=epsilon,
                               c_hat=c_hat, t_hat=t_hat, i_hat=i_hat,
                               t_hat_prime=t_hat_prime)


def dimensionless_rhs(x1: float, x2: float, x3: float,
                      d: DimensionlessParams) -> tuple[float, float, float]:
    """Derivatives of (x1, x2, x3) with respect to the scaled time tau.

    dx1/dtau = x2
    dx2/dtau = -beta x2 + (1 - gamma) x3 - N(x1)
    dx3/dtau = (-x3 + N(x1)) / delta

    where N is the dimensionless EMF.  The 1/delta factor makes x3 the fast
    variable; trajectories collapse onto the nullcline x3 = N(x1).
    """
    n = nernst_dimensionless(x1, d.epsilon)
    dx1 = x2
    dx2 = -d.beta * x2 + (1.0 - d.gamma) * x3 - n
    dx3 = (-x3 + n) / d.delta
    return dx1, dx2, dx3


def jacobian(x1: float, d: DimensionlessParams) -> np.ndarray:
    """3x3 matrix of the model linearized at (x1, 0, N-balanced x3).

    Rows: [0, 1, 0; -f, -beta, 1-gamma; f/delta, 0, -1/delta] with
    f = nernst_slope(x1).  Its characteristic polynomial is
    lambda^3 + (beta + 1/delta) lambda^2 + (beta/delta + f) lambda
    + f gamma / delta.
    """
    f = nernst_slope(x1, d.epsilon)
    return np.array([
        [0.0, 1.0, 0.0],
        [-f, -d.beta, 1.0 - d.gamma],
        [f / d.delta, 0.0, -1.0 / d.delta],
    ])


def char_poly_coeffs(x1: float, d: DimensionlessParams) -> tuple[float, float, float]:
    """Coefficients (a, b, c) of lambda^3 + a lambda^2 + b lambda + c for jacobian(x1)."""
    f = nernst_slope(x1, d.epsilon)
    a = d.beta + 1.0 / d.delta
    b = d.beta / d.delta + f
    c = f * d.gamma / d.delta
    return a, b, c


def to_dimensionless_series(t, c_c, c_t, i, battery: BatteryParams,
                            d: DimensionlessParams, w_L_per_s: float):
    """Map stored dimensional series onto (tau, x1, x2, x3).

    x1 = c_c/c_hat, x2 = (dc_c/dt) t_hat/c_hat with the rate evaluated from
    the state, x3 = i/i_hat, tau = t/t_hat.
    """
    t = np.asarray(t, dtype=float)
    c_c = np.asarray(c_c, dtype=float)
    c_t = np.asarray(c_t, dtype=float)
    i = np.asarray(i, dtype=float)
    v = (w_L_per_s / battery.alpha_c) * (c_t - c_c) - i / (battery.alpha_c * battery.F)
    tau = t / d.t_hat
    x1 = c_c / d.c_hat
    x2 = v * d.t_hat / d.c_hat
    x3 = i / d.i_hat
    return tau, x1, x2, x3
