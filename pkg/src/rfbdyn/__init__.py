"""Transient simulation and dynamical analysis of a vanadium redox flow
battery discharging into a resistive-inductive load after a step change."""

from .analysis import (BifurcationResult, CalibrationResult, CalibrationTargets,
                       CaseLabel, Classification, ClassifierThresholds,
                       EigenSpectrum, bifurcation_scan, calibrate, classify,
                       consumption_rate, eigenvalues, fixed_point, phase_lags,
                       spectrum_at, vector_field_slice)
from .integrator import (EndEvent, EventKind, IntegratorConfig, Trajectory,
                         detect_discharge_end, integrate, integrate_fixed,
                         rk4_step)
from .model import (dimensionless_rhs, jacobian, nernst_dimensionless,
                    nernst_emf, nernst_slope, nondimensionalize,
                    second_order_rhs, state_rhs, to_dimensionless_series)
from .params import (BatteryParams, CircuitParams, DimensionlessParams,
                     DimensionlessState, OperatingCondition, PhysicalState,
                     SecondOrderState)
from .sweep import SweepResult, SweepSpec, extract_boundary, run_sweep

__version__ = "0.1.0"
