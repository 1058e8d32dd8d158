"""Run configuration: a flat key = value file with dotted section names.

Example::

    # case 3 operating point
    operating.W_L_per_min = 0.100
    operating.c_c0 = 0.125
    integrator.t_end = 2000

Unknown keys are rejected with their line number; all invariant violations
are reported together.  Every field carries a provenance flag so that
reference-measured, calibrated and user-set values are never conflated in
outputs: the cell geometry and temperature are published reference values,
F and R are CODATA, and the circuit side (E_e0, r1, r2, L_ind) defaults to
values calibrated against the reference dynamical targets - a warning is
logged when those are used un-overridden.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

from .analysis import ClassifierThresholds
from .errors import ConfigError
from .integrator import IntegratorConfig
from .params import BatteryParams, CircuitParams, OperatingCondition
from .sweep import SweepSpec

log = logging.getLogger("rfbdyn.config")

# key -> (section dataclass, attribute, type tag, default provenance)
# type tags: f = float, i = int, of = optional float
_SCHEMA: dict[str, tuple[str, str, str, str]] = {
    "battery.alpha_c": ("battery", "alpha_c", "f", "reference"),
    "battery.alpha_t": ("battery", "alpha_t", "f", "reference"),
    "battery.T": ("battery", "T", "f", "reference"),
    "battery.c_max": ("battery", "c_max", "f", "reference"),
    "battery.E_e0": ("battery", "E_e0", "f", "calibrated"),
    "battery.F": ("battery", "F", "f", "codata"),
    "battery.R": ("battery", "R", "f", "codata"),
    "battery.nernst_prefactor": ("battery", "nernst_prefactor", "of", "default"),
    "circuit.r1": ("circuit", "r1", "f", "calibrated"),
    "circuit.r2": ("circuit", "r2", "f", "calibrated"),
    "circuit.L_ind": ("circuit", "L_ind", "f", "calibrated"),
    "operating.W_L_per_min": ("operating", "W_L_per_min", "f", "default"),
    "operating.c_c0": ("operating", "c_c0", "f", "default"),
    "operating.preload_resistance": ("operating", "preload_resistance", "of", "default"),
    "integrator.h": ("integrator", "h", "f", "default"),
    "integrator.t_end": ("integrator", "t_end", "f", "default"),
    "integrator.record_stride": ("integrator", "record_stride", "i", "default"),
    "integrator.current_zero_rel": ("integrator", "current_zero_rel", "f", "default"),
    "integrator.conc_floor_frac": ("integrator", "conc_floor_frac", "f", "default"),
    "integrator.current_zero_A": ("integrator", "current_zero_A", "of", "default"),
    "integrator.depletion_floor": ("integrator", "depletion_floor", "of", "default"),
    "classifier.n_osc": ("classifier", "n_osc", "i", "default"),
    "classifier.prominence_frac": ("classifier", "prominence_frac", "f", "default"),
    "classifier.eta": ("classifier", "eta", "f", "default"),
    "sweep.W_min": ("sweep", "W_min", "f", "default"),
    "sweep.W_max": ("sweep", "W_max", "f", "default"),
    "sweep.W_count": ("sweep", "W_count", "i", "default"),
    "sweep.c_c0_min": ("sweep", "c_c0_min", "f", "default"),
    "sweep.c_c0_max": ("sweep", "c_c0_max", "f", "default"),
    "sweep.c_c0_count": ("sweep", "c_c0_count", "i", "default"),
    "sweep.workers": ("sweep", "workers", "i", "default"),
    "sweep.t_end_base": ("sweep", "t_end_base", "f", "default"),
    "sweep.t_end_scale": ("sweep", "t_end_scale", "f", "default"),
    "sweep.t_end_ceiling": ("sweep", "t_end_ceiling", "f", "default"),
    "output.dir": ("output", "dir", "s", "default"),
}

_CALIBRATED_KEYS = ("battery.E_e0", "circuit.r1", "circuit.r2", "circuit.L_ind")


@dataclass(frozen=True)
class RunConfig:
    battery: BatteryParams
    circuit: CircuitParams
    operating: OperatingCondition
    integrator: IntegratorConfig
    thresholds: ClassifierThresholds
    sweep: SweepSpec
    output_dir: str = "out"
    provenance: dict[str, str] = field(default_factory=dict)


def _parse_value(key: str, raw: str, kind: str, lineno: int):
    raw = raw.strip()
    try:
        if kind == "f":
            return float(raw)
        if kind == "i":
            return int(raw)
        if kind == "of":
            return None if raw.lower() in ("none", "") else float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: cannot parse {key} = {raw!r}: {exc}") from exc


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse the key = value format, returning {dotted key: typed value}."""
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        _, _, kind, _ = _SCHEMA[key]
        values[key] = _parse_value(key, raw, kind, lineno)
    return values


def build_config(values: dict[str, Any]) -> RunConfig:
    """Assemble and validate a RunConfig from dotted-key values."""
    provenance = {key: spec[3] for key, spec in _SCHEMA.items()}
    sections: dict[str, dict[str, Any]] = {}
    for key, value in values.items():
        section, attr, _, _ = _SCHEMA[key]
        sections.setdefault(section, {})[attr] = value
        provenance[key] = "user"

    problems: list[str] = []

    def make(cls, name):
        try:
            return cls(**sections.get(name, {}))
        except (ValueError, TypeError) as exc:
            problems.append(str(exc))
            return cls()

    battery = make(BatteryParams, "battery")
    circuit = make(CircuitParams, "circuit")
    operating = make(OperatingCondition, "operating")
    integrator = make(IntegratorConfig, "integrator")
    thresholds = make(ClassifierThresholds, "classifier")
    sweep_kwargs = dict(sections.get("sweep", {}))
    sweep_kwargs["integrator"] = integrator
    sweep_kwargs["thresholds"] = thresholds
    try:
        sweep = SweepSpec(**sweep_kwargs)
    except (ValueError, TypeError) as exc:
        problems.append(str(exc))
        sweep = SweepSpec(integrator=integrator, thresholds=thresholds)
    try:
        operating.validate_against(battery)
    except ValueError as exc:
        problems.append(str(exc))
    if problems:
        raise ConfigError("invalid configuration: " + "; ".join(problems))

    defaulted = [k for k in _CALIBRATED_KEYS if provenance[k] == "calibrated"]
    if defaulted:
        log.warning("using calibrated defaults for %s (values derived from "
                    "reference dynamical targets, not direct measurements)",
                    ", ".join(defaulted))
    return RunConfig(battery=battery, circuit=circuit, operating=operating,
                     integrator=integrator, thresholds=thresholds, sweep=sweep,
                     output_dir=sections.get("output", {}).get("dir", "out"),
                     provenance=provenance)


def load_config(path: str | None = None,
                overrides: dict[str, str] | None = None) -> RunConfig:
    """Load a config file (optional) and apply override assignments.

    Overrides use the same dotted keys with raw string values, as supplied
    by command-line --set flags; they take precedence over the file.
    """
    values: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
        values.update(parse_config_text(text))
    for key, raw in (overrides or {}).items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown override key {key!r}")
        _, _, kind, _ = _SCHEMA[key]
        values[key] = _parse_value(key, raw, kind, 0)
    return build_config(values)


def config_keys() -> list[str]:
    """The full documented key list, for docs and CLI help."""
    return sorted(_SCHEMA)
