"""Flat key-value run configuration: parse, validate, serialize.

Format: one ``section.key = value`` per line; blank lines and ``#``
comments are ignored.  An empty document yields the published defaults
(the twelve plant coefficients, setpoint 20.9 degC, alpha = 10, kp = 1,
one-minute sampling).  Note the sign caveat: the +10 default alpha is the
published value, but on this plant's verbatim coefficient signs a stable
loop needs a negative alpha (the built-in scenarios use -10); set
``ip.alpha = -10`` for closed-loop work with custom configs.

Supported keys:

    plant.a11 .. plant.a62   coupling coefficients (per hour)
    ip.alpha                 control model input gain (shared with estimator)
    ip.kp                    proportional gain (> 0)
    ip.u_min, ip.u_max       optional actuator limits (degC)
    est.window_samples       estimator window length (>= 3)
    est.quadrature           simpson | trapezoid
    sim.duration             run length (h)
    sim.control_period       sampling period (h), default 1/60
    sim.setpoint             constant reference (degC)
    sim.p_it                 initial CPU load (kW)
    sim.t_out                initial outdoor temperature (degC)
    sim.t_air_in             initial supply air temperature; default trims
                             the steady state onto the setpoint
    sim.noise_std            measurement noise std dev (degC), off if absent
    sim.noise_seed           noise generator seed
    sim.warmup_hold_input    hold the actuator until the estimator fills
    sim.cold_start           start from a uniform state at t_out instead of
                             the equilibrium
    load.csv                 path of a t,p_it load trace merged as events
"""

from __future__ import annotations

import math

from .controller import IpConfig, ReferenceTrajectory
from .defaults import ALPHA, CONTROL_PERIOD_H, KP, SETPOINT_C, WINDOW_SAMPLES
from .estimator import EstimatorConfig, QUADRATURE_RULES
from .plant import PlantInputs, ThermalParams, ThermalState, equilibrium, trim_supply_air
from .scenarios import load_events, load_trace_from_csv
from .simloop import EventSchedule, SimConfig

PARAM_KEYS = tuple(f"plant.a{i}{j}" for i in range(1, 7) for j in (1, 2))


class ConfigError(ValueError):
    """A config document failed to parse or validate."""

    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_KEY_TYPES: dict[str, type] = {key: float for key in PARAM_KEYS}
_KEY_TYPES.update({
    "ip.alpha": float,
    "ip.kp": float,
    "ip.u_min": float,
    "ip.u_max": float,
    "est.window_samples": int,
    "est.quadrature": str,
    "sim.duration": float,
    "sim.control_period": float,
    "sim.setpoint": float,
    "sim.p_it": float,
    "sim.t_out": float,
    "sim.t_air_in": float,
    "sim.noise_std": float,
    "sim.noise_seed": int,
    "sim.warmup_hold_input": bool,
    "sim.cold_start": bool,
    "load.csv": str,
})

_KEY_CONSTRAINTS = {
    "ip.alpha": (lambda v: v != 0.0, "must be nonzero"),
    "ip.kp": (lambda v: v > 0.0, "must be > 0 (closed-loop stability)"),
    "est.window_samples": (lambda v: v >= 3, "must be >= 3"),
    "est.quadrature": (lambda v: v in QUADRATURE_RULES,
                       f"must be one of {QUADRATURE_RULES}"),
    "sim.duration": (lambda v: v > 0.0, "must be > 0"),
    "sim.control_period": (lambda v: v > 0.0, "must be > 0"),
    "sim.p_it": (lambda v: v >= 0.0, "must be >= 0"),
    "sim.noise_std": (lambda v: v >= 0.0, "must be >= 0"),
}


def _parse_lines(text: str) -> dict[str, object]:
    values: dict[str, object] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got {line!r}", line_no)
        key, _, value_text = line.partition("=")
        key = key.strip()
        value_text = value_text.strip()
        if key not in _KEY_TYPES:
            raise ConfigError(f"unknown key {key!r}", line_no)
        kind = _KEY_TYPES[key]
        try:
            if kind is bool:
                value = _parse_bool(value_text)
            elif kind is str:
                value = value_text
            else:
                value = kind(value_text)
        except ValueError:
            raise ConfigError(
                f"key {key!r}: expected {kind.__name__}, got {value_text!r}",
                line_no) from None
        if kind is float and not math.isfinite(value):
            raise ConfigError(f"key {key!r}: value must be finite", line_no)
        if key in _KEY_CONSTRAINTS:
            ok, why = _KEY_CONSTRAINTS[key]
            if not ok(value):
                raise ConfigError(f"key {key!r} {why}, got {value_text}", line_no)
        values[key] = value
    return values


def parse_config(text: str) -> SimConfig:
    """Build a validated SimConfig from config text; defaults fill gaps."""
    values = _parse_lines(text)

    param_fields = {key.split(".a")[1]: values[key] for key in PARAM_KEYS if key in values}
    try:
        params = ThermalParams(**{f"a{k}": v for k, v in param_fields.items()})
        alpha = float(values.get("ip.alpha", ALPHA))
        ip = IpConfig(
            alpha=alpha,
            kp=float(values.get("ip.kp", KP)),
            u_min=values.get("ip.u_min"),
            u_max=values.get("ip.u_max"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    control_period = float(values.get("sim.control_period", CONTROL_PERIOD_H))
    try:
        est = EstimatorConfig(
            alpha=alpha,
            window_samples=int(values.get("est.window_samples", WINDOW_SAMPLES)),
            sample_interval=control_period,
            quadrature=values.get("est.quadrature", "simpson"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    setpoint = float(values.get("sim.setpoint", SETPOINT_C))
    duration = float(values.get("sim.duration", 4.0))
    t_out = float(values.get("sim.t_out", 25.0))
    p_it = float(values.get("sim.p_it", 5.0))

    events = EventSchedule()
    if "load.csv" in values:
        load = load_trace_from_csv(values["load.csv"])
        p_it = load.value_at(0.0)
        events = EventSchedule(load_events(load, duration))

    if "sim.t_air_in" in values:
        t_air_in = float(values["sim.t_air_in"])
    else:
        t_air_in = trim_supply_air(params, p_it, t_out, setpoint)
    inputs = PlantInputs(t_air_in=t_air_in, p_it=p_it, t_out=t_out)

    if values.get("sim.cold_start", False):
        state = ThermalState.uniform(t_out)
    else:
        state = equilibrium(params, inputs)

    try:
        return SimConfig(
            duration=duration,
            initial_state=state,
            initial_inputs=inputs,
            params=params,
            ip=ip,
            est=est,
            traj=ReferenceTrajectory.constant(setpoint),
            events=events,
            control_period=control_period,
            noise_std=values.get("sim.noise_std"),
            noise_seed=int(values.get("sim.noise_seed", 0)),
            warmup_hold_input=bool(values.get("sim.warmup_hold_input", True)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def serialize_config(config: SimConfig) -> str:
    """Emit config text that parses back to an equal SimConfig.

    Covers the config-file-representable subset: a constant setpoint and
    no event schedule (load traces are merged into events at parse time
    and cannot be written back).
    """
    if len(config.events):
        raise ValueError("event schedules are not representable in config text")
    if len(config.traj.segments) != 1 or config.traj.segments[0].kind != "hold":
        raise ValueError("only constant-setpoint trajectories are representable")
    setpoint = config.traj.segments[0].level

    lines: list[str] = []
    for key in PARAM_KEYS:
        field = "a" + key.split(".a")[1]
        lines.append(f"{key} = {getattr(config.params, field)!r}")
    lines.append(f"ip.alpha = {config.ip.alpha!r}")
    lines.append(f"ip.kp = {config.ip.kp!r}")
    if config.ip.u_min is not None:
        lines.append(f"ip.u_min = {config.ip.u_min!r}")
    if config.ip.u_max is not None:
        lines.append(f"ip.u_max = {config.ip.u_max!r}")
    lines.append(f"est.window_samples = {config.est.window_samples}")
    lines.append(f"est.quadrature = {config.est.quadrature}")
    lines.append(f"sim.duration = {config.duration!r}")
    lines.append(f"sim.control_period = {config.control_period!r}")
    lines.append(f"sim.setpoint = {setpoint!r}")
    lines.append(f"sim.p_it = {config.initial_inputs.p_it!r}")
    lines.append(f"sim.t_out = {config.initial_inputs.t_out!r}")
    lines.append(f"sim.t_air_in = {config.initial_inputs.t_air_in!r}")
    if config.noise_std is not None:
        lines.append(f"sim.noise_std = {config.noise_std!r}")
    lines.append(f"sim.noise_seed = {config.noise_seed}")
    lines.append(f"sim.warmup_hold_input = {str(config.warmup_hold_input).lower()}")
    if config.initial_state == ThermalState.uniform(config.initial_inputs.t_out):
        lines.append("sim.cold_start = true")
    elif config.initial_state != equilibrium(config.params, config.initial_inputs):
        raise ValueError("initial state is neither the equilibrium nor a cold start; "
                         "not representable in config text")
    return "\n".join(lines) + "\n"
