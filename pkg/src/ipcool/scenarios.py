"""Built-in scenario builders, CSV load ingestion and a synthetic load.

Every builder returns a ready-to-run `SimConfig` that starts settled: the
initial supply air temperature is trimmed so the steady state sits exactly
on the setpoint, and the initial state is that steady state.  Disturbance
magnitudes (the 5 -> 10 kW CPU step, the 25 -> 32 degC outdoor step, the
20.9 -> 22.0 degC reference ramp over 30 min) are declared stand-ins.

The builders run the controller with ``alpha = -10``.  The magnitude
follows the classic tuning (|alpha * u| comparable to |dy/dt|), but the
sign is matched to this plant's measured control direction: with the
coefficient signs implemented verbatim, raising the supply air temperature
*lowers* the IT temperature over a sampling period (see
`plant.open_loop_spectrum` and the discussion in the README), and a
positive alpha turns the loop into positive feedback that diverges.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .controller import IpConfig, ReferenceTrajectory
from .defaults import CONTROL_PERIOD_H, KP, SETPOINT_C, WINDOW_SAMPLES
from .estimator import EstimatorConfig
from .plant import DEFAULT_PARAMS, PlantInputs, ThermalParams, equilibrium, trim_supply_air
from .simloop import (
    Event,
    EventSchedule,
    ScaleParams,
    SetPIt,
    SetTOut,
    SimConfig,
    SwitchReference,
)

# Sign matched to the plant's control direction, magnitude per the classic
# tuning; +10 is provably destabilizing here (see module docstring).
SCENARIO_ALPHA = -10.0

DEFAULT_P_IT_KW = 5.0
DEFAULT_T_OUT_C = 25.0


@dataclass(frozen=True)
class LoadTrace:
    """CPU load samples (t, p_it) with zero-order-hold evaluation."""

    samples: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.samples:
            raise ValueError("load trace must contain at least one sample")
        prev_t = None
        for t, p in self.samples:
            if not (math.isfinite(t) and math.isfinite(p)):
                raise ValueError(f"load sample ({t!r}, {p!r}) must be finite")
            if t < 0.0:
                raise ValueError(f"load sample time {t} must be >= 0")
            if p < 0.0:
                raise ValueError(f"load power {p} kW must be >= 0")
            if prev_t is not None and t < prev_t:
                raise ValueError(f"sample times must be non-decreasing ({t} < {prev_t})")
            prev_t = t

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.samples)

    def value_at(self, t: float) -> float:
        """Held value of the most recent sample at or before t."""
        idx = bisect_right(self.times, t) - 1
        return self.samples[max(idx, 0)][1]

    def end_time(self) -> float:
        return self.samples[-1][0]


def load_trace_from_csv(path) -> LoadTrace:
    """Parse a `t,p_it` CSV; `#` comment lines and one header row allowed."""
    samples: list[tuple[float, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise ValueError(
                    f"{path}:{line_no}: expected two comma-separated columns, "
                    f"got {len(parts)}")
            try:
                t, p = float(parts[0]), float(parts[1])
            except ValueError:
                if line_no == 1 and not samples:
                    continue  # header row
                raise ValueError(
                    f"{path}:{line_no}: could not parse row {line!r} as numbers"
                ) from None
            samples.append((t, p))
    if not samples:
        raise ValueError(f"{path}: no load samples found")
    try:
        return LoadTrace(tuple(samples))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def write_load_csv(load: LoadTrace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,p_it\n")
        for t, p in load.samples:
            fh.write(f"{t!r},{p!r}\n")


def synth_load(seed: int, mean_kw: float = DEFAULT_P_IT_KW,
               burst_amplitude: float = 2.5, duration: float = 6.0,
               period: float = CONTROL_PERIOD_H) -> LoadTrace:
    """Seeded bounded random walk with occasional fixed-height bursts.

    The walk is reflected into [0.75, 1.25] * mean_kw; bursts arrive
    roughly twice an hour and last 5..14 samples.  Power never goes
    negative.  Identical seeds give identical traces.
    """
    if not (math.isfinite(mean_kw) and mean_kw > 0.0):
        raise ValueError(f"mean_kw must be > 0, got {mean_kw!r}")
    if burst_amplitude < 0.0:
        raise ValueError(f"burst_amplitude must be >= 0, got {burst_amplitude!r}")
    if not (math.isfinite(duration) and duration > 0.0):
        raise ValueError(f"duration must be > 0, got {duration!r}")
    rng = np.random.default_rng(seed)
    lo, hi = 0.75 * mean_kw, 1.25 * mean_kw
    step_std = 0.02 * mean_kw
    burst_prob = period / 2.0  # about one burst start per half hour
    n = int(round(duration / period))
    level = mean_kw
    burst_left = 0
    samples = []
    for k in range(n + 1):
        level += float(rng.normal(0.0, step_std))
        if level > hi:
            level = 2.0 * hi - level
        if level < lo:
            level = 2.0 * lo - level
        level = min(max(level, lo), hi)
        if burst_left == 0 and rng.random() < burst_prob:
            burst_left = int(rng.integers(5, 15))
        bump = burst_amplitude if burst_left > 0 else 0.0
        burst_left = max(burst_left - 1, 0)
        samples.append((k * period, max(level + bump, 0.0)))
    return LoadTrace(tuple(samples))


def _base_config(duration: float, p_it: float, t_out: float, *,
                 params: ThermalParams = DEFAULT_PARAMS,
                 setpoint: float = SETPOINT_C,
                 events=(),
                 alpha: float = SCENARIO_ALPHA,
                 kp: float = KP,
                 window_samples: int = WINDOW_SAMPLES,
                 noise_std: float | None = None,
                 noise_seed: int = 0) -> SimConfig:
    """Settled starting point: trimmed input, equilibrium state."""
    u0 = trim_supply_air(params, p_it, t_out, setpoint)
    inputs = PlantInputs(t_air_in=u0, p_it=p_it, t_out=t_out)
    return SimConfig(
        duration=duration,
        initial_state=equilibrium(params, inputs),
        initial_inputs=inputs,
        params=params,
        ip=IpConfig(alpha=alpha, kp=kp),
        est=EstimatorConfig(alpha=alpha, window_samples=window_samples),
        traj=ReferenceTrajectory.constant(setpoint),
        events=EventSchedule(events),
        noise_std=noise_std,
        noise_seed=noise_seed,
    )


def scenario_hold(duration: float = 2.0, base_kw: float = DEFAULT_P_IT_KW,
                  t_out: float = DEFAULT_T_OUT_C) -> SimConfig:
    """No events: hold the setpoint from a settled start."""
    return _base_config(duration, base_kw, t_out)


def scenario_sudden_cpu(base_kw: float = DEFAULT_P_IT_KW, step_kw: float = 10.0,
                        step_time: float = 1.0, duration: float = 6.0,
                        t_out: float = DEFAULT_T_OUT_C) -> SimConfig:
    """One step change of the CPU load, outdoor temperature constant."""
    if base_kw < 0.0 or step_kw < 0.0:
        raise ValueError("CPU load levels must be >= 0 kW")
    if not 0.0 <= step_time <= duration:
        raise ValueError(
            f"step_time {step_time} lies outside the run duration {duration}")
    events = [Event(step_time, SetPIt(step_kw))]
    return _base_config(duration, base_kw, t_out, events=events)


def scenario_sudden_tout(base_c: float = DEFAULT_T_OUT_C, step_c: float = 32.0,
                         step_time: float = 1.0, duration: float = 6.0,
                         p_it: float = DEFAULT_P_IT_KW) -> SimConfig:
    """One step change of the outdoor temperature, CPU load constant."""
    if not 0.0 <= step_time <= duration:
        raise ValueError(
            f"step_time {step_time} lies outside the run duration {duration}")
    events = [Event(step_time, SetTOut(step_c))]
    return _base_config(duration, p_it, base_c, events=events)


def standin_reference() -> ReferenceTrajectory:
    """Hold 20.9, ramp to 22.0 degC over 30 min starting at t = 1 h, hold."""
    return ReferenceTrajectory.hold_ramp_hold(SETPOINT_C, 1.0, 0.5, 22.0)


def scenario_reference_change(traj: ReferenceTrajectory | None = None,
                              duration: float = 6.0,
                              p_it: float = DEFAULT_P_IT_KW,
                              t_out: float = DEFAULT_T_OUT_C) -> SimConfig:
    """Track a non-constant reference; both disturbances held constant."""
    if traj is None:
        traj = standin_reference()
    events = [Event(0.0, SwitchReference(traj))]
    return _base_config(duration, p_it, t_out, events=events)


def scenario_param_change(multiplier: float, change_time: float = 2.7,
                          duration: float = 7.0,
                          p_it: float = DEFAULT_P_IT_KW,
                          t_out: float = DEFAULT_T_OUT_C) -> SimConfig:
    """Scale the a21/a31/a51 couplings mid-run; inputs stay constant."""
    if not (math.isfinite(multiplier) and multiplier > 0.0):
        raise ValueError(f"multiplier must be > 0, got {multiplier!r}")
    if not 0.0 <= change_time <= duration:
        raise ValueError(
            f"change_time {change_time} lies outside the run duration {duration}")
    events = [Event(change_time, ScaleParams(multiplier))]
    return _base_config(duration, p_it, t_out, events=events)


def load_events(load: LoadTrace, duration: float) -> list[Event]:
    """Load-step events for samples in (0, duration]; duplicate times: last wins."""
    events: list[Event] = []
    last_time = None
    for t, p in load.samples:
        if t <= 0.0 or t > duration:
            continue
        if last_time is not None and t == last_time:
            events[-1] = Event(t, SetPIt(p))
        else:
            events.append(Event(t, SetPIt(p)))
        last_time = t
    return events


def scenario_load_trace(load: LoadTrace, duration: float | None = None,
                        t_out: float = DEFAULT_T_OUT_C) -> SimConfig:
    """Drive the CPU load from a sampled trace (held between samples)."""
    if duration is None:
        duration = math.floor(load.end_time() / CONTROL_PERIOD_H) * CONTROL_PERIOD_H
    if duration < CONTROL_PERIOD_H:
        raise ValueError("load trace must cover at least one control period")
    return _base_config(duration, load.value_at(0.0), t_out,
                        events=load_events(load, duration))
