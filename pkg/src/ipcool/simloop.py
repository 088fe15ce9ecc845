"""Closed-loop driver: sample, estimate, control, propagate, record.

Per control instant the loop measures the output (optionally noise
corrupted), pushes (y, previous u) into the estimator window, evaluates
the reference, computes the control and propagates the plant exactly one
period under zero-order hold.  Scheduled events take effect at the first
control instant at or after their time, before that instant's control
computation; a coefficient-scaling event triggers a re-discretization.

Until the estimator window fills, the recorded drift estimate is zero and
the loop by default holds the previous actuator value (a bumpless start).
Setting ``warmup_hold_input=False`` instead applies the control law with
the zero estimate from the first step, which yanks the actuator hard and
produces a large startup excursion on this plant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .controller import IpConfig, ReferenceTrajectory, ip_control, reference_eval
from .defaults import CONTROL_PERIOD_H, SETPOINT_C
from .estimator import EstimatorConfig, SampleWindow, estimate_f
from .plant import (
    PlantInputs,
    StateSpace,
    ThermalParams,
    ThermalState,
    apply_param_change,
    build_state_space,
    discretize_zoh,
)


class DivergenceError(RuntimeError):
    """The simulated state became non-finite."""

    def __init__(self, step: int, t: float):
        super().__init__(f"state diverged (non-finite) at step {step}, t = {t:g} h")
        self.step = step
        self.t = t


@dataclass(frozen=True)
class SetPIt:
    """Step the CPU load disturbance to `kw`."""

    kw: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kw) and self.kw >= 0.0):
            raise ValueError(f"p_it must be finite and >= 0, got {self.kw!r}")


@dataclass(frozen=True)
class SetTOut:
    """Step the outdoor temperature disturbance to `celsius`."""

    celsius: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.celsius):
            raise ValueError(f"t_out must be finite, got {self.celsius!r}")


@dataclass(frozen=True)
class ScaleParams:
    """Scale the a21/a31/a51 couplings by `multiplier` from now on."""

    multiplier: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.multiplier) and self.multiplier > 0.0):
            raise ValueError(f"multiplier must be > 0, got {self.multiplier!r}")


@dataclass(frozen=True)
class SwitchReference:
    """Replace the active reference trajectory."""

    trajectory: ReferenceTrajectory


EventAction = Union[SetPIt, SetTOut, ScaleParams, SwitchReference]


@dataclass(frozen=True)
class Event:
    time: float
    action: EventAction

    def __post_init__(self) -> None:
        if not (math.isfinite(self.time) and self.time >= 0.0):
            raise ValueError(f"event time must be finite and >= 0, got {self.time!r}")


class EventSchedule:
    """Ordered event list; times strictly increasing."""

    def __init__(self, events=()):
        events = tuple(events)
        times = [ev.time for ev in events]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("event times must be strictly increasing")
        self.events = events

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __eq__(self, other) -> bool:
        return isinstance(other, EventSchedule) and self.events == other.events

    def __repr__(self) -> str:
        return f"EventSchedule({list(self.events)!r})"


@dataclass(frozen=True)
class SimConfig:
    duration: float
    initial_state: ThermalState
    initial_inputs: PlantInputs
    params: ThermalParams = field(default_factory=ThermalParams)
    ip: IpConfig = field(default_factory=IpConfig)
    est: EstimatorConfig = field(default_factory=EstimatorConfig)
    traj: ReferenceTrajectory = field(
        default_factory=lambda: ReferenceTrajectory.constant(SETPOINT_C))
    events: EventSchedule = field(default_factory=EventSchedule)
    control_period: float = CONTROL_PERIOD_H
    noise_std: float | None = None
    noise_seed: int = 0
    warmup_hold_input: bool = True

    def __post_init__(self) -> None:
        if not (math.isfinite(self.duration) and self.duration > 0.0):
            raise ValueError(f"duration must be > 0, got {self.duration!r}")
        if not (math.isfinite(self.control_period) and self.control_period > 0.0):
            raise ValueError(f"control_period must be > 0, got {self.control_period!r}")
        ratio = self.duration / self.control_period
        if abs(ratio - round(ratio)) > 1e-6:
            raise ValueError(
                f"duration must be an integer number of control periods, "
                f"got duration/control_period = {ratio!r}")
        if round(ratio) < 1:
            raise ValueError("duration must cover at least one control period")
        if abs(self.est.sample_interval - self.control_period) > 1e-9 * self.control_period:
            raise ValueError(
                "estimator sample_interval must equal the control period "
                f"({self.est.sample_interval!r} != {self.control_period!r})")
        if self.est.alpha != self.ip.alpha:
            raise ValueError(
                f"controller and estimator must share alpha "
                f"({self.ip.alpha!r} != {self.est.alpha!r})")
        if self.noise_std is not None and not (math.isfinite(self.noise_std)
                                               and self.noise_std >= 0.0):
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std!r}")
        for ev in self.events:
            if ev.time > self.duration:
                raise ValueError(
                    f"event at t = {ev.time} lies beyond duration {self.duration}")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.control_period))


@dataclass
class SimTrace:
    """Per-control-step record of one run; row k is control instant k.

    Arrays all have n_steps + 1 rows.  `u`, `p_it` and `t_out` at row k are
    the inputs applied over [t_k, t_k + period); the last row repeats the
    final applied values.  `e` is y - y_star, recomputable per row.
    """

    t: np.ndarray
    y: np.ndarray
    u: np.ndarray
    f_hat: np.ndarray
    e: np.ndarray
    y_star: np.ndarray
    states: np.ndarray  # (rows, 6) in state order
    p_it: np.ndarray
    t_out: np.ndarray
    warming_up: np.ndarray  # bool
    clamped: np.ndarray  # bool

    @property
    def rows(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class TraceMetrics:
    """Summary numbers; settling fields are None when never certified."""

    rms_error: float
    max_abs_error_after_settle: float | None
    settling_time: float | None
    control_effort: float


def _event_step(time: float, period: float) -> int:
    """First control step at or after `time` (tolerant to float fuzz)."""
    return max(0, math.ceil(time / period - 1e-9))


class _ZohPlant:
    """Holds the active coefficients and their one-period discretization."""

    def __init__(self, params: ThermalParams, period: float):
        self.period = period
        self.set_params(params)

    def set_params(self, params: ThermalParams) -> None:
        self.params = params
        ss: StateSpace = build_state_space(params)
        self.ad, self.bd = discretize_zoh(ss, self.period)

    def scale(self, multiplier: float) -> None:
        self.set_params(apply_param_change(self.params, multiplier))

    def step(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        # Divergence is detected by the caller; silence overflow noise here.
        with np.errstate(over="ignore", invalid="ignore"):
            return self.ad @ x + self.bd @ v


def _alloc(rows: int) -> SimTrace:
    return SimTrace(
        t=np.zeros(rows), y=np.zeros(rows), u=np.zeros(rows),
        f_hat=np.zeros(rows), e=np.zeros(rows), y_star=np.zeros(rows),
        states=np.zeros((rows, 6)), p_it=np.zeros(rows), t_out=np.zeros(rows),
        warming_up=np.zeros(rows, dtype=bool), clamped=np.zeros(rows, dtype=bool),
    )


def run_closed_loop(config: SimConfig) -> SimTrace:
    """Run the full loop and return its trace.

    Raises DivergenceError (with the step index) if the state ever turns
    non-finite.
    """
    n = config.n_steps
    period = config.control_period
    plant = _ZohPlant(config.params, period)
    window = SampleWindow(config.est.window_samples)
    traj = config.traj
    rng = np.random.default_rng(config.noise_seed) if config.noise_std else None

    x = config.initial_state.as_array()
    u_prev = config.initial_inputs.t_air_in
    p_it = config.initial_inputs.p_it
    t_out = config.initial_inputs.t_out

    pending = list(config.events)
    pending_steps = [_event_step(ev.time, period) for ev in pending]
    next_ev = 0

    trace = _alloc(n + 1)
    for k in range(n + 1):
        t = k * period

        while next_ev < len(pending) and pending_steps[next_ev] <= k:
            action = pending[next_ev].action
            if isinstance(action, SetPIt):
                p_it = action.kw
            elif isinstance(action, SetTOut):
                t_out = action.celsius
            elif isinstance(action, ScaleParams):
                plant.scale(action.multiplier)
            elif isinstance(action, SwitchReference):
                traj = action.trajectory
            next_ev += 1

        if not np.isfinite(x).all():
            raise DivergenceError(k, t)

        y = float(x[0])
        if rng is not None:
            y += float(rng.normal(0.0, config.noise_std))

        window.push(y, u_prev)
        y_star, y_star_dot = reference_eval(traj, t)
        e = y - y_star

        if window.is_full:
            # On the way to detected divergence the samples can overflow
            # the estimate; the finiteness check above owns that path.
            with np.errstate(over="ignore", invalid="ignore"):
                f_hat = estimate_f(window, config.est)
            warming = False
            u, clamped = ip_control(f_hat, y_star_dot, e, config.ip)
        else:
            f_hat = 0.0
            warming = True
            if config.warmup_hold_input:
                u, clamped = u_prev, False
            else:
                u, clamped = ip_control(f_hat, y_star_dot, e, config.ip)

        trace.t[k] = t
        trace.y[k] = y
        trace.u[k] = u
        trace.f_hat[k] = f_hat
        trace.e[k] = e
        trace.y_star[k] = y_star
        trace.states[k] = x
        trace.p_it[k] = p_it
        trace.t_out[k] = t_out
        trace.warming_up[k] = warming
        trace.clamped[k] = clamped

        if k < n:
            x = plant.step(x, np.array([u, p_it, t_out]))
            u_prev = u

    return trace


def run_open_loop(config: SimConfig, u_signal) -> SimTrace:
    """Propagate under a prescribed per-step input, controller bypassed.

    `u_signal` supplies the input for each of the n_steps hold intervals.
    Events still apply; the estimator does not run (f_hat is zero).
    """
    n = config.n_steps
    u_signal = [float(u) for u in u_signal]
    if len(u_signal) != n:
        raise ValueError(
            f"u_signal must have one entry per step ({n}), got {len(u_signal)}")
    period = config.control_period
    plant = _ZohPlant(config.params, period)
    traj = config.traj

    x = config.initial_state.as_array()
    p_it = config.initial_inputs.p_it
    t_out = config.initial_inputs.t_out

    pending = list(config.events)
    pending_steps = [_event_step(ev.time, period) for ev in pending]
    next_ev = 0

    trace = _alloc(n + 1)
    for k in range(n + 1):
        t = k * period
        while next_ev < len(pending) and pending_steps[next_ev] <= k:
            action = pending[next_ev].action
            if isinstance(action, SetPIt):
                p_it = action.kw
            elif isinstance(action, SetTOut):
                t_out = action.celsius
            elif isinstance(action, ScaleParams):
                plant.scale(action.multiplier)
            elif isinstance(action, SwitchReference):
                traj = action.trajectory
            next_ev += 1

        if not np.isfinite(x).all():
            raise DivergenceError(k, t)

        u = u_signal[k] if k < n else u_signal[-1]
        y = float(x[0])
        y_star, _ = reference_eval(traj, t)

        trace.t[k] = t
        trace.y[k] = y
        trace.u[k] = u
        trace.e[k] = y - y_star
        trace.y_star[k] = y_star
        trace.states[k] = x
        trace.p_it[k] = p_it
        trace.t_out[k] = t_out

        if k < n:
            x = plant.step(x, np.array([u, p_it, t_out]))

    return trace


def metrics(trace: SimTrace, settle_band: float, settle_window: float) -> TraceMetrics:
    """Tracking summary for a trace.

    Settling time is the first instant from which |e| stays within
    `settle_band` for at least `settle_window` time units; it can only be
    certified while a full window of data remains, so short traces may
    report None even if the tail is in band.  Control effort is the sum
    of |u_k - u_{k-1}| over the trace.
    """
    if not (math.isfinite(settle_band) and settle_band > 0.0):
        raise ValueError(f"settle_band must be > 0, got {settle_band!r}")
    if not (math.isfinite(settle_window) and settle_window >= 0.0):
        raise ValueError(f"settle_window must be >= 0, got {settle_window!r}")

    abs_e = np.abs(trace.e)
    rms = float(np.sqrt(np.mean(trace.e**2)))
    effort = float(np.sum(np.abs(np.diff(trace.u))))

    in_band = abs_e <= settle_band
    # next_bad[k] = index of the first out-of-band row at or after k.
    rows = trace.rows
    next_bad = np.full(rows + 1, rows)
    for k in range(rows - 1, -1, -1):
        next_bad[k] = k if not in_band[k] else next_bad[k + 1]

    t_end = trace.t[-1]
    settling_time = None
    for k in range(rows):
        horizon = trace.t[k] + settle_window
        if horizon > t_end + 1e-12:
            break  # cannot certify a full window beyond the data
        # last row inside [t_k, t_k + window]
        j = int(np.searchsorted(trace.t, horizon + 1e-12, side="right")) - 1
        if next_bad[k] > j:
            settling_time = float(trace.t[k])
            break

    max_after = None
    if settling_time is not None:
        mask = trace.t >= settling_time
        max_after = float(abs_e[mask].max())

    return TraceMetrics(
        rms_error=rms,
        max_abs_error_after_settle=max_after,
        settling_time=settling_time,
        control_effort=effort,
    )
