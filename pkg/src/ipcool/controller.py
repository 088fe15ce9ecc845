"""Intelligent proportional (iP) control law and reference trajectories.

The law is ``u = -(f_hat - y_star_dot + kp * e) / alpha``: the current
drift estimate is cancelled, the reference slope is fed forward, and the
residual tracking error decays at rate kp.  There is no integrator state;
actuator clamping is stateless and needs no anti-windup.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

from .defaults import ALPHA, KP


@dataclass(frozen=True)
class IpConfig:
    alpha: float = ALPHA
    kp: float = KP
    u_min: float | None = None
    u_max: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha != 0.0):
            raise ValueError(f"alpha must be finite and nonzero, got {self.alpha!r}")
        # kp > 0 is the closed-loop stability requirement.
        if not (math.isfinite(self.kp) and self.kp > 0.0):
            raise ValueError(f"kp must be > 0, got {self.kp!r}")
        for name in ("u_min", "u_max"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.u_min is not None and self.u_max is not None and not self.u_min < self.u_max:
            raise ValueError(f"u_min must be < u_max, got {self.u_min} >= {self.u_max}")


@dataclass(frozen=True)
class Segment:
    """One reference segment starting at `start`: a hold or a ramp.

    `level` is the reference value at the segment start; a ramp adds
    `slope * (t - start)`.  Step changes carry no slope feedforward: the
    new segment simply starts at a different level.
    """

    start: float
    kind: str  # "hold" | "ramp"
    level: float
    slope: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("hold", "ramp"):
            raise ValueError(f"segment kind must be 'hold' or 'ramp', got {self.kind!r}")
        for name in ("start", "level", "slope"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Segment.{name} must be finite")
        if self.start < 0.0:
            raise ValueError(f"segment start must be >= 0, got {self.start}")
        if self.kind == "hold" and self.slope != 0.0:
            raise ValueError("hold segments have zero slope")


class ReferenceTrajectory:
    """Piecewise hold/ramp reference covering [0, inf).

    Segments are ordered by strictly increasing start time, the first at
    t = 0; each one governs until the next begins (the last one forever).
    At a boundary the right-hand segment governs.
    """

    def __init__(self, segments):
        segments = tuple(segments)
        if not segments:
            raise ValueError("trajectory needs at least one segment")
        if segments[0].start != 0.0:
            raise ValueError("first segment must start at t = 0")
        starts = [s.start for s in segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment start times must be strictly increasing")
        self.segments = segments
        self._starts = starts

    @classmethod
    def constant(cls, level: float) -> "ReferenceTrajectory":
        return cls([Segment(0.0, "hold", level)])

    @classmethod
    def hold_ramp_hold(cls, level: float, ramp_start: float, ramp_duration: float,
                       target: float) -> "ReferenceTrajectory":
        """Hold `level`, ramp linearly to `target`, then hold `target`."""
        if ramp_duration <= 0.0:
            raise ValueError("ramp_duration must be > 0")
        slope = (target - level) / ramp_duration
        return cls([
            Segment(0.0, "hold", level),
            Segment(ramp_start, "ramp", level, slope),
            Segment(ramp_start + ramp_duration, "hold", target),
        ])

    def __eq__(self, other) -> bool:
        return isinstance(other, ReferenceTrajectory) and self.segments == other.segments

    def __repr__(self) -> str:
        return f"ReferenceTrajectory({list(self.segments)!r})"


def reference_eval(traj: ReferenceTrajectory, t: float) -> tuple[float, float]:
    """Reference value and slope at time t (right-continuous at boundaries)."""
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    seg = traj.segments[bisect_right(traj._starts, t) - 1]
    if seg.kind == "hold":
        return seg.level, 0.0
    return seg.level + seg.slope * (t - seg.start), seg.slope


def ip_control(f_hat: float, y_star_dot: float, e: float,
               config: IpConfig) -> tuple[float, bool]:
    """Control value and whether actuator limits clamped it."""
    u = -(f_hat - y_star_dot + config.kp * e) / config.alpha
    clamped = False
    if config.u_min is not None and u < config.u_min:
        u, clamped = config.u_min, True
    elif config.u_max is not None and u > config.u_max:
        u, clamped = config.u_max, True
    return u, clamped
