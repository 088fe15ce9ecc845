"""Online estimation of the lumped drift term of the control model.

The controller works against the first-order input/output model
``dy/dt = F + alpha * u`` in which F lumps every unmodeled effect.  F is
recovered from the last few (y, u) samples by a weighted integral over the
window [t - tau, t] (sigma below is window-local time, 0 at the oldest
sample, tau at the newest):

    F_hat = -(6 / tau^3) * integral( (tau - 2*sigma) * y(sigma)
                                     + alpha * sigma*(tau - sigma) * u(sigma) )

The output kernel (tau - 2*sigma) integrates to zero, so constant offsets
in y drop out and an affine y contributes exactly its slope; the parabolic
input kernel averages u with midpoint emphasis.  Both integrals are
evaluated by composite quadrature on the uniformly spaced samples.
Simpson's rule (the default) reproduces the affine-y and constant-u cases
to machine precision because the kernel/signal products are cubics at
most; the plain trapezoid rule is available for its textbook second-order
convergence behaviour.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .defaults import ALPHA, CONTROL_PERIOD_H, WINDOW_SAMPLES

QUADRATURE_RULES = ("simpson", "trapezoid")


class EstimatorWarmingUp(RuntimeError):
    """The sample window is not full yet; callers substitute F_hat = 0."""


class SampleWindow:
    """Fixed-capacity ring buffer of (y, u) pairs at uniform spacing.

    Single writer; oldest-first iteration.  Once full, each push evicts
    the oldest pair.
    """

    def __init__(self, capacity: int):
        if capacity < 3:
            raise ValueError(f"window capacity must be >= 3, got {capacity}")
        self.capacity = int(capacity)
        self._y: deque[float] = deque(maxlen=self.capacity)
        self._u: deque[float] = deque(maxlen=self.capacity)

    @property
    def fill_count(self) -> int:
        return len(self._y)

    @property
    def is_full(self) -> bool:
        return len(self._y) == self.capacity

    def push(self, y: float, u: float) -> None:
        if not (math.isfinite(y) and math.isfinite(u)):
            raise ValueError(f"samples must be finite, got y={y!r}, u={u!r}")
        self._y.append(float(y))
        self._u.append(float(u))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Current contents, oldest first."""
        return np.array(self._y), np.array(self._u)

    def __len__(self) -> int:
        return len(self._y)

    def __iter__(self):
        return iter(zip(self._y, self._u))


@dataclass(frozen=True)
class EstimatorConfig:
    alpha: float = ALPHA
    window_samples: int = WINDOW_SAMPLES
    sample_interval: float = CONTROL_PERIOD_H
    quadrature: str = "simpson"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha != 0.0):
            raise ValueError(f"alpha must be finite and nonzero, got {self.alpha!r}")
        if self.window_samples < 3:
            raise ValueError(f"window_samples must be >= 3, got {self.window_samples}")
        if not (math.isfinite(self.sample_interval) and self.sample_interval > 0.0):
            raise ValueError(
                f"sample_interval must be > 0, got {self.sample_interval!r}")
        if self.quadrature not in QUADRATURE_RULES:
            raise ValueError(
                f"quadrature must be one of {QUADRATURE_RULES}, got {self.quadrature!r}")
        if self.quadrature == "simpson" and self.window_samples % 2 == 0:
            raise ValueError(
                "simpson quadrature needs an odd sample count "
                f"(even interval count), got {self.window_samples}")


def quadrature_weights(n: int, h: float, rule: str) -> np.ndarray:
    """Composite quadrature weights for n uniform samples spaced h apart."""
    if n < 2:
        raise ValueError("need at least two samples to integrate")
    if rule == "trapezoid":
        w = np.full(n, h)
        w[0] = w[-1] = 0.5 * h
        return w
    if rule == "simpson":
        if n % 2 == 0:
            raise ValueError("simpson rule needs an odd sample count")
        w = np.empty(n)
        w[0] = w[-1] = h / 3.0
        w[1:-1:2] = 4.0 * h / 3.0
        w[2:-1:2] = 2.0 * h / 3.0
        return w
    raise ValueError(f"unknown quadrature rule {rule!r}")


def estimate_f(window: SampleWindow, config: EstimatorConfig) -> float:
    """Evaluate the windowed drift estimate from a full sample window."""
    if not window.is_full:
        raise EstimatorWarmingUp(
            f"estimator warming up: {window.fill_count}/{window.capacity} samples")
    y, u = window.arrays()
    n = window.capacity
    h = config.sample_interval
    tau = (n - 1) * h
    sigma = np.arange(n) * h
    weights = quadrature_weights(n, h, config.quadrature)
    integrand = (tau - 2.0 * sigma) * y + config.alpha * sigma * (tau - sigma) * u
    return float(-6.0 / tau**3 * np.dot(weights, integrand))
