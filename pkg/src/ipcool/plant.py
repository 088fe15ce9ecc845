"""Six-temperature linear thermal model of a small data center.

The state vector collects six zone temperatures (degrees Celsius), in this
fixed order:

    index 0  t_it        IT (server electronics) temperature
    index 1  t_rack      rack air temperature
    index 2  t_c_aisle   cold aisle air
    index 3  t_c_wall    cold aisle wall
    index 4  t_h_aisle   hot aisle air
    index 5  t_h_wall    hot aisle wall

External drives, in this fixed order: the CRAC supply air temperature
``t_air_in`` (the control input), the CPU load ``p_it`` in kW (a
disturbance) and the outdoor temperature ``t_out`` (a disturbance).

All twelve coupling coefficients are "per hour" (a11 carries degC per
kW.h).  The default coefficient set is implemented with its published
signs taken verbatim, including the negative a12; no sign is "repaired".
As a consequence the open-loop model has one slow unstable mode (about
+4.15/h) next to a very fast stable one (about -3.4e4/h) -- it is stiff,
and explicit integration at the control period is hopeless.  Production
propagation therefore uses the exact matrix-exponential discretization
(`discretize_zoh`); `rk4_step` exists as a fine-step validation oracle.
Stability is never assumed: measure it with `open_loop_spectrum`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.linalg import expm

N_STATES = 6
N_INPUTS = 3  # [t_air_in, p_it, t_out]

STATE_FIELDS = ("t_it", "t_rack", "t_c_aisle", "t_c_wall", "t_h_aisle", "t_h_wall")


class EquilibriumError(RuntimeError):
    """The model has no unique steady state for the requested inputs."""


class IntegrationError(RuntimeError):
    """An explicit integration step produced a non-finite state."""


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class ThermalState:
    """The six zone temperatures, degrees Celsius."""

    t_it: float
    t_rack: float
    t_c_aisle: float
    t_c_wall: float
    t_h_aisle: float
    t_h_wall: float

    def __post_init__(self) -> None:
        for f in fields(self):
            _require_finite(f"ThermalState.{f.name}", getattr(self, f.name))

    def as_array(self) -> np.ndarray:
        return np.array([self.t_it, self.t_rack, self.t_c_aisle,
                         self.t_c_wall, self.t_h_aisle, self.t_h_wall])

    @classmethod
    def from_array(cls, x) -> "ThermalState":
        x = np.asarray(x, dtype=float)
        if x.shape != (N_STATES,):
            raise ValueError(f"state vector must have shape ({N_STATES},), got {x.shape}")
        return cls(*(float(v) for v in x))

    @classmethod
    def uniform(cls, temp_c: float) -> "ThermalState":
        return cls(*(float(temp_c),) * N_STATES)


@dataclass(frozen=True)
class PlantInputs:
    """External drives: control input and the two disturbances."""

    t_air_in: float
    p_it: float
    t_out: float

    def __post_init__(self) -> None:
        for f in fields(self):
            _require_finite(f"PlantInputs.{f.name}", getattr(self, f.name))
        if self.p_it < 0.0:
            raise ValueError(f"p_it must be >= 0 kW, got {self.p_it}")

    def as_array(self) -> np.ndarray:
        return np.array([self.t_air_in, self.p_it, self.t_out])


@dataclass(frozen=True)
class ThermalParams:
    """The twelve coupling coefficients, per hour (a11: degC per kW.h).

    Defaults are the published working set, signs verbatim.
    """

    a11: float = 2.7248
    a12: float = -32.6975
    a21: float = 4.2997e3
    a22: float = 2.9632e4
    a31: float = 537.4670
    a32: float = 131.6406
    a41: float = 514.2857
    a42: float = 153.5354
    a51: float = 335.9169
    a52: float = 7.7166
    a61: float = 12.0
    a62: float = 9.6000

    def __post_init__(self) -> None:
        for f in fields(self):
            _require_finite(f"ThermalParams.{f.name}", getattr(self, f.name))


DEFAULT_PARAMS = ThermalParams()


@dataclass
class StateSpace:
    """Matrix form: dx/dt = a_matrix @ x + b_matrix @ [t_air_in, p_it, t_out]."""

    a_matrix: np.ndarray  # 6x6
    b_matrix: np.ndarray  # 6x3


def derivatives(state: ThermalState, inputs: PlantInputs,
                params: ThermalParams = DEFAULT_PARAMS) -> np.ndarray:
    """Right-hand side of the model, evaluated literally term by term.

    Returns the six temperature rates in degC/h, in state order.
    """
    p = params
    x = state
    v = inputs
    return np.array([
        p.a11 * v.p_it - p.a12 * (x.t_it - x.t_rack),
        p.a21 * (x.t_c_aisle - x.t_rack) + p.a22 * (x.t_it - x.t_rack),
        p.a31 * (v.t_air_in - x.t_c_aisle) + p.a32 * (x.t_c_aisle - x.t_c_wall),
        p.a41 * (v.t_out - x.t_c_wall) + p.a42 * (x.t_c_wall - x.t_c_aisle),
        p.a51 * (x.t_rack - x.t_h_aisle) + p.a52 * (x.t_h_aisle - x.t_h_wall),
        p.a61 * (v.t_out - x.t_h_wall) + p.a62 * (x.t_h_wall - x.t_h_aisle),
    ])


def build_state_space(params: ThermalParams = DEFAULT_PARAMS) -> StateSpace:
    """Collect the model coefficients into (A, B) matrices."""
    p = params
    a = np.zeros((N_STATES, N_STATES))
    b = np.zeros((N_STATES, N_INPUTS))

    a[0, 0] = -p.a12
    a[0, 1] = p.a12
    b[0, 1] = p.a11

    a[1, 0] = p.a22
    a[1, 1] = -(p.a21 + p.a22)
    a[1, 2] = p.a21

    a[2, 2] = -p.a31 + p.a32
    a[2, 3] = -p.a32
    b[2, 0] = p.a31

    a[3, 2] = -p.a42
    a[3, 3] = -p.a41 + p.a42
    b[3, 2] = p.a41

    a[4, 1] = p.a51
    a[4, 4] = -p.a51 + p.a52
    a[4, 5] = -p.a52

    a[5, 4] = -p.a62
    a[5, 5] = -p.a61 + p.a62
    b[5, 2] = p.a61

    return StateSpace(a_matrix=a, b_matrix=b)


def discretize_zoh(ss: StateSpace, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact one-period propagation matrices under zero-order hold.

    Computed from the matrix exponential of the augmented block matrix
    [[A, B], [0, 0]] * dt, so x(t+dt) = Ad @ x(t) + Bd @ v for inputs v
    held constant over the period.  Exact for any dt > 0, stiffness
    included.
    """
    if not (math.isfinite(dt) and dt > 0.0):
        raise ValueError(f"dt must be > 0, got {dt!r}")
    n, m = N_STATES, N_INPUTS
    block = np.zeros((n + m, n + m))
    block[:n, :n] = ss.a_matrix
    block[:n, n:] = ss.b_matrix
    exp_block = expm(block * dt)
    return exp_block[:n, :n].copy(), exp_block[:n, n:].copy()


def _rk4_array(x: np.ndarray, a: np.ndarray, bv: np.ndarray, dt: float) -> np.ndarray:
    k1 = a @ x + bv
    k2 = a @ (x + 0.5 * dt * k1) + bv
    k3 = a @ (x + 0.5 * dt * k2) + bv
    k4 = a @ (x + dt * k3) + bv
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step(state: ThermalState, inputs: PlantInputs, params: ThermalParams,
             dt: float) -> ThermalState:
    """One classical Runge-Kutta step with inputs held constant.

    Validation oracle only: the fast mode limits usable steps to roughly
    dt <= 1e-5 h on the default coefficients.
    """
    if not (math.isfinite(dt) and dt >= 0.0):
        raise ValueError(f"dt must be >= 0, got {dt!r}")
    ss = build_state_space(params)
    bv = ss.b_matrix @ inputs.as_array()
    x = _rk4_array(state.as_array(), ss.a_matrix, bv, dt)
    if not np.isfinite(x).all():
        raise IntegrationError(
            f"explicit step blew up at dt={dt!r} h; reduce the step size")
    return ThermalState.from_array(x)


def rk4_propagate(state: ThermalState, inputs: PlantInputs, params: ThermalParams,
                  dt: float, n_steps: int) -> ThermalState:
    """`n_steps` RK4 steps with constant inputs (array math throughout)."""
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    ss = build_state_space(params)
    bv = ss.b_matrix @ inputs.as_array()
    x = state.as_array()
    for _ in range(n_steps):
        x = _rk4_array(x, ss.a_matrix, bv, dt)
    if not np.isfinite(x).all():
        raise IntegrationError(
            f"explicit propagation blew up at dt={dt!r} h; reduce the step size")
    return ThermalState.from_array(x)


def equilibrium(params: ThermalParams, inputs: PlantInputs) -> ThermalState:
    """Steady state for constant inputs: solve A x = -B v.

    Raises EquilibriumError when A is singular (no unique steady state).
    """
    ss = build_state_space(params)
    rhs = -(ss.b_matrix @ inputs.as_array())
    try:
        x = np.linalg.solve(ss.a_matrix, rhs)
    except np.linalg.LinAlgError as exc:
        raise EquilibriumError(f"no unique equilibrium: {exc}") from exc
    residual = float(np.abs(ss.a_matrix @ x - rhs).max())
    if not np.isfinite(x).all() or residual > 1e-6 * (1.0 + float(np.abs(x).max())):
        raise EquilibriumError(
            f"no unique equilibrium: solve residual {residual:g} is too large")
    return ThermalState.from_array(x)


def apply_param_change(params: ThermalParams, multiplier: float) -> ThermalParams:
    """Scale the a21, a31 and a51 couplings; everything else untouched."""
    if not (math.isfinite(multiplier) and multiplier > 0.0):
        raise ValueError(f"multiplier must be finite and > 0, got {multiplier!r}")
    return replace(params,
                   a21=params.a21 * multiplier,
                   a31=params.a31 * multiplier,
                   a51=params.a51 * multiplier)


def trim_supply_air(params: ThermalParams, p_it: float, t_out: float,
                    y_target: float) -> float:
    """Supply air temperature whose steady state puts t_it at y_target.

    Uses the DC gains -A^-1 B; raises EquilibriumError when the control
    channel has no steady-state authority over t_it.
    """
    ss = build_state_space(params)
    try:
        dc = -np.linalg.solve(ss.a_matrix, ss.b_matrix)
    except np.linalg.LinAlgError as exc:
        raise EquilibriumError(f"no unique equilibrium: {exc}") from exc
    gain_u, gain_p, gain_t = dc[0]
    if abs(gain_u) < 1e-12:
        raise EquilibriumError("supply air has no steady-state effect on t_it")
    return float((y_target - gain_p * p_it - gain_t * t_out) / gain_u)


def open_loop_spectrum(params: ThermalParams = DEFAULT_PARAMS) -> np.ndarray:
    """Eigenvalues of A (per hour), sorted by real part, ascending."""
    eig = np.linalg.eigvals(build_state_space(params).a_matrix)
    return eig[np.argsort(eig.real)]
