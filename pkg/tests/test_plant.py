from __future__ import annotations

import math

import numpy as np
import pytest

from ipcool.plant import (
    DEFAULT_PARAMS,
    EquilibriumError,
    PlantInputs,
    ThermalParams,
    ThermalState,
    apply_param_change,
    build_state_space,
    derivatives,
    discretize_zoh,
    equilibrium,
    open_loop_spectrum,
    rk4_propagate,
    rk4_step,
    trim_supply_air,
)

# ---------------------------------------------------------------------------
# Independent oracle: (A, B) assembled directly from the published numbers,
# written out coefficient by coefficient with no reference to the package.
# ---------------------------------------------------------------------------

ORACLE_A = np.array([
    [32.6975, -32.6975, 0.0, 0.0, 0.0, 0.0],
    [2.9632e4, -(4.2997e3 + 2.9632e4), 4.2997e3, 0.0, 0.0, 0.0],
    [0.0, 0.0, -537.4670 + 131.6406, -131.6406, 0.0, 0.0],
    [0.0, 0.0, -153.5354, -514.2857 + 153.5354, 0.0, 0.0],
    [0.0, 335.9169, 0.0, 0.0, -335.9169 + 7.7166, -7.7166],
    [0.0, 0.0, 0.0, 0.0, -9.6, -12.0 + 9.6],
])
ORACLE_B = np.array([
    [0.0, 2.7248, 0.0],
    [0.0, 0.0, 0.0],
    [537.4670, 0.0, 0.0],
    [0.0, 0.0, 514.2857],
    [0.0, 0.0, 0.0],
    [0.0, 0.0, 12.0],
])

# Frozen from the oracle: ORACLE_A @ (1..6) + ORACLE_B @ (7, 8, 9).
DERIV_AT_123456_789 = np.array(
    [-10.8991, -25332.3, 2018.2274, 2724.9639, -1015.4673, 45.6])


def gaussian_elimination(a, b):
    """Plain partial-pivot elimination; independent of numpy.linalg."""
    a = [list(map(float, row)) for row in a]
    b = list(map(float, b))
    n = len(b)
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(a[r][col]))
        if abs(a[pivot][col]) == 0.0:
            raise ZeroDivisionError("singular matrix")
        a[col], a[pivot] = a[pivot], a[col]
        b[col], b[pivot] = b[pivot], b[col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            for c in range(col, n):
                a[r][c] -= f * a[col][c]
            b[r] -= f * b[col]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        s = b[r] - sum(a[r][c] * x[c] for c in range(r + 1, n))
        x[r] = s / a[r][r]
    return np.array(x)


def rk4_oracle(x, a, b, v, dt, n_steps):
    """Hand-rolled fixed-step integrator, independent of the package."""
    bv = b @ v
    for _ in range(n_steps):
        k1 = a @ x + bv
        k2 = a @ (x + 0.5 * dt * k1) + bv
        k3 = a @ (x + 0.5 * dt * k2) + bv
        k4 = a @ (x + dt * k3) + bv
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("temp", [0.0, 20.9, -5.0, 100.0])
def test_uniform_temperature_is_an_equilibrium(temp):
    state = ThermalState.uniform(temp)
    inputs = PlantInputs(t_air_in=temp, p_it=0.0, t_out=temp)
    assert derivatives(state, inputs, DEFAULT_PARAMS) == pytest.approx([0.0] * 6, abs=0.0)


def test_unit_power_only_drives_t_it():
    state = ThermalState.uniform(0.0)
    inputs = PlantInputs(t_air_in=0.0, p_it=1.0, t_out=0.0)
    dx = derivatives(state, inputs, DEFAULT_PARAMS)
    assert dx[0] == pytest.approx(2.7248, rel=1e-15)
    assert dx[1:] == pytest.approx([0.0] * 5, abs=0.0)


def test_derivatives_match_hand_built_matrix_oracle():
    state = ThermalState(1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
    inputs = PlantInputs(7.0, 8.0, 9.0)
    dx = derivatives(state, inputs, DEFAULT_PARAMS)
    oracle = ORACLE_A @ state.as_array() + ORACLE_B @ inputs.as_array()
    assert dx == pytest.approx(oracle, rel=1e-13)
    assert dx == pytest.approx(DERIV_AT_123456_789, rel=1e-10)


def test_derivatives_reject_non_finite_input():
    with pytest.raises(ValueError):
        ThermalState(float("nan"), 0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        PlantInputs(t_air_in=float("inf"), p_it=0.0, t_out=0.0)
    with pytest.raises(ValueError):
        PlantInputs(t_air_in=0.0, p_it=-1.0, t_out=0.0)


# ---------------------------------------------------------------------------
# build_state_space
# ---------------------------------------------------------------------------

def test_state_space_carries_the_verbatim_sign():
    ss = build_state_space(DEFAULT_PARAMS)
    # -a12 with the published negative a12: the self-coupling is positive.
    assert ss.a_matrix[0, 0] == pytest.approx(32.6975, rel=1e-15)
    assert np.array_equal(ss.a_matrix, ORACLE_A)
    assert np.array_equal(ss.b_matrix, ORACLE_B)


def test_zero_params_give_zero_matrices():
    zero = ThermalParams(*([0.0] * 12))
    ss = build_state_space(zero)
    assert not ss.a_matrix.any()
    assert not ss.b_matrix.any()


def test_state_space_reproduces_derivatives_on_random_points():
    rng = np.random.default_rng(42)
    params = ThermalParams(*rng.uniform(-10.0, 10.0, size=12))
    ss = build_state_space(params)
    for _ in range(100):
        x = rng.uniform(-50.0, 50.0, size=6)
        v = rng.uniform(0.0, 50.0, size=3)
        direct = derivatives(ThermalState.from_array(x), PlantInputs(*v), params)
        matrix = ss.a_matrix @ x + ss.b_matrix @ v
        scale = max(1.0, float(np.abs(direct).max()))
        assert np.abs(direct - matrix).max() <= 1e-12 * scale


def test_state_space_superposition_is_exact():
    ss = build_state_space(DEFAULT_PARAMS)
    rng = np.random.default_rng(7)
    for _ in range(20):
        x1, x2 = rng.normal(size=6), rng.normal(size=6)
        v1, v2 = rng.normal(size=3), rng.normal(size=3)
        lhs = ss.a_matrix @ (x1 + x2) + ss.b_matrix @ (v1 + v2)
        rhs = (ss.a_matrix @ x1 + ss.b_matrix @ v1) + (ss.a_matrix @ x2 + ss.b_matrix @ v2)
        assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, float(np.abs(lhs).max()))


# ---------------------------------------------------------------------------
# discretize_zoh
# ---------------------------------------------------------------------------

def test_zoh_tiny_step_approaches_identity():
    # First-order deviation is |A| * dt (about 3.4e4/h here), so the step
    # must be well below 1e-13 h for a 1e-9 bound.
    ss = build_state_space(DEFAULT_PARAMS)
    ad, bd = discretize_zoh(ss, 1e-14)
    assert np.abs(ad - np.eye(6)).max() < 1e-9
    assert np.abs(bd).max() < 1e-9


def test_zoh_with_zero_dynamics_is_exact():
    # A = 0 but B nonzero: Ad must be the identity and Bd exactly B * dt.
    params = ThermalParams(a11=2.0, a12=0.0, a21=0.0, a22=0.0, a31=0.0, a32=0.0,
                           a41=0.0, a42=0.0, a51=0.0, a52=0.0, a61=0.0, a62=0.0)
    ss = build_state_space(params)
    assert not ss.a_matrix.any()
    dt = 0.125  # exactly representable
    ad, bd = discretize_zoh(ss, dt)
    assert np.array_equal(ad, np.eye(6))
    assert np.abs(bd - ss.b_matrix * dt).max() < 1e-15


def test_zoh_matches_fine_step_rk4_over_one_control_period(default_params):
    rng = np.random.default_rng(3)
    x0 = rng.uniform(15.0, 35.0, size=6)
    v = np.array([18.0, 7.5, 28.0])
    dt = 1.0 / 60.0
    ss = build_state_space(default_params)
    ad, bd = discretize_zoh(ss, dt)
    x_zoh = ad @ x0 + bd @ v
    x_rk4 = rk4_oracle(x0.copy(), ORACLE_A, ORACLE_B, v, dt / 10_000, 10_000)
    assert np.abs(x_zoh - x_rk4).max() < 1e-6


def test_zoh_rejects_nonpositive_dt(default_params):
    ss = build_state_space(default_params)
    for dt in (0.0, -1.0, float("nan")):
        with pytest.raises(ValueError):
            discretize_zoh(ss, dt)


# ---------------------------------------------------------------------------
# rk4_step
# ---------------------------------------------------------------------------

def test_rk4_keeps_equilibrium_fixed(default_params):
    inputs = PlantInputs(20.9, 0.0, 20.9)
    state = ThermalState.uniform(20.9)
    out = rk4_step(state, inputs, default_params, 1e-5)
    assert out.as_array() == pytest.approx(state.as_array(), abs=1e-12)


def test_rk4_zero_dt_returns_same_state(default_params, nominal_inputs):
    state = ThermalState(25.0, 24.0, 23.0, 22.0, 30.0, 28.0)
    out = rk4_step(state, nominal_inputs, default_params, 0.0)
    assert out == state


def test_rk4_local_error_shows_fourth_order(default_params):
    # Richardson: halving the step divides the one-step error by ~16.
    inputs = PlantInputs(15.0, 10.0, 25.0)
    x0 = equilibrium(default_params, inputs).as_array() + np.array(
        [1.0, -0.5, 2.0, 0.3, -1.2, 0.7])
    state = ThermalState.from_array(x0)
    dt = 1e-6
    ss = build_state_space(default_params)
    ad, bd = discretize_zoh(ss, dt)
    truth = ad @ x0 + bd @ inputs.as_array()
    e_full = np.abs(rk4_step(state, inputs, default_params, dt).as_array() - truth).max()
    half = rk4_step(state, inputs, default_params, dt / 2)
    half = rk4_step(half, inputs, default_params, dt / 2)
    e_half = np.abs(half.as_array() - truth).max()
    assert e_full / e_half == pytest.approx(16.0, rel=0.15)


def test_rk4_propagate_matches_repeated_steps(default_params, nominal_inputs):
    state = ThermalState(25.0, 24.0, 23.0, 22.0, 30.0, 28.0)
    stepped = state
    for _ in range(50):
        stepped = rk4_step(stepped, nominal_inputs, default_params, 1e-6)
    bulk = rk4_propagate(state, nominal_inputs, default_params, 1e-6, 50)
    assert bulk.as_array() == pytest.approx(stepped.as_array(), rel=1e-12)


# ---------------------------------------------------------------------------
# equilibrium / trim
# ---------------------------------------------------------------------------

def test_uniform_equilibrium_is_returned(default_params):
    eq = equilibrium(default_params, PlantInputs(20.9, 0.0, 20.9))
    assert eq.as_array() == pytest.approx([20.9] * 6, abs=1e-12)


def test_equilibrium_agrees_with_gaussian_elimination_oracle(default_params):
    inputs = PlantInputs(15.0, 10.0, 25.0)
    eq = equilibrium(default_params, inputs).as_array()
    oracle = gaussian_elimination(ORACLE_A, -(ORACLE_B @ inputs.as_array()))
    assert eq == pytest.approx(oracle, rel=1e-9)
    residual = np.abs(derivatives(ThermalState.from_array(eq), inputs,
                                  default_params)).max()
    assert residual < 1e-9


@pytest.mark.parametrize("inputs", [
    PlantInputs(24.0, 5.0, 25.0),
    PlantInputs(0.0, 0.0, 0.0),
    PlantInputs(30.0, 12.0, 35.0),
])
def test_equilibrium_zeroes_the_derivatives(default_params, inputs):
    eq = equilibrium(default_params, inputs)
    assert np.abs(derivatives(eq, inputs, default_params)).max() < 1e-9


def test_singular_model_has_no_unique_equilibrium():
    zero = ThermalParams(*([0.0] * 12))
    with pytest.raises(EquilibriumError):
        equilibrium(zero, PlantInputs(0.0, 0.0, 0.0))


def test_trim_supply_air_puts_the_output_on_target(default_params):
    u = trim_supply_air(default_params, 5.0, 25.0, 20.9)
    eq = equilibrium(default_params, PlantInputs(u, 5.0, 25.0))
    assert eq.t_it == pytest.approx(20.9, abs=1e-9)


def test_zoh_propagation_fixes_the_equilibrium(default_params):
    inputs = PlantInputs(24.0, 5.0, 25.0)
    x = equilibrium(default_params, inputs).as_array()
    ad, bd = discretize_zoh(build_state_space(default_params), 1.0 / 60.0)
    x_next = ad @ x + bd @ inputs.as_array()
    assert np.abs(x_next - x).max() < 1e-9


# ---------------------------------------------------------------------------
# apply_param_change
# ---------------------------------------------------------------------------

def test_param_change_identity():
    assert apply_param_change(DEFAULT_PARAMS, 1.0) == DEFAULT_PARAMS


def test_param_change_scales_exactly_three_couplings():
    scaled = apply_param_change(DEFAULT_PARAMS, 1.5)
    assert math.isclose(scaled.a21, 6449.55, rel_tol=1e-14)
    assert math.isclose(scaled.a31, 806.2005, rel_tol=1e-14)
    assert math.isclose(scaled.a51, 503.87535, rel_tol=1e-14)
    for field in ("a11", "a12", "a22", "a32", "a41", "a42", "a52", "a61", "a62"):
        assert getattr(scaled, field) == getattr(DEFAULT_PARAMS, field)


def test_param_change_halving():
    scaled = apply_param_change(DEFAULT_PARAMS, 0.5)
    assert scaled.a21 == 2149.85
    assert scaled.a31 == DEFAULT_PARAMS.a31 / 2
    assert scaled.a51 == DEFAULT_PARAMS.a51 / 2


@pytest.mark.parametrize("bad", [0.0, -1.5, float("nan"), float("inf")])
def test_param_change_rejects_nonpositive_multiplier(bad):
    with pytest.raises(ValueError):
        apply_param_change(DEFAULT_PARAMS, bad)


# ---------------------------------------------------------------------------
# spectrum: stability is measured, never assumed
# ---------------------------------------------------------------------------

def test_open_loop_spectrum_has_one_slow_unstable_mode():
    eig = open_loop_spectrum(DEFAULT_PARAMS)
    real = np.sort(eig.real)
    assert (real > 0).sum() == 1
    assert real[-1] == pytest.approx(4.1468, abs=1e-3)
    assert real[0] == pytest.approx(-3.3903e4, rel=1e-3)
