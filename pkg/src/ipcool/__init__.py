"""Model-free (intelligent proportional) control of a data-center cooling loop.

A deterministic simulation toolkit: a six-temperature linear thermal plant
with exact zero-order-hold discretization, an online windowed-integral
estimator of the control model's lumped drift term, the iP control law,
a closed-loop driver with an event schedule, scenario builders, and a CLI
that exports traces, metrics and plot-ready panel files.
"""

from .controller import (
    IpConfig,
    ReferenceTrajectory,
    Segment,
    ip_control,
    reference_eval,
)
from .estimator import (
    EstimatorConfig,
    EstimatorWarmingUp,
    SampleWindow,
    estimate_f,
    quadrature_weights,
)
from .plant import (
    DEFAULT_PARAMS,
    EquilibriumError,
    IntegrationError,
    PlantInputs,
    StateSpace,
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
from .scenarios import (
    SCENARIO_ALPHA,
    LoadTrace,
    load_trace_from_csv,
    scenario_hold,
    scenario_load_trace,
    scenario_param_change,
    scenario_reference_change,
    scenario_sudden_cpu,
    scenario_sudden_tout,
    synth_load,
    write_load_csv,
)
from .simloop import (
    DivergenceError,
    Event,
    EventSchedule,
    ScaleParams,
    SetPIt,
    SetTOut,
    SimConfig,
    SimTrace,
    SwitchReference,
    TraceMetrics,
    metrics,
    run_closed_loop,
    run_open_loop,
)

__version__ = "0.1.0"
