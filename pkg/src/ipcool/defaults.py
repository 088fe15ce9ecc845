"""Shared default constants for the simulator.

The canonical time unit throughout the package is hours; temperatures are
degrees Celsius and server power is kW.  The control loop samples once per
minute, i.e. every 1/60 h.
"""

SETPOINT_C = 20.9

# Input/output gain of the first-order control model and proportional gain.
ALPHA = 10.0
KP = 1.0

CONTROL_PERIOD_H = 1.0 / 60.0

# Drift-estimator window: 5 consecutive control samples (4 min horizon).
WINDOW_SAMPLES = 5
