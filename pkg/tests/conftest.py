from __future__ import annotations

import pytest

from ipcool.plant import DEFAULT_PARAMS, PlantInputs


@pytest.fixture
def default_params():
    return DEFAULT_PARAMS


@pytest.fixture
def nominal_inputs():
    """The working point used by the built-in scenarios."""
    return PlantInputs(t_air_in=24.0, p_it=5.0, t_out=25.0)
