import numpy as np
import pytest

import temsphere as ts


@pytest.fixture(scope="session")
def aluminum():
    return ts.MaterialSpec(conductivity_s_per_m=1 / 2.8e-8, relative_permeability=1.0)


@pytest.fixture(scope="session")
def steel():
    return ts.MaterialSpec(conductivity_s_per_m=1 / 8.9e-8, relative_permeability=200.0)


@pytest.fixture(scope="session")
def ground():
    return ts.MaterialSpec(conductivity_s_per_m=0.1, relative_permeability=1.0)


@pytest.fixture(scope="session")
def aluminum_sphere(aluminum):
    return ts.TargetSpec(radius_m=0.05, material=aluminum)


@pytest.fixture(scope="session")
def steel_sphere(steel):
    return ts.TargetSpec(radius_m=0.05, material=steel)


@pytest.fixture(scope="session")
def environment(ground):
    return ts.EnvironmentSpec(background=ground, standoff_m=0.5)


@pytest.fixture(scope="session")
def rx_loop():
    return ts.Loop(kind="circular", radius_m=0.25, height_m=0.35, windings=1)


@pytest.fixture(scope="session")
def tx_loop():
    return ts.Loop(kind="circular", radius_m=0.4, height_m=0.3, windings=1)


@pytest.fixture(scope="session")
def step_pulse():
    return ts.PulseWaveform(base_current_a=1.0, windings=1, ramp="step")


@pytest.fixture(scope="session")
def sample_config_dict():
    return {
        "target": {"radius_m": 0.05, "resistivity_ohm_m": 2.8e-8, "mu_r": 1.0},
        "background": {"resistivity_ohm_m": 10.0, "mu_r": 1.0},
        "standoff_m": 0.5,
        "pulse": {"base_current_a": 1.0, "windings": 1, "ramp": "step", "t0_s": 0.0},
        "loops": {
            "transmitter": {
                "kind": "circular",
                "radius_m": 0.4,
                "height_m": 0.3,
                "windings": 1,
            },
            "receiver": {
                "kind": "circular",
                "radius_m": 0.25,
                "height_m": 0.35,
                "windings": 1,
            },
        },
        "options": {"max_l": 1, "max_n": 500, "collapse_transient": True},
    }


@pytest.fixture(scope="session")
def aluminum_500_library(aluminum_sphere):
    return ts.build_mode_library(aluminum_sphere, 1.0, max_l=1, count_per_l=500)


def log_gates(markers, lo_frac, hi_frac, count):
    return np.geomspace(lo_frac * markers.tau_c_s, hi_frac * markers.tau_c_s, count)
