"""Shared fixtures: baseline device, Gaussian-limit device and coarse numerics"""

import math

import pytest

from src.config.settings import MICRO, NumericsSettings
from src.models.physics import PhysicalParams
from src.models.throughput import CertificationSpec


@pytest.fixture
def baseline_params():
    return PhysicalParams.from_lab_units(
        chi_over_2pi_mhz=1.2, kappa_over_2pi_mhz=5.0, n_bar=80.0, eta=0.45, t1_us=30.0
    )


@pytest.fixture
def gaussian_params(baseline_params):
    return baseline_params.with_overrides(t1=math.inf)


@pytest.fixture
def fast_numerics():
    return NumericsSettings(x_grid_max_spacing=0.05, jump_nodes=64, tau_tol_us=1e-2)


@pytest.fixture
def short_spec():
    """Baseline overhead with a short scan, enough to resolve both optima"""
    return CertificationSpec(tau_oh=15.0 * MICRO, tau_window=(0.05 * MICRO, 3.0 * MICRO), tau_scan_points=50)
