"""Test speedup sweeps, the Gaussian validation table and the curve exports"""

import math

import numpy as np
import pytest
from scipy.integrate import simpson

from src.config.settings import MICRO, NumericsSettings
from src.models import sweeps
from src.models.exceptions import ConfigurationError, DomainError
from src.models.physics import PhysicalParams, snr_squared
from src.models.sweeps import (
    CURVE_COLUMNS,
    SweepAxis,
    export_curves,
    export_distributions,
    gaussian_validation,
    overhead_scan,
    run_sweep,
)
from src.models.throughput import CertificationSpec, speedup


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(name="chi", lo=1.0, hi=2.0, n=3),
        dict(name="eta", lo=0.3, hi=0.7, n=1),
        dict(name="eta", lo=0.7, hi=0.3, n=3),
        dict(name="t1", lo=10e-6, hi=math.inf, n=3),
        dict(name="n_bar", lo=0.0, hi=100.0, n=3, spacing="log"),
        dict(name="n_bar", lo=10.0, hi=100.0, n=3, spacing="cubic"),
    ],
)
def test_invalid_axis(kwargs):
    with pytest.raises(ConfigurationError):
        SweepAxis(**kwargs)


def test_axis_values():
    linear = SweepAxis(name="eta", lo=0.3, hi=0.7, n=5)
    np.testing.assert_allclose(linear.values, [0.3, 0.4, 0.5, 0.6, 0.7])

    log = SweepAxis(name="n_bar", lo=10.0, hi=1000.0, n=3, spacing="log")
    np.testing.assert_allclose(log.values, [10.0, 100.0, 1000.0])

    explicit = SweepAxis.from_values("t1", [20e-6, math.inf])
    assert explicit.values.tolist() == [20e-6, math.inf]
    assert explicit.to_dict()["name"] == "t1"

    with pytest.raises(ConfigurationError):
        SweepAxis.from_values("eta", [])


def test_duplicate_axes_rejected(baseline_params, short_spec, fast_numerics):
    axis = SweepAxis(name="eta", lo=0.3, hi=0.7, n=2)
    with pytest.raises(ConfigurationError):
        run_sweep(baseline_params, short_spec, axis, axis, fast_numerics)


def test_single_cell_matches_direct_call(baseline_params, short_spec, fast_numerics):
    axis1 = SweepAxis.from_values("eta", [0.5])
    axis2 = SweepAxis.from_values("tau_oh", [20e-6])
    result = run_sweep(baseline_params, short_spec, axis1, axis2, fast_numerics)

    direct = speedup(
        baseline_params.with_overrides(eta=0.5), short_spec.with_overrides(tau_oh=20e-6), fast_numerics
    )
    assert result.values.shape == (1, 1)
    assert result.values[0, 0] == direct.speedup
    assert result.flags[0, 0] == "|".join(direct.flags)


def test_sweep_layout_and_transpose(baseline_params, short_spec, fast_numerics):
    t1_axis = SweepAxis.from_values("t1", [20e-6, math.inf])
    overhead_axis = SweepAxis.from_values("tau_oh", [5e-6, 15e-6])

    result = run_sweep(baseline_params, short_spec, t1_axis, overhead_axis, fast_numerics)
    assert result.values.shape == (2, 2)
    assert np.all(np.isfinite(result.values))
    assert "rate_boundary" in result.flags[1, 0], "the relaxation-free row ends at the window edge"

    frame = result.to_frame()
    assert list(frame.columns) == ["axis1_value", "axis2_value", "speedup", "flag"]
    assert len(frame) == 4
    assert frame["axis1_value"].tolist() == [20e-6, 20e-6, math.inf, math.inf]
    assert frame["axis2_value"].tolist() == [5e-6, 15e-6, 5e-6, 15e-6]

    swapped = run_sweep(baseline_params, short_spec, overhead_axis, t1_axis, fast_numerics)
    np.testing.assert_array_equal(swapped.values, result.values.T)
    assert result.meta["axes"][0]["name"] == "t1"


def test_rejected_cells_flagged(baseline_params, short_spec, fast_numerics):
    eta_axis = SweepAxis.from_values("eta", [0.5, 1.5])
    overhead_axis = SweepAxis.from_values("tau_oh", [15e-6])
    result = run_sweep(baseline_params, short_spec, eta_axis, overhead_axis, fast_numerics)
    assert result.flags[1, 0] == "error"
    assert math.isnan(result.values[1, 0])
    assert np.isfinite(result.values[0, 0])


def test_gaussian_validation(gaussian_params, fast_numerics):
    taus = np.geomspace(0.05, 3.0, 8) * MICRO
    table = gaussian_validation(gaussian_params, taus, fast_numerics)
    assert list(table.columns) == ["tau", "c_num", "c_theory", "residual"]
    assert np.all(np.abs(table["residual"]) / table["c_theory"] < 1e-3)
    np.testing.assert_allclose(table["c_theory"], [snr_squared(t, gaussian_params) / 8.0 for t in taus], rtol=1e-15)


def test_gaussian_validation_needs_infinite_t1(baseline_params):
    with pytest.raises(DomainError):
        gaussian_validation(baseline_params, [1e-6])


def test_export_curves(baseline_params, short_spec, fast_numerics):
    table = export_curves(baseline_params, short_spec, short_spec.scan_grid(), fast_numerics)
    assert list(table.columns) == CURVE_COLUMNS
    assert len(table) == short_spec.tau_scan_points
    np.testing.assert_allclose(table["snr2"], [snr_squared(t, baseline_params) for t in table["tau"]], rtol=1e-15)

    s_star = table["s_star"].to_numpy()
    assert s_star[0] == pytest.approx(0.5, abs=0.01)
    assert s_star[-1] < s_star[0]

    t_cert = table["t_cert"].to_numpy()
    best = int(np.argmin(t_cert))
    assert 0 < best < len(t_cert) - 1, "certification time has an interior minimum"


def test_export_distributions(baseline_params, fast_numerics):
    table = export_distributions(baseline_params, 1.0 * MICRO, fast_numerics)
    assert list(table.columns) == ["x", "p_ground", "p_excited", "p_excited_no_decay"]
    for column in ("p_ground", "p_excited", "p_excited_no_decay"):
        assert simpson(table[column], x=table["x"]) == pytest.approx(1.0, abs=1e-6)

    half_snr = 0.5 * math.sqrt(snr_squared(1.0 * MICRO, baseline_params))
    peak = table["x"][int(np.argmax(table["p_excited_no_decay"]))]
    assert peak == pytest.approx(half_snr, abs=0.05)
    assert table["p_excited"].max() < table["p_excited_no_decay"].max(), "relaxation lowers the excited peak"


def test_overhead_scan(baseline_params, short_spec, fast_numerics):
    table = overhead_scan(baseline_params, short_spec, [5e-6, 15e-6, 30e-6], fast_numerics)
    assert list(table["tau_oh"]) == [5e-6, 15e-6, 30e-6]
    assert np.all(table["speedup"] >= 1.0 - 1e-6)
    assert np.all(np.diff(table["speedup"]) >= -1e-6)


def test_arithmetic_failure_stays_in_its_cell(baseline_params, short_spec, fast_numerics, monkeypatch):
    compute = sweeps.speedup

    def fragile(params, spec, numerics, curve=None, workers=1):
        if spec.tau_oh == 15e-6:
            raise ZeroDivisionError("float division by zero")
        return compute(params, spec, numerics, curve=curve, workers=workers)

    monkeypatch.setattr(sweeps, "speedup", fragile)
    eta_axis = SweepAxis.from_values("eta", [0.45])
    overhead_axis = SweepAxis.from_values("tau_oh", [5e-6, 15e-6])
    result = run_sweep(baseline_params, short_spec, eta_axis, overhead_axis, fast_numerics)
    assert result.flags[0, 1] == "error"
    assert math.isnan(result.values[0, 1])
    assert np.isfinite(result.values[0, 0])


@pytest.mark.slow
def test_overhead_map_peaks_at_the_far_corner():
    """With T1 = 20 us and eta = 0.5 the largest gain sits at the highest photon number and overhead"""
    params = PhysicalParams.from_lab_units(
        chi_over_2pi_mhz=1.2, kappa_over_2pi_mhz=5.0, n_bar=80.0, eta=0.5, t1_us=20.0
    )
    n_bar_axis = SweepAxis(name="n_bar", lo=40.0, hi=120.0, n=3)
    overhead_axis = SweepAxis(name="tau_oh", lo=5e-6, hi=30e-6, n=3)
    result = run_sweep(params, CertificationSpec(tau_oh=15e-6), n_bar_axis, overhead_axis, NumericsSettings())

    assert np.all(np.isfinite(result.values))
    peak = tuple(int(k) for k in np.unravel_index(np.argmax(result.values), result.values.shape))
    assert peak == (2, 2), result.values
    assert result.values[2, 2] == pytest.approx(1.13, abs=0.03)
