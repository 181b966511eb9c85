"""
Readout Throughput - Sweeps and Exports
Two-parameter speedup maps, the Gaussian-limit validation table, overhead
scans and plot-ready curve exports
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial

import numpy as np
import pandas as pd

from src.config.settings import NumericsSettings
from src.models.distributions import build_excited, build_ground, log_pdf
from src.models.exceptions import ConfigurationError, DomainError, ParameterError, ReadoutModelError
from src.models.metrics import make_xgrid
from src.models.physics import snr_squared
from src.models.throughput import ReadoutCurve, speedup

logger = logging.getLogger(__name__)

AXIS_NAMES = ("t1", "eta", "n_bar", "tau_oh")
SPACINGS = ("linear", "log")

# Failures recorded per cell instead of aborting a sweep
CELL_ERRORS = (ReadoutModelError, ArithmeticError)

CURVE_COLUMNS = [
    "tau",
    "delta_alpha_at_tau",
    "snr2",
    "fidelity",
    "chernoff",
    "s_star",
    "eta_info",
    "t_cert",
    "error",
]


@dataclass(frozen=True)
class SweepAxis:
    """One swept parameter, in SI units (seconds for t1 and tau_oh)"""

    name: str
    lo: float
    hi: float
    n: int
    spacing: str = "linear"
    explicit: tuple = None

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ConfigurationError("axis", f"unknown parameter {self.name!r}; expected one of {', '.join(AXIS_NAMES)}")
        if self.spacing not in SPACINGS:
            raise ConfigurationError(self.name, f"spacing must be linear or log, got {self.spacing!r}")
        if self.explicit is not None:
            if len(self.explicit) < 1:
                raise ConfigurationError(self.name, "value list is empty")
            return
        if self.n < 2:
            raise ConfigurationError(self.name, f"needs n >= 2, got {self.n}")
        if not self.lo < self.hi:
            raise ConfigurationError(self.name, f"needs lo < hi, got {self.lo} and {self.hi}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ConfigurationError(self.name, "grid bounds must be finite; use a value list for inf")
        if self.spacing == "log" and not self.lo > 0:
            raise ConfigurationError(self.name, "log spacing needs lo > 0")

    @classmethod
    def from_values(cls, name, values):
        values = tuple(float(v) for v in values)
        if not values:
            raise ConfigurationError(name, "value list is empty")
        return cls(name=name, lo=min(values), hi=max(values), n=len(values), explicit=values)

    @property
    def values(self):
        if self.explicit is not None:
            return np.array(self.explicit, dtype=float)
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.n)
        return np.linspace(self.lo, self.hi, self.n)

    def to_dict(self):
        return {"name": self.name, "spacing": self.spacing, "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class SweepResult:
    axis1: SweepAxis
    axis2: SweepAxis
    values: np.ndarray
    flags: np.ndarray
    meta: dict

    def to_frame(self):
        """Long format, ordered by (axis1 index, axis2 index)"""
        rows = []
        for i, v1 in enumerate(self.axis1.values):
            for j, v2 in enumerate(self.axis2.values):
                rows.append({
                    "axis1_value": v1,
                    "axis2_value": v2,
                    "speedup": self.values[i, j],
                    "flag": self.flags[i, j],
                })
        return pd.DataFrame(rows, columns=["axis1_value", "axis2_value", "speedup", "flag"])


def _apply_override(params, spec, name, value):
    if name == "tau_oh":
        return params, spec.with_overrides(tau_oh=value)
    return params.with_overrides(**{name: value}), spec


def _sweep_task(task, numerics):
    params, specs = task
    try:
        curve = ReadoutCurve.for_spec(params, specs[0], numerics)
    except CELL_ERRORS as exc:
        return [str(exc) or type(exc).__name__] * len(specs)

    outcomes = []
    for spec in specs:
        try:
            outcomes.append(speedup(params, spec, numerics, curve=curve))
        except CELL_ERRORS as exc:
            outcomes.append(str(exc) or type(exc).__name__)
    return outcomes


def run_sweep(base_params, base_spec, axis1, axis2, numerics=NumericsSettings(), workers=1):
    """Speedup over a two-parameter grid

    Cells with identical physical parameters share one curve; the matrix is
    filled by cell index, so the result does not depend on evaluation order.
    """
    if axis1.name == axis2.name:
        raise ConfigurationError("axis2", f"both axes name {axis1.name!r}")

    shape = (axis1.values.size, axis2.values.size)
    values = np.full(shape, np.nan)
    flags = np.full(shape, "", dtype=object)

    # Group cells by physical parameters
    tasks = {}
    for i, v1 in enumerate(axis1.values):
        for j, v2 in enumerate(axis2.values):
            try:
                params, spec = _apply_override(base_params, base_spec, axis1.name, v1)
                params, spec = _apply_override(params, spec, axis2.name, v2)
            except ParameterError as exc:
                logger.warning("sweep cell (%d, %d) rejected: %s", i, j, exc)
                flags[i, j] = "error"
                continue
            cells, specs = tasks.setdefault(params, ([], []))
            cells.append((i, j))
            specs.append(spec)

    jobs = [(params, specs) for params, (_, specs) in tasks.items()]
    run = partial(_sweep_task, numerics=numerics)
    logger.info("sweep %s x %s: %d cells, %d distinct curves", axis1.name, axis2.name, shape[0] * shape[1], len(jobs))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    for (cells, _), outcomes in zip(tasks.values(), results):
        for (i, j), outcome in zip(cells, outcomes):
            if isinstance(outcome, str):
                logger.warning("sweep cell (%d, %d) failed: %s", i, j, outcome)
                flags[i, j] = "error"
            else:
                values[i, j] = outcome.speedup
                flags[i, j] = "|".join(outcome.flags)

    meta = {
        "base_params": asdict(base_params),
        "base_spec": asdict(base_spec),
        "numerics": numerics.to_dict(),
        "axes": [axis1.to_dict(), axis2.to_dict()],
    }
    return SweepResult(axis1=axis1, axis2=axis2, values=values, flags=flags, meta=meta)


def gaussian_validation(params, tau_grid, numerics=NumericsSettings(), workers=1):
    """Numerical Chernoff information against SNR^2/8 in the T1 -> inf limit"""
    if not params.gaussian_limit:
        raise DomainError("gaussian_validation requires an infinite t1")
    curve = ReadoutCurve(params, tau_grid, numerics, workers)
    table = curve.table
    c_theory = np.array([snr_squared(tau, params) / 8.0 for tau in table["tau"]])
    return pd.DataFrame({
        "tau": table["tau"],
        "c_num": table["chernoff"],
        "c_theory": c_theory,
        "residual": table["chernoff"] - c_theory,
    })


def export_curves(params, spec, tau_grid, numerics=NumericsSettings(), workers=1):
    """Plot-ready table of every per-tau quantity"""
    curve = ReadoutCurve(params, tau_grid, numerics, workers)
    table = curve.table
    table["t_cert"] = curve.certification_times(spec)
    return table[CURVE_COLUMNS]


def export_distributions(params, tau, numerics=NumericsSettings()):
    """Ground and excited score densities at one tau, with and without relaxation"""
    ground = build_ground(tau, params)
    excited = build_excited(tau, params, numerics.jump_nodes)
    no_decay = build_excited(tau, params.with_overrides(t1=math.inf))
    grid = make_xgrid(ground, excited, numerics.x_grid_margin, numerics.x_grid_max_spacing)
    x = grid.points
    return pd.DataFrame({
        "x": x,
        "p_ground": np.exp(log_pdf(ground, x)),
        "p_excited": np.exp(log_pdf(excited, x)),
        "p_excited_no_decay": np.exp(log_pdf(no_decay, x)),
    })


def overhead_scan(params, spec, tau_oh_values, numerics=NumericsSettings(), workers=1):
    """Both optima and the speedup as the per-shot overhead varies"""
    curve = ReadoutCurve.for_spec(params, spec, numerics, workers)
    rows = []
    for tau_oh in tau_oh_values:
        report = speedup(params, spec.with_overrides(tau_oh=float(tau_oh)), numerics, curve=curve)
        rows.append({
            "tau_oh": float(tau_oh),
            "tau_fid": report.tau_fid,
            "tau_rate": report.tau_rate,
            "t_cert_fid": report.t_cert_at_fid,
            "t_cert_rate": report.t_cert_at_rate,
            "speedup": report.speedup,
            "flag": "|".join(report.flags),
        })
    return pd.DataFrame(rows)
