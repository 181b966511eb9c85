"""
Readout Throughput - Certification Time
Wall-clock certification objective, the fidelity- and throughput-optimal
integration times, speedup, and the asymptotic-regime checks
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import partial

import numpy as np
import pandas as pd

from src.config.settings import MICRO, NumericsSettings
from src.models.exceptions import DomainError, ParameterError, ReadoutModelError
from src.models.metrics import SATURATION_TOLERANCE, score_metrics
from src.models.optimize import bracket, golden_section_minimize, local_minima
from src.models.physics import snr_squared, snr_squared_derivative

logger = logging.getLogger(__name__)

MIN_SCAN_POINTS = 50
DEFAULT_EPSILON = 1e-4
DEFAULT_WINDOW = (0.05 * MICRO, 5.0 * MICRO)
DEFAULT_SCAN_POINTS = 120

METRIC_COLUMNS = [
    "tau",
    "delta_alpha_at_tau",
    "snr2",
    "fidelity",
    "fidelity_saturated",
    "chernoff",
    "s_star",
    "c_ideal",
    "eta_info",
]


@dataclass(frozen=True)
class CertificationSpec:
    """Target error, per-shot overhead and the tau search window (seconds)"""

    tau_oh: float
    epsilon: float = DEFAULT_EPSILON
    tau_window: tuple = DEFAULT_WINDOW
    tau_scan_points: int = DEFAULT_SCAN_POINTS

    def __post_init__(self):
        object.__setattr__(self, "tau_window", tuple(float(v) for v in self.tau_window))
        if not self.tau_oh >= 0:
            raise ParameterError(f"tau_oh must be >= 0, got {self.tau_oh}")
        if not 0 < self.epsilon < 1:
            raise ParameterError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if len(self.tau_window) != 2:
            raise ParameterError("tau_window must be a (tau_min, tau_max) pair")
        if not self.tau_min > 0:
            raise ParameterError(f"tau_min must be > 0, got {self.tau_min}")
        # tau_max == tau_min is a degenerate one-point window
        if not self.tau_max >= self.tau_min:
            raise ParameterError(f"tau_max must be >= tau_min, got {self.tau_window}")
        if self.tau_scan_points < MIN_SCAN_POINTS:
            raise ParameterError(f"tau_scan_points must be >= {MIN_SCAN_POINTS}, got {self.tau_scan_points}")

    @property
    def tau_min(self):
        return self.tau_window[0]

    @property
    def tau_max(self):
        return self.tau_window[1]

    @property
    def log_inverse_epsilon(self):
        return math.log(1.0 / self.epsilon)

    def scan_grid(self):
        """Log-spaced scan points over the window"""
        if self.tau_max == self.tau_min:
            return np.full(self.tau_scan_points, self.tau_min)
        return np.geomspace(self.tau_min, self.tau_max, self.tau_scan_points)

    def with_overrides(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class ScalarOptimum:
    tau: float
    value: float
    at_boundary: bool
    saturated: bool = False


@dataclass(frozen=True)
class OptimumReport:
    tau_fid: float
    tau_rate: float
    t_cert_at_fid: float
    t_cert_at_rate: float
    speedup: float
    s_star_at_rate: float
    eta_info_at_rate: float
    fidelity_at_fid: float
    fidelity_saturated: bool
    fid_at_boundary: bool
    rate_at_boundary: bool

    @property
    def flags(self):
        names = []
        if self.fid_at_boundary:
            names.append("fid_boundary")
        if self.rate_at_boundary:
            names.append("rate_boundary")
        if self.fidelity_saturated:
            names.append("saturated")
        return names

    def to_dict(self):
        return asdict(self)


def certification_time(tau, c, spec):
    """log(1/epsilon)/C * (tau + tau_oh); infinite when no information is gained"""
    if not c > 0:
        return math.inf
    return spec.log_inverse_epsilon / c * (tau + spec.tau_oh)


def _evaluate_row(tau, params, numerics):
    try:
        row = score_metrics(tau, params, numerics)
        row["error"] = ""
    except (ReadoutModelError, ArithmeticError) as exc:
        logger.warning("evaluation failed at tau=%.4g s: %s", tau, exc)
        row = {name: math.nan for name in METRIC_COLUMNS}
        row.update(tau=float(tau), fidelity_saturated=False, error=str(exc))
    return row


class ReadoutCurve:
    """C(tau) and F(tau) evaluated once per tau and shared by both optimizers

    The scan table is fixed at construction; refinement points requested by
    the optimizers are memoized alongside it.
    """

    def __init__(self, params, taus, numerics=NumericsSettings(), workers=1):
        self.params = params
        self.numerics = numerics
        taus = np.asarray(taus, dtype=float)
        distinct = np.unique(taus)
        evaluate = partial(_evaluate_row, params=params, numerics=numerics)

        if workers > 1 and distinct.size > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(evaluate, distinct, chunksize=max(1, distinct.size // (4 * workers))))
        else:
            rows = [evaluate(tau) for tau in distinct]

        # Repeated scan points share one evaluation
        self._cache = {float(tau): row for tau, row in zip(distinct, rows)}
        self._table = pd.DataFrame([self._cache[float(tau)] for tau in taus], columns=METRIC_COLUMNS + ["error"])
        logger.info("curve built: %d tau points, %d failed", taus.size, int((self._table["error"] != "").sum()))

    @classmethod
    def for_spec(cls, params, spec, numerics=NumericsSettings(), workers=1):
        return cls(params, spec.scan_grid(), numerics, workers)

    @property
    def table(self):
        return self._table.copy()

    @property
    def taus(self):
        return self._table["tau"].to_numpy()

    def column(self, name):
        return self._table[name].to_numpy(dtype=float)

    def evaluate(self, tau):
        tau = float(tau)
        if tau not in self._cache:
            self._cache[tau] = _evaluate_row(tau, self.params, self.numerics)
        return self._cache[tau]

    def certification_times(self, spec):
        return np.array([certification_time(tau, c, spec) for tau, c in zip(self.taus, self.column("chernoff"))])


def _curve_for(params, spec, numerics, curve, workers):
    return curve if curve is not None else ReadoutCurve.for_spec(params, spec, numerics, workers)


def _plateau_edge(curve, taus, index, threshold, tol):
    # Bisection between the last sub-threshold scan point and the first saturated one
    if index == 0:
        return float(taus[0])
    lo, hi = float(taus[index - 1]), float(taus[index])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if curve.evaluate(mid)["fidelity"] >= threshold:
            hi = mid
        else:
            lo = mid
    return hi


def optimize_tau_fid(params, spec, numerics=NumericsSettings(), curve=None, workers=1):
    """Integration time that maximizes single-shot Bayes fidelity"""
    curve = _curve_for(params, spec, numerics, curve, workers)
    taus = curve.taus
    fidelity = curve.column("fidelity")
    if np.all(np.isnan(fidelity)):
        raise ReadoutModelError("fidelity could not be evaluated at any scan point")

    f_max = float(np.nanmax(fidelity))
    threshold = f_max - SATURATION_TOLERANCE
    near = np.nonzero(fidelity >= threshold)[0]
    index = int(near[0])
    saturated = near.size > 1 and taus[near[-1]] > taus[near[0]]

    if saturated:
        tau = _plateau_edge(curve, taus, index, threshold, numerics.tau_tol)
        value = curve.evaluate(tau)["fidelity"]
        at_boundary = index == 0
        logger.warning("fidelity saturates at %.4f us; returning the plateau edge", tau / MICRO)
    else:
        lo, hi = bracket(taus, index)
        tau, neg_value = golden_section_minimize(lambda t: -curve.evaluate(t)["fidelity"], lo, hi, numerics.tau_tol)
        value = -neg_value
        if not value > fidelity[index]:
            tau, value = float(taus[index]), float(fidelity[index])
        at_boundary = index in (0, taus.size - 1)

    if at_boundary:
        logger.warning("fidelity optimum at the window boundary (tau=%.4f us)", tau / MICRO)
    return ScalarOptimum(tau=float(tau), value=float(value), at_boundary=at_boundary, saturated=bool(saturated))


def optimize_tau_rate(params, spec, numerics=NumericsSettings(), curve=None, workers=1):
    """Integration time that minimizes wall-clock certification time

    Every local minimum of the coarse scan is refined and the global winner
    returned; ties go to the shorter window.
    """
    curve = _curve_for(params, spec, numerics, curve, workers)
    taus = curve.taus
    t_cert = curve.certification_times(spec)
    minima = local_minima(np.where(np.isinf(t_cert), np.nan, t_cert))
    if not minima:
        raise ReadoutModelError("certification time is infinite over the whole window")
    if len(minima) > 1:
        logger.info("refining %d competing certification-time minima", len(minima))

    def objective(t):
        return certification_time(t, curve.evaluate(t)["chernoff"], spec)

    best = None
    for index in minima:
        candidate = (float(t_cert[index]), float(taus[index]), index)
        lo, hi = bracket(taus, index)
        if hi > lo:
            tau, value = golden_section_minimize(objective, lo, hi, numerics.tau_tol)
            if value < candidate[0]:
                candidate = (float(value), float(tau), index)
        if best is None or candidate[:2] < best[:2]:
            best = candidate

    value, tau, index = best
    at_boundary = index in (0, taus.size - 1)
    if at_boundary:
        logger.warning("throughput optimum at the window boundary (tau=%.4f us)", tau / MICRO)
    return ScalarOptimum(tau=tau, value=value, at_boundary=at_boundary)


def speedup(params, spec, numerics=NumericsSettings(), curve=None, workers=1):
    """Both optima on one shared curve and the resulting certification speedup"""
    curve = _curve_for(params, spec, numerics, curve, workers)
    fid = optimize_tau_fid(params, spec, numerics, curve)
    rate = optimize_tau_rate(params, spec, numerics, curve)

    fid_row = curve.evaluate(fid.tau)
    rate_row = curve.evaluate(rate.tau)
    t_fid = certification_time(fid.tau, fid_row["chernoff"], spec)
    t_rate = certification_time(rate.tau, rate_row["chernoff"], spec)

    report = OptimumReport(
        tau_fid=fid.tau,
        tau_rate=rate.tau,
        t_cert_at_fid=t_fid,
        t_cert_at_rate=t_rate,
        speedup=t_fid / t_rate,
        s_star_at_rate=rate_row["s_star"],
        eta_info_at_rate=rate_row["eta_info"],
        fidelity_at_fid=fid.value,
        fidelity_saturated=fid.saturated,
        fid_at_boundary=fid.at_boundary,
        rate_at_boundary=rate.at_boundary,
    )
    logger.info(
        "tau_fid=%.4f us, tau_rate=%.4f us, speedup=%.4f",
        report.tau_fid / MICRO, report.tau_rate / MICRO, report.speedup,
    )
    return report


def stationarity_residual(tau, params, spec):
    """[SNR^2 - (tau + tau_oh) dSNR^2/dtau] / SNR^2, zero where the Gaussian-limit
    certification time is stationary"""
    if not tau > 0:
        raise DomainError(f"tau must be > 0, got {tau}")
    s2 = snr_squared(tau, params)
    return (s2 - (tau + spec.tau_oh) * snr_squared_derivative(tau, params)) / s2


def linear_surrogate_check(a, b, spec, tau_grid):
    """Certification time for a linear SNR^2 = a*tau + b and its monotonicity

    The derivative is proportional to b - a*tau_oh, so the surrogate can never
    have an interior optimum.
    """
    if not a > 0:
        raise DomainError(f"a must be > 0, got {a}")
    if not b >= 0:
        raise DomainError(f"b must be >= 0, got {b}")

    taus = np.asarray(tau_grid, dtype=float)
    objective = (taus + spec.tau_oh) / (a * taus + b)
    steps = np.diff(objective)
    predicted = int(np.sign(b - a * spec.tau_oh))

    if predicted == 0:
        monotone = bool(np.all(np.abs(steps) <= 1e-12 * np.max(np.abs(objective))))
    else:
        monotone = bool(np.all(np.sign(steps) == predicted))

    return {
        "predicted_sign": predicted,
        "objective": objective,
        "slope": steps / np.diff(taus),
        "monotone": monotone,
    }
