"""
Readout Throughput - Distinguishability Metrics
Chernoff information, Bayes fidelity, the unit-efficiency benchmark and
information-extraction efficiency over score distributions
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc, logsumexp, ndtr

from src.config.settings import NumericsSettings
from src.models.distributions import build_excited, build_ground, log_pdf
from src.models.exceptions import DomainError, GridClippingError, ParameterError
from src.models.optimize import bracket, golden_section_minimize
from src.models.physics import delta_alpha, snr_squared

logger = logging.getLogger(__name__)

MIN_MARGIN = 6.0
MIN_POINTS = 101
CLIP_LOG_RATIO = math.log(1e-12)
S_SCAN_POINTS = 21
FLAT_TOLERANCE = 1e-12
SATURATION_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ChernoffResult:
    c: float
    s_star: float
    integral_value: float


@dataclass(frozen=True)
class XGrid:
    """Uniform score grid carrying composite Simpson weights"""

    lo: float
    hi: float
    n_points: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ParameterError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.n_points < MIN_POINTS or self.n_points % 2 == 0:
            raise ParameterError(f"grid needs an odd n_points >= {MIN_POINTS}, got {self.n_points}")

    @property
    def spacing(self):
        return (self.hi - self.lo) / (self.n_points - 1)

    @property
    def points(self):
        return np.linspace(self.lo, self.hi, self.n_points)

    @property
    def log_weights(self):
        coefficients = np.ones(self.n_points)
        coefficients[1:-1:2] = 4.0
        coefficients[2:-1:2] = 2.0
        return np.log(coefficients * self.spacing / 3.0)


def make_xgrid(p, q, margin=12.0, max_spacing=0.02):
    """Grid covering both mixtures with `margin` standard deviations to spare"""
    if margin < MIN_MARGIN:
        raise DomainError(f"margin must be >= {MIN_MARGIN}, got {margin}")
    lo = min(p.means.min(), q.means.min()) - margin
    hi = max(p.means.max(), q.means.max()) + margin
    intervals = max(MIN_POINTS - 1, math.ceil((hi - lo) / max_spacing))
    intervals += intervals % 2
    return XGrid(lo=float(lo), hi=float(hi), n_points=intervals + 1)


def _log_densities(p, q, grid):
    x = grid.points
    log_p = log_pdf(p, x)
    log_q = log_pdf(q, x)
    for dist, values in ((p, log_p), (q, log_q)):
        edge = max(values[0], values[-1])
        if edge - values.max() > CLIP_LOG_RATIO:
            raise GridClippingError(
                f"{dist.label} density at the grid edge is {math.exp(edge - values.max()):.3g} "
                f"of its peak on [{grid.lo:.3f}, {grid.hi:.3f}]"
            )
    return log_p, log_q


def chernoff_coefficient(p, q, grid, s):
    """g(s) = int p^s q^(1-s) dx on the grid"""
    log_p, log_q = _log_densities(p, q, grid)
    return math.exp(float(logsumexp(s * log_p + (1.0 - s) * log_q + grid.log_weights)))


def chernoff(p, q, grid, s_tol=1e-5):
    """Chernoff information -log min_s int p^s q^(1-s) dx"""
    log_p, log_q = _log_densities(p, q, grid)
    log_w = grid.log_weights

    def log_g(s):
        return float(logsumexp(s * log_p + (1.0 - s) * log_q + log_w))

    s_scan = np.linspace(0.0, 1.0, S_SCAN_POINTS)
    scan = np.array([log_g(s) for s in s_scan])

    if np.ptp(scan) <= FLAT_TOLERANCE:
        s_star, value = 0.5, log_g(0.5)
    else:
        best = int(np.argmin(scan))
        lo, hi = bracket(s_scan, best)
        s_star, value = golden_section_minimize(log_g, lo, hi, s_tol)
        if scan[best] <= value:
            s_star, value = float(s_scan[best]), float(scan[best])

    logger.debug("chernoff: s*=%.6f log g=%.6g", s_star, value)
    return ChernoffResult(c=max(0.0, -value), s_star=float(s_star), integral_value=math.exp(value))


def _interval_mass(dist, a, b):
    # Upper tails are taken from the mirrored CDF to avoid 1 - (1 - tiny)
    mu = dist.means
    upper = ndtr(mu - a) - ndtr(mu - b)
    lower = ndtr(b - mu) - ndtr(a - mu)
    return float(np.sum(dist.weights * np.where(a > mu, upper, lower)))


def bayes_fidelity(p, q, grid):
    """Optimal single-shot assignment fidelity 1 - 1/2 int min(p, q) dx

    The minimum switches between p and q at the roots of log p - log q; the
    roots are bracketed on the grid, polished with brentq, and each region
    is integrated exactly with the Gaussian CDF.
    """
    log_p, log_q = _log_densities(p, q, grid)
    x = grid.points
    p_is_min = log_p < log_q
    flips = np.nonzero(p_is_min[1:] != p_is_min[:-1])[0]

    def log_ratio(z):
        return log_pdf(p, z) - log_pdf(q, z)

    def crossing(i):
        try:
            return brentq(log_ratio, x[i], x[i + 1], xtol=1e-13)
        except ValueError:
            # scalar re-evaluation disagreed in sign with the grid; interpolate
            d0 = log_p[i] - log_q[i]
            d1 = log_p[i + 1] - log_q[i + 1]
            return float(x[i] + (x[i + 1] - x[i]) * d0 / (d0 - d1))

    edges = [crossing(i) for i in flips]
    bounds = [-math.inf] + edges + [math.inf]
    region_flags = [p_is_min[0]] + [p_is_min[i + 1] for i in flips]

    overlap = 0.0
    for k, use_p in enumerate(region_flags):
        overlap += _interval_mass(p if use_p else q, bounds[k], bounds[k + 1])

    fidelity = min(1.0, max(0.5, 1.0 - 0.5 * overlap))
    if 1.0 - fidelity < SATURATION_TOLERANCE:
        fidelity = 1.0
    return fidelity


def gaussian_fidelity(d):
    """Bayes fidelity of two unit Gaussians separated by d"""
    return 1.0 - 0.5 * float(erfc(d / (2.0 * math.sqrt(2.0))))


def ideal_chernoff(tau, params):
    """Unit-efficiency, no-decay Gaussian Chernoff benchmark SNR^2(eta=1)/8"""
    return snr_squared(tau, params.with_overrides(eta=1.0)) / 8.0


def score_metrics(tau, params, numerics=NumericsSettings()):
    """Every per-tau quantity the curves and optimizers need"""
    ground = build_ground(tau, params)
    excited = build_excited(tau, params, numerics.jump_nodes)
    grid = make_xgrid(ground, excited, numerics.x_grid_margin, numerics.x_grid_max_spacing)

    result = chernoff(ground, excited, grid, numerics.s_tol)
    fidelity = bayes_fidelity(ground, excited, grid)
    c_ideal = ideal_chernoff(tau, params)

    return {
        "tau": float(tau),
        "delta_alpha_at_tau": delta_alpha(tau, params),
        "snr2": snr_squared(tau, params),
        "fidelity": fidelity,
        "fidelity_saturated": fidelity == 1.0,
        "chernoff": result.c,
        "s_star": result.s_star,
        "c_ideal": c_ideal,
        "eta_info": result.c / c_ideal,
    }


def info_efficiency(tau, params, numerics=NumericsSettings()):
    """Share of the unit-efficiency Chernoff benchmark actually extracted"""
    if not tau > 0:
        raise DomainError(f"tau must be > 0, got {tau}")
    return score_metrics(tau, params, numerics)["eta_info"]
