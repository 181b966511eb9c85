"""
Readout Throughput - Cavity Physics
Closed-form cavity response, matched-filter SNR and post-jump trajectories
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.models.exceptions import DomainError, ParameterError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
GL_ORDER = 64
# Below this value of kappa*tau the SNR bracket is evaluated by its series
SERIES_CUTOFF = 1e-3

_GL_NODES, _GL_WEIGHTS = leggauss(GL_ORDER)


@dataclass(frozen=True)
class PhysicalParams:
    """Device constants, stored in SI units (rad/s, seconds)"""

    chi: float
    kappa: float
    n_bar: float
    eta: float
    t1: float

    def __post_init__(self):
        if not self.chi > 0:
            raise ParameterError(f"chi must be > 0, got {self.chi}")
        if not self.kappa > 0:
            raise ParameterError(f"kappa must be > 0, got {self.kappa}")
        if not self.n_bar >= 0:
            raise ParameterError(f"n_bar must be >= 0, got {self.n_bar}")
        if not 0 < self.eta <= 1:
            raise ParameterError(f"eta must lie in (0, 1], got {self.eta}")
        if not self.t1 > 0:
            raise ParameterError(f"t1 must be > 0 or infinite, got {self.t1}")

    @classmethod
    def from_lab_units(cls, chi_over_2pi_mhz, kappa_over_2pi_mhz, n_bar, eta, t1_us):
        """Build from cyclic MHz frequencies and a T1 in microseconds"""
        return cls(
            chi=TWO_PI * chi_over_2pi_mhz * 1e6,
            kappa=TWO_PI * kappa_over_2pi_mhz * 1e6,
            n_bar=float(n_bar),
            eta=float(eta),
            t1=math.inf if math.isinf(t1_us) else t1_us * 1e-6,
        )

    @property
    def signal_scale(self):
        """Steady-state separation 4*chi/kappa"""
        return 4.0 * self.chi / self.kappa

    @property
    def snr_rate(self):
        """Asymptotic slope eta*kappa*n_bar*(4chi/kappa)^2 of SNR^2, in 1/s"""
        return self.eta * self.kappa * self.n_bar * self.signal_scale ** 2

    @property
    def gaussian_limit(self):
        return math.isinf(self.t1)

    def with_overrides(self, **changes):
        return replace(self, **changes)


def _non_negative(value, name):
    arr = np.asarray(value, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must be >= 0, got {value}")
    return arr


def _scalar_or_array(arr):
    return float(arr) if arr.ndim == 0 else arr


def delta_alpha(t, params):
    """Cavity separation (4chi/kappa)(1 - exp(-kappa t / 2))"""
    t = _non_negative(t, "t")
    return _scalar_or_array(-params.signal_scale * np.expm1(-0.5 * params.kappa * t))


def _snr_bracket(tau, kappa):
    # tau - (4/k)(1 - e^{-k tau/2}) + (1/k)(1 - e^{-k tau})
    x = kappa * tau
    closed = tau + (4.0 / kappa) * np.expm1(-0.5 * x) - (1.0 / kappa) * np.expm1(-x)
    series = (x ** 3 / 12.0 - x ** 4 / 32.0 + 7.0 * x ** 5 / 960.0) / kappa
    return np.where(x < SERIES_CUTOFF, series, closed)


def snr_squared(tau, params):
    """Matched-filter SNR^2 accumulated over [0, tau]"""
    tau = _non_negative(tau, "tau")
    return _scalar_or_array(params.snr_rate * _snr_bracket(tau, params.kappa))


def snr_squared_derivative(tau, params):
    """d SNR^2 / d tau = eta kappa n_bar delta_alpha(tau)^2"""
    tau = _non_negative(tau, "tau")
    da = -params.signal_scale * np.expm1(-0.5 * params.kappa * tau)
    return _scalar_or_array(params.eta * params.kappa * params.n_bar * da ** 2)


def decayed_trajectory(t, t_j, params):
    """Cavity displacement for a qubit that relaxes at t_j"""
    t = _non_negative(t, "t")
    t_j = _non_negative(t_j, "t_j")
    return _scalar_or_array(_trajectory(t, t_j, params))


def _trajectory(t, t_j, params):
    scale = params.signal_scale
    half_kappa = 0.5 * params.kappa
    before = -scale * np.expm1(-half_kappa * t)
    at_jump = -scale * np.expm1(-half_kappa * t_j)
    # exponent clipped so the unused branch never overflows
    memory = 2.0 * at_jump * np.exp(-half_kappa * np.maximum(t - t_j, 0.0))
    return np.where(t < t_j, before, memory - before)


def overlap_ratio(t_j, tau, params):
    """Matched-filter projection of a decayed trajectory, normalized to [-1, 1]

    Both integrals are split at the jump time and evaluated with a fixed
    Gauss-Legendre rule on each side, since the integrand has a kink there.
    """
    tau = float(tau)
    if not tau > 0:
        raise DomainError(f"tau must be > 0, got {tau}")
    t_j = np.asarray(t_j, dtype=float)
    if np.any(np.isnan(t_j)) or np.any(t_j < 0) or np.any(t_j > tau):
        raise DomainError(f"t_j must lie in [0, {tau}], got {t_j}")

    jumps = np.atleast_1d(t_j)[:, None]
    scale = params.signal_scale
    half_kappa = 0.5 * params.kappa

    # Pre-jump segment [0, t_j]: trajectory equals the filter
    pre_t = 0.5 * jumps * (_GL_NODES + 1.0)
    pre_w = 0.5 * jumps * _GL_WEIGHTS
    pre_filter = -scale * np.expm1(-half_kappa * pre_t)
    pre_energy = np.sum(pre_w * pre_filter ** 2, axis=1)

    # Post-jump segment [t_j, tau]
    post_t = jumps + 0.5 * (tau - jumps) * (_GL_NODES + 1.0)
    post_w = 0.5 * (tau - jumps) * _GL_WEIGHTS
    post_filter = -scale * np.expm1(-half_kappa * post_t)
    post_alpha = _trajectory(post_t, jumps, params)
    post_energy = np.sum(post_w * post_filter ** 2, axis=1)
    post_projection = np.sum(post_w * post_filter * post_alpha, axis=1)

    ratio = (pre_energy + post_projection) / (pre_energy + post_energy)
    ratio = np.clip(ratio, -1.0, 1.0)
    return float(ratio[0]) if t_j.ndim == 0 else ratio
