"""
Readout Throughput - Score Distributions
Ground and excited matched-filter score distributions as unit-variance
Gaussian mixtures, with the T1 jump-time quadrature and log-domain densities
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp

from src.models.exceptions import DomainError, ParameterError
from src.models.physics import overlap_ratio, snr_squared

logger = logging.getLogger(__name__)

DEFAULT_JUMP_NODES = 200
WEIGHT_TOLERANCE = 1e-12
HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)

GROUND = "ground"
EXCITED = "excited"


def _frozen(values):
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScoreDistribution:
    """Finite mixture of unit-variance Gaussians"""

    weights: np.ndarray
    means: np.ndarray
    label: str

    def __post_init__(self):
        weights = _frozen(self.weights)
        means = _frozen(self.means)
        if weights.ndim != 1 or weights.shape != means.shape or weights.size == 0:
            raise ParameterError("weights and means must be non-empty 1-d arrays of equal length")
        if np.any(weights <= 0):
            raise ParameterError("mixture weights must be positive")
        if abs(weights.sum() - 1.0) > WEIGHT_TOLERANCE:
            raise ParameterError(f"mixture weights sum to {weights.sum():.15f}, not 1")
        if not np.all(np.isfinite(means)):
            raise ParameterError("component means must be finite")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)

    @property
    def components(self):
        return list(zip(self.weights.tolist(), self.means.tolist()))

    @property
    def n_components(self):
        return self.weights.size

    def log_pdf(self, x):
        return log_pdf(self, x)


@dataclass(frozen=True, eq=False)
class JumpQuadrature:
    """Jump times and their probabilities inside the integration window"""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def decay_mass(self):
        return float(self.weights.sum())


def _check_window(tau):
    tau = float(tau)
    if not tau > 0:
        raise DomainError(f"tau must be > 0, got {tau}")
    return tau


def _half_snr(tau, params):
    return 0.5 * math.sqrt(snr_squared(tau, params))


def build_ground(tau, params):
    """Ground-state score distribution: a single Gaussian at -SNR/2"""
    tau = _check_window(tau)
    return ScoreDistribution(weights=[1.0], means=[-_half_snr(tau, params)], label=GROUND)


def jump_quadrature(tau, t1, n_nodes=DEFAULT_JUMP_NODES):
    """Gauss-Legendre discretization of the decay-time density on (0, tau)"""
    tau = _check_window(tau)
    if math.isinf(t1):
        raise DomainError("jump_quadrature needs a finite t1; use the survival-only path")
    if not t1 > 0:
        raise DomainError(f"t1 must be > 0, got {t1}")
    if n_nodes < 2:
        raise DomainError(f"n_nodes must be >= 2, got {n_nodes}")

    x, w = leggauss(int(n_nodes))
    nodes = 0.5 * tau * (x + 1.0)
    weights = 0.5 * tau * w * np.exp(-nodes / t1) / t1

    # Renormalize to the exact decay mass 1 - exp(-tau/T1)
    decay_mass = -math.expm1(-tau / t1)
    weights = weights * (decay_mass / weights.sum())
    return JumpQuadrature(nodes=_frozen(nodes), weights=_frozen(weights))


def build_excited(tau, params, n_nodes=DEFAULT_JUMP_NODES):
    """Excited-state score distribution including relaxation during the window"""
    tau = _check_window(tau)
    half_snr = _half_snr(tau, params)
    if params.gaussian_limit:
        return ScoreDistribution(weights=[1.0], means=[half_snr], label=EXCITED)

    quadrature = jump_quadrature(tau, params.t1, n_nodes)
    ratios = overlap_ratio(quadrature.nodes, tau, params)
    survival = math.exp(-tau / params.t1)

    weights = np.concatenate(([survival], quadrature.weights))
    means = np.concatenate(([half_snr], ratios * half_snr))
    # Nodes too far into the tail of the decay density can underflow to zero weight
    keep = weights > 0
    if not np.all(keep):
        logger.debug("dropping %d zero-weight jump components", int((~keep).sum()))
        weights = weights[keep] / weights[keep].sum()
        means = means[keep]
    return ScoreDistribution(weights=weights, means=means, label=EXCITED)


def log_pdf(dist, x):
    """log sum_i w_i N(x; mu_i, 1), evaluated with log-sum-exp"""
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x)
    exponents = (
        np.log(dist.weights)[:, None]
        - 0.5 * (flat[None, :] - dist.means[:, None]) ** 2
    )
    values = logsumexp(exponents, axis=0) - HALF_LOG_TWO_PI
    return float(values[0]) if x.ndim == 0 else values.reshape(x.shape)
