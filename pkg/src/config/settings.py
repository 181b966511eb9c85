"""
Readout Throughput - Default Settings
Baseline device parameters, certification defaults and numerical settings
"""

from dataclasses import asdict, dataclass

# Baseline transmon readout parameters (frequencies cyclic, in MHz; times in us)
BASELINE_PHYSICAL = {
    "chi_over_2pi_mhz": 1.2,
    "kappa_over_2pi_mhz": 5.0,
    "n_bar": 80.0,
    "eta": 0.45,
    "t1_us": 30.0,
}

BASELINE_CERTIFICATION = {
    "tau_oh_us": 15.0,
    "epsilon": 1e-4,
    "tau_window_us": (0.05, 5.0),
    "scan_points": 120,
}

# Default axis ranges for the (T1, eta) and (n_bar, tau_oh) speedup maps
T1_ETA_AXES = (("t1", 10.0, 60.0), ("eta", 0.3, 0.7))
NBAR_OVERHEAD_AXES = (("n_bar", 40.0, 120.0), ("tau_oh", 5.0, 30.0))
SWEEP_RESOLUTION = 25

MICRO = 1e-6


@dataclass(frozen=True)
class NumericsSettings:
    """Discretization and tolerance knobs of the numerical pipeline"""

    x_grid_margin: float = 12.0
    x_grid_max_spacing: float = 0.02
    jump_nodes: int = 200
    s_tol: float = 1e-5
    tau_tol_us: float = 1e-3

    @property
    def tau_tol(self):
        return self.tau_tol_us * MICRO

    def to_dict(self):
        return asdict(self)
