"""
Readout Throughput - Run Configuration
Resolves built-in defaults, an optional TOML file and command-line overrides
into a validated RunConfig; unit conversion to SI happens here and only here
"""

import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field

from src.config.settings import BASELINE_CERTIFICATION, BASELINE_PHYSICAL, MICRO, NumericsSettings
from src.models.exceptions import ConfigurationError
from src.models.physics import PhysicalParams
from src.models.throughput import MIN_SCAN_POINTS, CertificationSpec

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ("csv", "json")


def parse_t1(value):
    """Number of microseconds or the token 'inf'"""
    if isinstance(value, str):
        token = value.strip().lower()
        if token in ("inf", "infinity"):
            return math.inf
        return float(token)
    return float(value)


def _positive(v):
    return v > 0


# (section, key) -> (coercion, predicate, requirement)
FIELD_RULES = {
    ("physical", "chi_over_2pi_mhz"): (float, _positive, "must be > 0"),
    ("physical", "kappa_over_2pi_mhz"): (float, _positive, "must be > 0"),
    ("physical", "n_bar"): (float, lambda v: v >= 0, "must be >= 0"),
    ("physical", "eta"): (float, lambda v: 0 < v <= 1, "must lie in (0, 1]"),
    ("physical", "t1_us"): (parse_t1, _positive, "must be > 0 or 'inf'"),
    ("certification", "tau_oh_us"): (float, lambda v: v >= 0, "must be >= 0"),
    ("certification", "epsilon"): (float, lambda v: 0 < v < 1, "must lie in (0, 1)"),
    ("certification", "tau_window_us"): (
        lambda v: tuple(float(x) for x in v),
        lambda v: len(v) == 2 and 0 < v[0] <= v[1],
        "must be [tau_min, tau_max] with 0 < tau_min <= tau_max",
    ),
    ("certification", "scan_points"): (int, lambda v: v >= MIN_SCAN_POINTS, f"must be >= {MIN_SCAN_POINTS}"),
    ("numerics", "x_grid_margin"): (float, lambda v: v >= 6, "must be >= 6"),
    ("numerics", "x_grid_max_spacing"): (float, _positive, "must be > 0"),
    ("numerics", "jump_nodes"): (int, lambda v: v >= 2, "must be >= 2"),
    ("numerics", "s_tol"): (float, _positive, "must be > 0"),
    ("numerics", "tau_tol_us"): (float, _positive, "must be > 0"),
    ("output", "format"): (str, lambda v: v in OUTPUT_FORMATS, "must be csv or json"),
    ("output", "path"): (lambda v: None if v in (None, "", "-") else str(v), lambda v: True, ""),
    ("run", "workers"): (int, lambda v: v >= 1, "must be >= 1"),
}


@dataclass(frozen=True)
class PhysicalSettings:
    chi_over_2pi_mhz: float
    kappa_over_2pi_mhz: float
    n_bar: float
    eta: float
    t1_us: float

    def to_params(self):
        return PhysicalParams.from_lab_units(**asdict(self))


@dataclass(frozen=True)
class CertificationSettings:
    tau_oh_us: float
    epsilon: float
    tau_window_us: tuple
    scan_points: int

    def to_spec(self):
        return CertificationSpec(
            tau_oh=self.tau_oh_us * MICRO,
            epsilon=self.epsilon,
            tau_window=(self.tau_window_us[0] * MICRO, self.tau_window_us[1] * MICRO),
            tau_scan_points=self.scan_points,
        )


@dataclass(frozen=True)
class OutputSettings:
    format: str = "csv"
    path: str = None


@dataclass(frozen=True)
class RunConfig:
    physical: PhysicalSettings
    certification: CertificationSettings
    numerics: NumericsSettings = field(default_factory=NumericsSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    workers: int = 1

    def to_physical_params(self):
        return self.physical.to_params()

    def to_certification_spec(self):
        return self.certification.to_spec()

    def to_dict(self):
        """Fully resolved configuration in user units, every default materialized

        The worker count is left out: it never changes the numbers.
        """
        physical = asdict(self.physical)
        if math.isinf(physical["t1_us"]):
            physical["t1_us"] = "inf"
        certification = asdict(self.certification)
        certification["tau_window_us"] = list(certification["tau_window_us"])
        return {
            "physical": physical,
            "certification": certification,
            "numerics": self.numerics.to_dict(),
            "output": {"format": self.output.format, "path": self.output.path or "-"},
        }


def _defaults():
    return {
        "physical": dict(BASELINE_PHYSICAL),
        "certification": dict(BASELINE_CERTIFICATION),
        "numerics": NumericsSettings().to_dict(),
        "output": {"format": "csv", "path": None},
        "run": {"workers": 1},
    }


def read_config_file(path):
    """Parse a TOML configuration file into nested sections"""
    try:
        with open(path, "rb") as handle:
            document = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigurationError("config", f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError("config", f"{path}: {exc}") from None
    for section, values in document.items():
        if not isinstance(values, dict):
            raise ConfigurationError(section, "expected a [section] table")
    return document


def _merge(resolved, section, key, value):
    if (section, key) not in FIELD_RULES:
        raise ConfigurationError(f"{section}.{key}", "unknown configuration key")
    resolved[section][key] = value


def load_run_config(path=None, overrides=None):
    """Defaults < file < overrides; overrides map (section, key) to a value or None

    ("certification", "tau_min_us") and ("certification", "tau_max_us") replace
    one end of the resolved window.
    """
    overrides = dict(overrides or {})
    window_edges = (
        overrides.pop(("certification", "tau_min_us"), None),
        overrides.pop(("certification", "tau_max_us"), None),
    )
    resolved = _defaults()
    if path:
        for section, values in read_config_file(path).items():
            for key, value in values.items():
                _merge(resolved, section, key, value)
    for (section, key), value in overrides.items():
        if value is not None:
            _merge(resolved, section, key, value)

    window = resolved["certification"]["tau_window_us"]
    if isinstance(window, (list, tuple)) and len(window) == 2:
        window = list(window)
        for position, edge in enumerate(window_edges):
            if edge is not None:
                window[position] = edge
        resolved["certification"]["tau_window_us"] = window

    for (section, key), (coerce, valid, requirement) in FIELD_RULES.items():
        name = f"{section}.{key}"
        try:
            value = coerce(resolved[section][key])
        except (TypeError, ValueError):
            raise ConfigurationError(name, f"cannot interpret {resolved[section][key]!r}") from None
        if not valid(value):
            raise ConfigurationError(name, f"{requirement}, got {value!r}")
        resolved[section][key] = value

    config = RunConfig(
        physical=PhysicalSettings(**resolved["physical"]),
        certification=CertificationSettings(**resolved["certification"]),
        numerics=NumericsSettings(**resolved["numerics"]),
        output=OutputSettings(**resolved["output"]),
        workers=resolved["run"]["workers"],
    )
    logger.debug("resolved configuration: %s", config.to_dict())
    return config
