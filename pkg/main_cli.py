"""
Readout Throughput - Command Line Interface
Curve tables, optimum reports, speedup sweeps, overhead scans, score
distributions and the numerical validation suite, emitted as CSV or JSON
"""

import argparse
import logging
import math
import sys

import numpy as np

from src.config.run_config import load_run_config, parse_t1
from src.config.settings import BASELINE_PHYSICAL, MICRO
from src.models.distributions import EXCITED, GROUND, ScoreDistribution, build_excited, build_ground
from src.models.exceptions import ConfigurationError, ReadoutModelError
from src.models.metrics import chernoff, chernoff_coefficient, make_xgrid
from src.models.physics import decayed_trajectory, delta_alpha, overlap_ratio
from src.models.sweeps import SweepAxis, export_curves, export_distributions, gaussian_validation, overhead_scan, run_sweep
from src.models.throughput import speedup
from src.utils.export_utils import frame_rows, open_sink, write_csv_table, write_json_document

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_CONFIG = 2

# Axes given in microseconds on the command line
TIME_AXES = ("t1", "tau_oh")

CURVE_OUTPUT_COLUMNS = [
    "tau_us",
    "delta_alpha_at_tau",
    "snr2",
    "fidelity",
    "chernoff",
    "s_star",
    "eta_info",
    "t_cert_us",
    "error",
]

OPTIMUM_OUTPUT_COLUMNS = [
    "tau_fid_us",
    "tau_rate_us",
    "t_cert_fid_us",
    "t_cert_rate_us",
    "speedup",
    "s_star_at_rate",
    "eta_info_at_rate",
    "fidelity_at_fid",
    "flags",
]

OVERHEAD_OUTPUT_COLUMNS = [
    "tau_oh_us",
    "tau_fid_us",
    "tau_rate_us",
    "t_cert_fid_us",
    "t_cert_rate_us",
    "speedup",
    "flag",
]

# Overhead-scan columns reported in microseconds
US_COLUMNS = ("tau_oh", "tau_fid", "tau_rate", "t_cert_fid", "t_cert_rate")

VALIDATION_COLUMNS = ["check", "passed", "value", "threshold"]

# Validation suite settings
VALIDATION_TAU_RANGE_US = (0.05, 3.0)
VALIDATION_TAU_POINTS = 30
GAUSSIAN_RESIDUAL_TOLERANCE = 1e-3
UNIT_GAUSSIAN_SEPARATIONS = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
UNIT_GAUSSIAN_TOLERANCE = 1e-4
S_STAR_TOLERANCE = 0.01
CONTINUITY_JUMP_US = 0.5
CONTINUITY_TOLERANCE = 1e-12
NORMALIZATION_TAUS_US = (0.1, 0.5, 1.0, 2.0, 5.0)
NORMALIZATION_TOLERANCE = 1e-12
COEFFICIENT_TOLERANCE = 1e-9
CONVERGENCE_TAU_US = 1.0
CONVERGENCE_TOLERANCE = 1e-6


def to_us(value):
    return value / MICRO


def parse_axis(text, flag):
    """`name:lo:hi:n[:log|linear]` or `name=v1,v2,...`; t1 and tau_oh in microseconds"""
    text = text.strip()
    try:
        if "=" in text:
            name, raw_values = text.split("=", 1)
            name = name.strip()
            values = [parse_t1(v) if name == "t1" else float(v) for v in raw_values.split(",") if v.strip()]
            if name in TIME_AXES:
                values = [v * MICRO for v in values]
            return SweepAxis.from_values(name, values)

        parts = text.split(":")
        if len(parts) not in (4, 5):
            raise ConfigurationError(flag, f"expected name:lo:hi:n[:log], got {text!r}")
        name, lo, hi, n = parts[0].strip(), float(parts[1]), float(parts[2]), int(parts[3])
        spacing = parts[4].strip() if len(parts) == 5 else "linear"
    except ValueError:
        raise ConfigurationError(flag, f"cannot interpret axis {text!r}") from None

    if name in TIME_AXES:
        lo, hi = lo * MICRO, hi * MICRO
    return SweepAxis(name=name, lo=lo, hi=hi, n=n, spacing=spacing)


def axis_display_values(axis):
    values = axis.values
    return values / MICRO if axis.name in TIME_AXES else values


def emit_table(config, columns, rows, extra_meta=None):
    """Write one table to the configured sink in the configured format"""
    with open_sink(config.output.path) as stream:
        if config.output.format == "json":
            document = {"config": config.to_dict()}
            if extra_meta:
                document["meta"] = extra_meta
            document["columns"] = columns
            document["data"] = rows
            write_json_document(stream, document)
        else:
            write_csv_table(stream, config.to_dict(), columns, rows, extra_meta)


def cmd_curve(args, config):
    params = config.to_physical_params()
    spec = config.to_certification_spec()
    table = export_curves(params, spec, spec.scan_grid(), config.numerics, config.workers)

    table = table.assign(tau=to_us(table["tau"]), t_cert=to_us(table["t_cert"]))
    table = table.rename(columns={"tau": "tau_us", "t_cert": "t_cert_us"})[CURVE_OUTPUT_COLUMNS]
    emit_table(config, CURVE_OUTPUT_COLUMNS, frame_rows(table))

    failed = int((table["error"] != "").sum())
    if failed:
        logger.error("%d of %d curve rows failed", failed, len(table))
        return EXIT_COMPUTE
    return EXIT_OK


def cmd_optimize(args, config):
    params = config.to_physical_params()
    spec = config.to_certification_spec()
    report = speedup(params, spec, config.numerics, workers=config.workers)

    row = [
        to_us(report.tau_fid),
        to_us(report.tau_rate),
        to_us(report.t_cert_at_fid),
        to_us(report.t_cert_at_rate),
        report.speedup,
        report.s_star_at_rate,
        report.eta_info_at_rate,
        report.fidelity_at_fid,
        "|".join(report.flags),
    ]
    emit_table(config, OPTIMUM_OUTPUT_COLUMNS, [row])
    return EXIT_OK


def cmd_sweep(args, config):
    axis1 = parse_axis(args.axis1, "axis1")
    axis2 = parse_axis(args.axis2, "axis2")
    result = run_sweep(
        config.to_physical_params(),
        config.to_certification_spec(),
        axis1,
        axis2,
        config.numerics,
        config.workers,
    )

    axes_meta = [
        {"name": axis.name, "spacing": axis.spacing, "values": axis_display_values(axis).tolist()}
        for axis in (axis1, axis2)
    ]
    with open_sink(config.output.path) as stream:
        if config.output.format == "json":
            write_json_document(stream, {
                "config": config.to_dict(),
                "axes": axes_meta,
                "data": result.values,
                "flags": result.flags.tolist(),
            })
        else:
            frame = result.to_frame()
            frame["axis1_value"] = np.repeat(axis_display_values(axis1), axis2.values.size)
            frame["axis2_value"] = np.tile(axis_display_values(axis2), axis1.values.size)
            extra_meta = {f"axis{k + 1}": meta for k, meta in enumerate(axes_meta)}
            write_csv_table(stream, config.to_dict(), list(frame.columns), frame_rows(frame), extra_meta)

    if np.any(result.flags == "error"):
        logger.error("sweep finished with failed cells")
        return EXIT_COMPUTE
    return EXIT_OK


def cmd_overhead(args, config):
    try:
        tau_oh_us = [float(v) for v in args.tau_oh_list.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError("tau_oh_list", f"cannot interpret {args.tau_oh_list!r}") from None
    if not tau_oh_us or any(v < 0 for v in tau_oh_us):
        raise ConfigurationError("tau_oh_list", "needs one or more overheads >= 0")

    params = config.to_physical_params()
    spec = config.to_certification_spec()
    table = overhead_scan(params, spec, [v * MICRO for v in tau_oh_us], config.numerics, config.workers)
    for column in US_COLUMNS:
        table[column] = to_us(table[column])
    table = table.rename(columns=lambda name: f"{name}_us" if name in US_COLUMNS else name)[OVERHEAD_OUTPUT_COLUMNS]
    emit_table(config, OVERHEAD_OUTPUT_COLUMNS, frame_rows(table))
    return EXIT_OK


def cmd_distributions(args, config):
    if not args.tau_us > 0:
        raise ConfigurationError("tau_us", f"must be > 0, got {args.tau_us}")
    table = export_distributions(config.to_physical_params(), args.tau_us * MICRO, config.numerics)
    emit_table(config, list(table.columns), frame_rows(table), {"distributions": {"tau_us": args.tau_us}})
    return EXIT_OK


def _finite_t1_params(params):
    # Checks that need relaxation fall back to the baseline T1 in the Gaussian limit
    if params.gaussian_limit:
        return params.with_overrides(t1=BASELINE_PHYSICAL["t1_us"] * MICRO)
    return params


def check_gaussian_residual(params, numerics):
    taus = np.geomspace(*VALIDATION_TAU_RANGE_US, VALIDATION_TAU_POINTS) * MICRO
    table = gaussian_validation(params.with_overrides(t1=math.inf), taus, numerics)
    worst = float(np.max(np.abs(table["residual"]) / table["c_theory"]))
    return [("gaussian_limit_residual", worst, GAUSSIAN_RESIDUAL_TOLERANCE)]


def check_unit_gaussians(numerics):
    rel_errors, s_offsets = [], []
    for d in UNIT_GAUSSIAN_SEPARATIONS:
        p = ScoreDistribution(weights=[1.0], means=[-0.5 * d], label=GROUND)
        q = ScoreDistribution(weights=[1.0], means=[0.5 * d], label=EXCITED)
        grid = make_xgrid(p, q, numerics.x_grid_margin, numerics.x_grid_max_spacing)
        result = chernoff(p, q, grid, numerics.s_tol)
        exact = d * d / 8.0
        rel_errors.append(abs(result.c - exact) / exact)
        s_offsets.append(abs(result.s_star - 0.5))
    return [
        ("unit_gaussian_chernoff", max(rel_errors), UNIT_GAUSSIAN_TOLERANCE),
        ("unit_gaussian_s_star", max(s_offsets), S_STAR_TOLERANCE),
    ]


def check_trajectory_continuity(params):
    t_j = CONTINUITY_JUMP_US * MICRO
    before = decayed_trajectory(np.nextafter(t_j, 0.0), t_j, params)
    at_jump = decayed_trajectory(t_j, t_j, params)
    gap = max(abs(at_jump - before), abs(at_jump - delta_alpha(t_j, params)))

    ends = overlap_ratio(np.array([0.0, t_j]), t_j, params)
    endpoint_error = max(abs(ends[0] + 1.0), abs(ends[1] - 1.0))
    return [
        ("trajectory_continuity", gap, CONTINUITY_TOLERANCE),
        ("overlap_ratio_endpoints", endpoint_error, CONTINUITY_TOLERANCE),
    ]


def check_normalization(params, numerics):
    weight_errors = [
        abs(build_excited(tau_us * MICRO, params, numerics.jump_nodes).weights.sum() - 1.0)
        for tau_us in NORMALIZATION_TAUS_US
    ]

    tau = CONVERGENCE_TAU_US * MICRO
    ground = build_ground(tau, params)
    excited = build_excited(tau, params, numerics.jump_nodes)
    grid = make_xgrid(ground, excited, numerics.x_grid_margin, numerics.x_grid_max_spacing)
    # g(0) integrates the excited density alone, g(1) the ground density
    g0 = chernoff_coefficient(ground, excited, grid, 0.0)
    g1 = chernoff_coefficient(ground, excited, grid, 1.0)
    return [
        ("mixture_weight_sum", max(weight_errors), NORMALIZATION_TOLERANCE),
        ("density_normalization", max(abs(g0 - 1.0), abs(g1 - 1.0)), COEFFICIENT_TOLERANCE),
    ]


def check_jump_convergence(params, numerics):
    tau = CONVERGENCE_TAU_US * MICRO
    ground = build_ground(tau, params)
    values = []
    for n_nodes in (numerics.jump_nodes, 2 * numerics.jump_nodes):
        excited = build_excited(tau, params, n_nodes)
        grid = make_xgrid(ground, excited, numerics.x_grid_margin, numerics.x_grid_max_spacing)
        values.append(chernoff(ground, excited, grid, numerics.s_tol).c)
    return [("jump_node_convergence", abs(values[1] - values[0]) / values[1], CONVERGENCE_TOLERANCE)]


def run_validation(config):
    """Every validation check as (name, value, threshold); a check passes when value < threshold"""
    params = config.to_physical_params()
    finite = _finite_t1_params(params)
    numerics = config.numerics

    checks = []
    for name, run in (
        ("gaussian_limit_residual", lambda: check_gaussian_residual(params, numerics)),
        ("unit_gaussian", lambda: check_unit_gaussians(numerics)),
        ("trajectory_continuity", lambda: check_trajectory_continuity(finite)),
        ("normalization", lambda: check_normalization(finite, numerics)),
        ("jump_node_convergence", lambda: check_jump_convergence(finite, numerics)),
    ):
        try:
            checks.extend(run())
        except ReadoutModelError as exc:
            logger.error("validation check %s raised: %s", name, exc)
            checks.append((name, math.nan, math.nan))
    return checks


def cmd_validate(args, config):
    rows = []
    for name, value, threshold in run_validation(config):
        passed = bool(value < threshold)
        if not passed:
            logger.error("validation check %s failed: %.3g (threshold %.3g)", name, value, threshold)
        rows.append([name, passed, value, threshold])
    emit_table(config, VALIDATION_COLUMNS, rows)
    return EXIT_OK if all(row[1] for row in rows) else EXIT_COMPUTE


COMMANDS = {
    "curve": cmd_curve,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "distributions": cmd_distributions,
    "overhead": cmd_overhead,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--chi-mhz", type=float, help="dispersive shift chi/2pi in MHz")
    common.add_argument("--kappa-mhz", type=float, help="cavity linewidth kappa/2pi in MHz")
    common.add_argument("--n-bar", type=float, help="mean intracavity photon number")
    common.add_argument("--eta", type=float, help="measurement efficiency")
    common.add_argument("--t1-us", help="qubit T1 in us, or 'inf'")
    common.add_argument("--tau-oh-us", type=float, help="per-shot overhead in us")
    common.add_argument("--epsilon", type=float, help="target certification error")
    common.add_argument("--tau-min-us", type=float, help="lower end of the tau window in us")
    common.add_argument("--tau-max-us", type=float, help="upper end of the tau window in us")
    common.add_argument("--scan-points", type=int, help="log-spaced tau scan points")
    common.add_argument("--jump-nodes", type=int, help="Gauss-Legendre nodes for the jump time")
    common.add_argument("--x-spacing", type=float, help="maximum score grid spacing")
    common.add_argument("--x-margin", type=float, help="score grid margin in standard deviations")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--out", help="output path, stdout when omitted")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")

    parser = argparse.ArgumentParser(
        prog="readout-throughput",
        description="Throughput-optimal dispersive readout under T1 relaxation",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("curve", parents=[common], help="per-tau curve table")
    subparsers.add_parser("optimize", parents=[common], help="fidelity- and throughput-optimal tau")

    sweep = subparsers.add_parser("sweep", parents=[common], help="two-parameter speedup map")
    sweep.add_argument("--axis1", required=True, help="name:lo:hi:n[:log] or name=v1,v2,...")
    sweep.add_argument("--axis2", required=True, help="name:lo:hi:n[:log] or name=v1,v2,...")

    subparsers.add_parser("validate", parents=[common], help="numerical validation suite")

    distributions = subparsers.add_parser("distributions", parents=[common], help="score densities at one tau")
    distributions.add_argument("--tau-us", type=float, default=1.0, help="integration time in us")

    overhead = subparsers.add_parser("overhead", parents=[common], help="speedup versus per-shot overhead")
    overhead.add_argument("--tau-oh-list", default="5,10,15,20,25,30", help="comma-separated overheads in us")
    return parser


def collect_overrides(args):
    """Command-line flags keyed by (section, key); unset flags stay None"""
    return {
        ("physical", "chi_over_2pi_mhz"): args.chi_mhz,
        ("physical", "kappa_over_2pi_mhz"): args.kappa_mhz,
        ("physical", "n_bar"): args.n_bar,
        ("physical", "eta"): args.eta,
        ("physical", "t1_us"): args.t1_us,
        ("certification", "tau_oh_us"): args.tau_oh_us,
        ("certification", "epsilon"): args.epsilon,
        ("certification", "tau_min_us"): args.tau_min_us,
        ("certification", "tau_max_us"): args.tau_max_us,
        ("certification", "scan_points"): args.scan_points,
        ("numerics", "jump_nodes"): args.jump_nodes,
        ("numerics", "x_grid_max_spacing"): args.x_spacing,
        ("numerics", "x_grid_margin"): args.x_margin,
        ("output", "format"): args.format,
        ("output", "path"): args.out,
        ("run", "workers"): args.workers,
    }


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        config = load_run_config(args.config, collect_overrides(args))
        return COMMANDS[args.command](args, config)
    except ConfigurationError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except ReadoutModelError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
