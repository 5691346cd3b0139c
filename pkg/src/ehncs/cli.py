"""Command-line orchestration: run, sweep, analyze, regions.

Every output file starts with comment lines carrying the config hash and
seed so results are traceable; identical (config, seed) pairs produce
byte-identical files.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .analysis import BoundUndefinedError, check_stability, mse_bound
from .channel import estimate_pitilde_stats
from .config import (ConfigError, ExperimentConfig, build_limiter, build_model,
                     build_setup, parse_config)
from .energy import estimate_inverse_mean
from .precoder import (baseline_capacity_wf, baseline_constant_power,
                       baseline_mmse_wf, baseline_periodic_wf, solve_theorem1)
from .sim import decision_region_scan, run_monte_carlo, sweep

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3

# offsets added to the config seed for the analysis-side RNG streams, kept
# clear of the per-path stream indices
_STATS_STREAM = 1_000_003
_ALPHA_STREAM = 1_000_019


def policy_factory(name: str, period: int = 3):
    """callable(setup) -> per-slot policy for each named scheme."""
    if name == "proposed":
        return lambda setup: solve_theorem1
    if name == "baseline1":
        return lambda setup: baseline_capacity_wf
    if name == "baseline2":
        return lambda setup: (lambda ctx: baseline_periodic_wf(ctx, period))
    if name == "baseline3":
        return lambda setup: baseline_mmse_wf
    if name == "baseline4":
        return lambda setup: (
            lambda ctx: baseline_constant_power(ctx, setup.arrivals.mean, "capacity"))
    if name == "baseline5":
        return lambda setup: (
            lambda ctx: baseline_constant_power(ctx, setup.arrivals.mean, "mmse"))
    raise ConfigError([f"policy: unknown policy {name!r}"])


def _header_rows(cfg: ExperimentConfig) -> list[list[str]]:
    return [[f"# config_hash={cfg.config_hash}"], [f"# seed={cfg.seed}"]]


def _write_csv(path: Path, cfg: ExperimentConfig, columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for line in _header_rows(cfg):
            writer.writerow(line)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def cmd_run(cfg: ExperimentConfig, out_dir: Path) -> int:
    setup = build_setup(cfg)
    policy = policy_factory(cfg.policy, cfg.period)(setup)
    result = run_monte_carlo(setup, policy, cfg.n_paths, cfg.n_slots, cfg.seed)
    rows = [[p_idx, p.mse, p.mean_tr_sigma, p.saturation_rate, p.duty_cycle,
             p.energy_used, p.energy_harvested, int(p.diverged)]
            for p_idx, p in enumerate(result.paths)]
    rows.append(["mean", result.mse.mean, result.tr_sigma.mean,
                 result.saturation_rate.mean, result.duty_cycle.mean, "", "",
                 result.n_diverged])
    rows.append(["ci95", result.mse.ci_half_width, result.tr_sigma.ci_half_width,
                 result.saturation_rate.ci_half_width,
                 result.duty_cycle.ci_half_width, "", "", ""])
    _write_csv(out_dir / "run.csv", cfg,
               ["path", "mse", "tr_sigma", "saturation_rate", "duty_cycle",
                "energy_used", "energy_harvested", "diverged"], rows)
    return EXIT_DIVERGENCE if result.n_diverged else EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, out_dir: Path) -> int:
    if not cfg.sweep_axis or not cfg.sweep_values:
        raise ConfigError(["sweep_axis/sweep_values: required for the sweep command"])
    setup = build_setup(cfg)
    factories = {name: policy_factory(name, cfg.period)
                 for name in ("proposed", "baseline1", "baseline2", "baseline3",
                              "baseline4", "baseline5")}
    rows = sweep(setup, factories, cfg.sweep_axis, cfg.sweep_values,
                 cfg.n_paths, cfg.n_slots, cfg.seed)
    table = [[r["policy"], r["axis"], r["value"], r["mse"], r["mse_ci"],
              r["tr_sigma"], r["saturation_rate"], r["duty_cycle"],
              r["n_diverged"]] for r in rows]
    _write_csv(out_dir / "sweep.csv", cfg,
               ["policy", "axis", "value", "mse", "mse_ci", "tr_sigma",
                "saturation_rate", "duty_cycle", "n_diverged"], table)
    n_div = sum(r["n_diverged"] for r in rows)
    return EXIT_DIVERGENCE if n_div else EXIT_OK


def cmd_analyze(cfg: ExperimentConfig, out_dir: Path, n_channel_samples: int = 100_000) -> int:
    model = build_model(cfg)
    params = build_limiter(cfg, model)
    stats = estimate_pitilde_stats(np.random.default_rng([cfg.seed, _STATS_STREAM]),
                                   cfg.N_c, cfg.N_s, cfg.K, n_channel_samples)
    if cfg.arrival == "deterministic":
        e_inv, zero_frac = 1.0 / cfg.mean_alpha, 0.0
    else:
        from .energy import ArrivalModel
        e_inv, zero_frac = estimate_inverse_mean(
            ArrivalModel(kind=cfg.arrival, mean=cfg.mean_alpha),
            np.random.default_rng([cfg.seed, _ALPHA_STREAM]))
    report = check_stability(model, params, stats, e_inv, cfg.theta, cfg.tau)
    lines = [
        f"# config_hash={cfg.config_hash}",
        f"# seed={cfg.seed}",
        f"satisfied: {str(report.satisfied).lower()}",
        f"lhs: {report.lhs!r}",
        f"rhs_max: {report.rhs_max!r}",
        f"xi_star: {report.xi_star!r}",
        f"delta: {report.delta!r}",
        f"margin: {report.margin!r}",
        f"inverse_arrival_mean: {e_inv!r} (zero-mass fraction {zero_frac!r})",
    ]
    for req in report.requirements:
        lines.append(f"requirement {req.name}: actual={req.actual!r} "
                     f"threshold={req.threshold!r} "
                     f"satisfied={str(req.satisfied).lower()}")
    try:
        mse = mse_bound(model, params, stats, e_inv, cfg.theta, cfg.tau,
                        xi_star=report.xi_star)
        lines.append(f"eta: {mse.eta!r}")
        lines.append(f"mse_bound: {mse.bound!r}")
    except BoundUndefinedError as exc:
        lines.append(f"mse_bound: undefined ({exc})")
    (out_dir / "stability_report.txt").write_text("\n".join(lines) + "\n")
    return EXIT_OK


# decision-region defaults matching the published plots
_REGION_DEFAULTS = dict(h1=4.0, sigma1=70.0, theta=36.0, tau=1.0,
                        h2_max=8.0, sigma2_max=100.0, n_grid=50,
                        energies=(12.0, 20.0))


def cmd_regions(cfg: ExperimentConfig, out_dir: Path, energies=None,
                n_grid: int | None = None) -> int:
    model = build_model(cfg)
    params = build_limiter(cfg, model)
    d = _REGION_DEFAULTS
    n = n_grid or d["n_grid"]
    h2_values = np.linspace(d["h2_max"] / n, d["h2_max"], n)
    sigma2_values = np.linspace(d["sigma2_max"] / n, d["sigma2_max"], n)
    rows = []
    for E in (energies or d["energies"]):
        scan = decision_region_scan(model, params, E, d["h1"], d["sigma1"],
                                    h2_values, sigma2_values, d["theta"], d["tau"])
        for i, s2 in enumerate(sigma2_values):
            for j, h2 in enumerate(h2_values):
                rows.append([float(E), float(h2), float(s2),
                             int(scan["active_streams"][i, j])])
    _write_csv(out_dir / "regions.csv", cfg,
               ["E", "h2", "sigma2", "active_streams"], rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehncs",
        description="Networked control with an energy-harvesting MIMO sensor: "
                    "simulation and analysis runner.")
    sub = parser.add_subparsers(dest="command")
    for name in ("run", "sweep", "analyze", "regions"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        p.add_argument("--paths", type=int)
        p.add_argument("--slots", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--policy")
        if name == "regions":
            p.add_argument("--energy", type=float, action="append")
            p.add_argument("--grid", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_VALIDATION
    try:
        cfg = parse_config(args.config)
        if args.paths is not None:
            cfg.n_paths = args.paths
        if args.slots is not None:
            cfg.n_slots = args.slots
        if args.seed is not None:
            cfg.seed = args.seed
        if args.policy is not None:
            cfg.policy = args.policy
            policy_factory(cfg.policy, cfg.period)  # validate the name
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "run":
            return cmd_run(cfg, out_dir)
        if args.command == "sweep":
            return cmd_sweep(cfg, out_dir)
        if args.command == "analyze":
            return cmd_analyze(cfg, out_dir)
        return cmd_regions(cfg, out_dir, energies=args.energy, n_grid=args.grid)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
