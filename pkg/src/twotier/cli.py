"""Command line front end.

Subcommands mirror the experiment harnesses:

* ``contour``    -- per-tier SINR frontier CSVs for configured positions
* ``linkbudget`` -- link budget vs path-loss exponent plus a CDF over
                    random layouts
* ``adapt``      -- one utility-adaptation run with a per-iteration trace
* ``protect``    -- one link-quality protection run with an epoch trace
* ``mc-exp1``    -- Monte Carlo femtocell SINR gains per (a, b)
* ``mc-exp2``    -- Monte Carlo protection metrics
* ``table2``     -- the reference 16-femtocell protection scenario

All outputs are CSV files under --out. Exit code 0 on success, 1 on
configuration or validation errors.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from twotier.channel import build_gain_matrix
from twotier.experiments import (ConfigError, ExperimentConfig, calibrate_noise,
                                 contour_experiment, experiment_one, experiment_two,
                                 linkbudget_experiment, rescale_infeasible,
                                 sample_femto_targets_db, table2_csv, trial_rng)
from twotier.feasibility import SinrTargets, spectral_radius
from twotier.game import run_to_equilibrium, trace_to_csv
from twotier.geometry import layout_to_csv
from twotier.protection import protection_trace_to_csv, run_protection


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twotier",
        description="Uplink power control simulator for two-tier networks")
    parser.add_argument("--config", type=Path, help="YAML config file")
    parser.add_argument("--seed", type=int, help="master RNG seed (overrides config)")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials (overrides config)")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--threads", type=int, help="parallel trial workers")
    parser.add_argument("-n", "--n-femto", type=int, dest="n_femto",
                        help="femtocell count for single-run commands")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("contour", "linkbudget", "adapt", "protect", "mc-exp1",
                 "mc-exp2", "table2"):
        sub.add_parser(name)
    return parser


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_yaml(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
    if args.threads is not None:
        cfg.threads = args.threads
    if args.n_femto is not None:
        cfg.n_femto = args.n_femto
    cfg.validate()
    return cfg


def _single_run_inputs(cfg: ExperimentConfig):
    """Common setup for adapt/protect: geometry, gains, sampled targets."""
    rng = trial_rng(cfg.seed, 0)
    geom = cfg.build_geometry(rng=rng)
    params = cfg.propagation()
    gm = build_gain_matrix(geom, params, tx_at_ap=cfg.cross_gains_at_ap)
    sigma2 = calibrate_noise(params, cfg.p_max_w, cfg.cell_radius_m)
    gamma_f = 10.0 ** (sample_femto_targets_db(
        rng, cfg.n_femto, cfg.gamma_f_min_db, cfg.gamma_f_max_db) / 10.0)
    gamma_f, _, _ = rescale_infeasible(gamma_f, gm.F)
    gamma_c_db = rng.uniform(cfg.gamma_c_min_db, cfg.gamma_c_max_db)
    targets = SinrTargets(10.0 ** (gamma_c_db / 10.0), gamma_f)
    return geom, gm, targets, sigma2


def cmd_adapt(cfg: ExperimentConfig, out: Path) -> None:
    geom, gm, targets, sigma2 = _single_run_inputs(cfg)
    layout_to_csv(geom, out / "layout.csv")
    trace = []
    state, converged, iters = run_to_equilibrium(
        gm, targets, cfg.game_params(), sigma2, trace=trace)
    trace_to_csv(trace, gm, sigma2, out / "adapt_trace.csv")
    rho, _ = spectral_radius(targets.as_vector()[:, None] * gm.normalized)
    print(f"adapt: n={cfg.n_femto} rho={rho:.4f} converged={converged} "
          f"iterations={iters} gamma0={10 * np.log10(state.sinr[0]):.3f} dB")


def cmd_protect(cfg: ExperimentConfig, out: Path) -> None:
    geom, gm, targets, sigma2 = _single_run_inputs(cfg)
    layout_to_csv(geom, out / "layout.csv")
    outcome = run_protection(gm, targets, cfg.game_params(a=1.0, b=1.0),
                             cfg.protection_config(), sigma2)
    protection_trace_to_csv(outcome, out / "protect_trace.csv")
    print(f"protect: n={cfg.n_femto} protected={outcome.protected} "
          f"epochs={outcome.epochs} mean_femto_sinr={outcome.mean_femto_sinr_db:.3f} dB "
          f"frac_degraded={outcome.frac_degraded:.3f} "
          f"mean_pct_reduction={outcome.mean_pct_reduction:.4f}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "contour":
            paths = contour_experiment(cfg, out)
            print("\n".join(str(p) for p in paths))
        elif args.command == "linkbudget":
            paths = linkbudget_experiment(cfg, out)
            print("\n".join(str(p) for p in paths))
        elif args.command == "adapt":
            cmd_adapt(cfg, out)
        elif args.command == "protect":
            cmd_protect(cfg, out)
        elif args.command == "mc-exp1":
            summary = experiment_one(cfg, out / "exp1.csv")
            for (n, a, b), agg in summary.items():
                print(f"exp1 n={n} a={a} b={b}: mean_sinr={agg['mean_sinr_db']:.3f} dB "
                      f"mean_min_target={agg['mean_min_target_db']:.3f} dB")
        elif args.command == "mc-exp2":
            summary = experiment_two(cfg, out / "exp2.csv")
            for n, agg in summary.items():
                print(f"exp2 n={n}: mean_sinr={agg['mean_sinr_db']:.3f} dB "
                      f"mean_min_target={agg['mean_min_target_db']:.3f} dB "
                      f"frac_degraded={agg['frac_degraded']:.3f} "
                      f"mean_pct_reduction={agg['mean_pct_reduction']:.4f}")
        elif args.command == "table2":
            outcome = table2_csv(cfg, out / "table2.csv")
            protection_trace_to_csv(outcome, out / "table2_trace.csv")
            print(f"table2: protected={outcome.protected} epochs={outcome.epochs} "
                  f"final_rho={outcome.final_rho:.6f}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
