"""Command-line entry point: ``mamcast <experiment> [options]``, ``mamcast replay FILE``
and ``mamcast solve-instance FILE``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from mamcast.channel import (
    PositionGrid,
    dbm_to_watt,
    load_scenario,
    save_scenario,
    wavelength_from_ghz,
)
from mamcast.errors import ConfigError
from mamcast.harness.config import EXPERIMENTS, ExperimentConfig
from mamcast.harness.experiments import run_experiment, run_method, trial_scenarios
from mamcast.harness.figures import emit_figure_data, summary
from mamcast.los_bab import RESULT_COLUMNS, load_instance, solve_instance
from mamcast.placement import GainCache

log = logging.getLogger("mamcast")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; command-line flags override it")
    p.add_argument("--m", help="candidate positions M (comma list sweeps)")
    p.add_argument("--n", help="antennas N (comma list sweeps)")
    p.add_argument("--k", help="users K (comma list sweeps)")
    p.add_argument("--power-dbm", help="transmit power budget in dBm (comma list sweeps)")
    p.add_argument("--noise-dbm", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--methods", help="comma list of methods")
    p.add_argument("--init", choices=("fpa", "random"))
    p.add_argument("--out-dir", default="results")
    p.add_argument("--svg", action="store_true", help="also write an SVG line chart")
    p.add_argument("--save-scenarios", action="store_true",
                   help="write every sampled realisation as JSON for later replay")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mamcast", description="Movable-antenna multicast simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _common(sub.add_parser(name.replace("_", "-"), help=f"run the {name} experiment"))
    rp = sub.add_parser("replay", help="run methods on a saved scenario file")
    rp.add_argument("scenario")
    rp.add_argument("--m", type=int, default=25)
    rp.add_argument("--n", type=int, default=4)
    rp.add_argument("--power-dbm", type=float, default=10.0)
    rp.add_argument("--carrier-ghz", type=float)
    rp.add_argument("--methods", default="ao_sca,fpa")
    sp = sub.add_parser("solve-instance", help="run BAB / exhaustive search on a plain-text Q matrix file")
    sp.add_argument("instance")
    sp.add_argument("--methods", default="bab,exhaustive")
    sp.add_argument("--snr-db", type=float, default=0.0, help="per-antenna link SNR P*kappa/sigma^2 in dB")
    return parser


def _config(args) -> ExperimentConfig:
    experiment = args.command.replace("-", "_")
    overrides = {
        "m": args.m, "n": args.n, "k": args.k, "power_dbm": args.power_dbm,
        "noise_dbm": args.noise_dbm, "trials": args.trials, "seed": args.seed,
        "methods": args.methods, "init": args.init,
    }
    try:
        if args.config:
            return ExperimentConfig.from_file(args.config, experiment=experiment, **overrides)
        return ExperimentConfig.for_experiment(experiment, **overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _run(args) -> int:
    cfg = _config(args)
    out = Path(args.out_dir)
    records = run_experiment(cfg, progress=True)
    emit_figure_data(records, cfg.experiment, out, svg=args.svg)
    info = summary(records, cfg.experiment, cfg.eps)
    info["config"] = cfg.to_dict()
    (out / f"{cfg.experiment}_summary.json").write_text(json.dumps(info, indent=1, sort_keys=True))
    if args.save_scenarios:
        sdir = out / "scenarios"
        sdir.mkdir(parents=True, exist_ok=True)
        for trial, k, scen in trial_scenarios(cfg):
            save_scenario(sdir / f"{cfg.experiment}_t{trial:04d}_k{k}.json", scen,
                          carrier_ghz=cfg.carrier_ghz, trial=trial, seed=cfg.seed)
    for key in ("greedy_gap_median", "ao_converged_within_10", "ma_beats_fpa_grid_fraction"):
        if key in info:
            print(f"{key}: {info[key]:.6g}")
    print(f"wrote {out / (cfg.experiment + '.csv')}")
    return 0


def _replay(args) -> int:
    scenario, meta = load_scenario(args.scenario)
    carrier = args.carrier_ghz or meta.get("carrier_ghz", 5.0)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    cfg = ExperimentConfig.for_experiment(
        "two_user_los" if {"bab", "exhaustive"} & set(methods) else "rate_vs_power",
        m=args.m, n=args.n, k=len(scenario), power_dbm=args.power_dbm, methods=methods,
        carrier_ghz=carrier, trials=1,
    )
    grid = PositionGrid.for_size(args.m, wavelength_from_ghz(carrier))
    cache = GainCache.build(scenario, grid)
    P = float(dbm_to_watt(args.power_dbm))
    print("method,rate,iterations,visited_nodes")
    for method in methods:
        res = run_method(method, cfg, scenario, grid, args.n, P, cache, np.random.default_rng(0))
        print(f"{method},{res['rate']:.12g},{res.get('iterations', 0)},{res.get('visited_nodes', 0)}")
    return 0


def _solve_instance(args) -> int:
    try:
        Q, n = load_instance(args.instance)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read instance {args.instance}: {exc}") from exc
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = set(methods) - {"bab", "exhaustive"}
    if bad or not 1 <= n <= Q.shape[0]:
        raise ConfigError(f"unsupported methods {sorted(bad)} or N={n} outside 1..{Q.shape[0]}")
    print(",".join(RESULT_COLUMNS))
    for row in solve_instance(Q, n, methods, 10 ** (args.snr_db / 10)):
        print(",".join(format(v, ".12g") if isinstance(v, float) else str(v) for v in row))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            return _replay(args)
        if args.command == "solve-instance":
            return _solve_instance(args)
        return _run(args)
    except ConfigError as exc:
        print(f"mamcast: invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
