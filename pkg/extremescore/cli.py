"""
Command-line surface.

Usage:
    uv run extremescore score --law gev --mu 0 --sigma 1 --gamma 0.12 --score swCRPS --p 0.9 1.7 3.2
    uv run extremescore score --ensemble members.txt --score CRPS 0.4
    uv run extremescore fit --data stations.csv --covariate temp.csv --model pgev_lambda --regional
    uv run extremescore bench       --config configs/bench.env --seed 1 --out out/bench
    uv run extremescore sim-scale   --config configs/scale.env --seed 1 --out out/scale --plots
    uv run extremescore sim-paired  --seed 1 --out out/paired
    uv run extremescore sim-lakes   --seed 1 --out out/lakes --threads 4
    uv run extremescore eval        --config configs/eval.env --seed 1 --out out/eval
    uv run extremescore perm-trend  --config configs/perm.env --seed 1 --out out/perm

Exit codes: 0 ok, 2 config, 3 data, 4 numerical, 1 anything else.
Scores print positively oriented (higher is better); --negate-display flips
the printed sign only.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from extremescore.config import build_config, configure_logging, read_config_file, runtime_settings
from extremescore.distributions import Ensemble, GevParams, PgevParams, gev_quantile, pgev_to_gev
from extremescore.errors import ConfigError, DataError, ExtremeScoreError, ParseError
from extremescore.experiments import run_experiment
from extremescore.inference import ModelSpec, OptimizerConfig, RegionalFit, fit_mle
from extremescore.results import emit_results
from extremescore.rules import ScoreRule, evaluate_score
from extremescore.series import join_covariate, load_covariate_csv, load_station_csv

logger = logging.getLogger(__name__)

EXPERIMENT_COMMANDS = {
    "bench": "Benchmark",
    "sim-scale": "ScaleThreshold",
    "sim-paired": "PairedScale",
    "sim-lakes": "LakesSim",
    "eval": "StationEval",
    "perm-trend": "PermTrend",
}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value experiment file")
    common.add_argument("--seed", type=int, help="master seed (overrides master_seed in the config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--plots", action="store_true", help="also write SVG figures")
    common.add_argument("--threads", type=int, help="worker threads (default: EXTREMESCORE_THREADS or 1)")
    common.add_argument("--negate-display", action="store_true", help="print scores with flipped sign")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="extremescore", description="Scoring rules for extreme-value forecasts")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("score", parents=[common], help="score observations under one forecast")
    sp.add_argument("--law", choices=["gev", "pgev"], default="gev")
    sp.add_argument("--mu", type=float, default=0.0)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--gamma", type=float, default=0.0)
    sp.add_argument("--lam", type=float, default=1.0, help="PGEV exceedance frequency")
    sp.add_argument("--sigma-u", type=float, default=1.0, help="PGEV excess scale")
    sp.add_argument("--u", type=float, default=0.0, help="PGEV reference level")
    sp.add_argument("--ensemble", help="file with one ensemble member per line (overrides --law)")
    sp.add_argument("--score", choices=["LS", "LSq", "CRPS", "SCRPS", "wCRPS", "swCRPS"], default="CRPS")
    thr = sp.add_mutually_exclusive_group()
    thr.add_argument("--q", type=float, help="absolute weight threshold")
    thr.add_argument("--p", type=float, help="threshold as a quantile level of the forecast")
    sp.add_argument("y", type=float, nargs="+", help="observation(s)")

    fp = sub.add_parser("fit", parents=[common], help="maximum-likelihood fit of a station file")
    fp.add_argument("--data", required=True, help="CSV station_id,year,value[,covariate]")
    fp.add_argument("--covariate", help="CSV year,covariate")
    fp.add_argument("--model", choices=["gumbel", "gev", "gev_mu", "pgev_lambda"], default="gev")
    fp.add_argument("--regional", action="store_true", help="one shape shared by all stations")
    fp.add_argument("--min-years", type=int, default=20)
    fp.add_argument("--restarts", type=int, default=5)

    for cmd, name in EXPERIMENT_COMMANDS.items():
        sub.add_parser(cmd, parents=[common], help=f"run the {name} experiment")
    return parser


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------
def _load_ensemble(path: str) -> Ensemble:
    try:
        members = np.loadtxt(path, dtype=float, ndmin=1)
    except ValueError as e:
        raise ParseError(f"{path}: {e}") from None
    if members.size == 0:
        raise DataError(f"{path}: ensemble file is empty")
    return Ensemble(members=tuple(float(m) for m in members))


def _forecast(args):
    if args.ensemble:
        return _load_ensemble(args.ensemble)
    if args.law == "pgev":
        return PgevParams(lam=args.lam, sigma_u=args.sigma_u, gamma=args.gamma, u=args.u)
    return GevParams(mu=args.mu, sigma=args.sigma, gamma=args.gamma)


def _threshold(args, forecast) -> float | None:
    if args.q is not None:
        return args.q
    if args.p is None:
        return None
    if isinstance(forecast, Ensemble):
        return float(np.quantile(forecast.as_array(), args.p))
    if isinstance(forecast, PgevParams):
        forecast = pgev_to_gev(forecast)
    return float(gev_quantile(forecast, args.p))


def cmd_score(args) -> int:
    forecast = _forecast(args)
    q = _threshold(args, forecast)
    if args.score in ("LSq", "wCRPS", "swCRPS") and q is None:
        raise ConfigError(f"{args.score} needs --q or --p")
    rule = ScoreRule.named(args.score, q)
    sign = -1.0 if args.negate_display else 1.0
    values = np.atleast_1d(np.asarray(evaluate_score(rule, forecast, np.asarray(args.y, dtype=float)), dtype=float))
    for y, s in zip(args.y, values):
        print(f"y={y:.17g}\t{rule.name}={sign * s:.17g}")
    return 0


def cmd_fit(args) -> int:
    load = load_station_csv(args.data, args.min_years)
    series = load.series
    if args.covariate:
        series = join_covariate(series, load_covariate_csv(args.covariate))
    series = [s for s in series if s.station_id not in set(load.short_stations)]
    if not series:
        raise DataError(f"{args.data}: no station with at least {args.min_years} years")
    settings = runtime_settings()
    cfg = OptimizerConfig(
        n_restarts=args.restarts,
        min_obs=min(20, args.min_years),
        threads=args.threads or settings.threads,
    )
    spec = ModelSpec(family=args.model)
    seed = args.seed if args.seed is not None else 0
    fit = fit_mle(spec, series if len(series) > 1 or args.regional else series[0], args.regional, cfg, seed)
    fits = fit.stations if isinstance(fit, RegionalFit) else [fit]
    if isinstance(fit, RegionalFit) and fit.gamma is not None:
        se = fit.gamma_std_err
        print(f"regional gamma={fit.gamma:.6g}" + (f" (se {se:.3g})" if se is not None else ""))
    for f in fits:
        parts = []
        for k, v in f.params.items():
            se = (f.std_errs or {}).get(k)
            parts.append(f"{k}={v:.6g}" + (f" ({se:.3g})" if se is not None else ""))
        flag = "" if f.converged else "\t[not converged]"
        print(f"{f.station_id}\t" + "\t".join(parts) + f"\tnll={f.neg_loglik:.6f}{flag}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rows = [
            {"station_id": f.station_id, "param": k, "estimate": v, "std_err": (f.std_errs or {}).get(k, math.nan)}
            for f in fits
            for k, v in f.params.items()
        ]
        pd.DataFrame.from_records(rows).to_csv(out / "fits.csv", index=False, float_format="%.17g", lineterminator="\n")
    return 0


def cmd_experiment(args) -> int:
    started = datetime.now(timezone.utc)
    name = EXPERIMENT_COMMANDS[args.command]
    values = read_config_file(args.config) if args.config else {}
    if values.get("experiment", name) != name:
        raise ConfigError(f"config names experiment {values['experiment']} but '{args.command}' runs {name}")
    values["experiment"] = name
    if args.seed is not None:
        values["master_seed"] = args.seed
    cfg = build_config(values)
    threads = args.threads or runtime_settings().threads
    result, inputs = run_experiment(cfg, threads)
    out = Path(args.out or f"out/{args.command}")
    emit_results(result, out, plots=args.plots, config=cfg, inputs=inputs, started_at=started)
    print(f"{name}: {len(result.records)} records, {len(result.summary)} summary rows -> {out}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------
def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configure_logging(runtime_settings().log_level)
        if args.command == "score":
            return cmd_score(args)
        if args.command == "fit":
            return cmd_fit(args)
        return cmd_experiment(args)
    except ExtremeScoreError as e:
        print(f"[extremescore] error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"[extremescore] error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
