"""Command line pipeline: ingest, synth, train, search, backtest, cluster, report.

Every command writes into a fresh run directory (reruns need a new one) and
finishes by writing a manifest with input digests so a run can be audited
and replayed. Exit codes: 0 success, 1 generic failure or exhausted budget,
2 configuration error, 3 data error, 4 numeric failure during training.

Heavy imports happen inside the command handlers: QUANTNET_THREADS must be
applied to the BLAS thread-pool environment before numpy first loads.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .errors import (
    BudgetExhausted,
    ConfigError,
    DataError,
    NumericError,
    QuantNetError,
)

BASELINE_NAMES = ("buy_and_hold", "risk_parity", "ts_momentum", "cs_momentum")


def apply_thread_cap() -> None:
    """Honor QUANTNET_THREADS: 0 or unset means library default (auto)."""
    raw = os.environ.get("QUANTNET_THREADS")
    if raw is None or raw.strip() == "":
        return
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"QUANTNET_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise ConfigError(f"QUANTNET_THREADS must be >= 0, got {n}")
    if n == 0:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def _prepare_run_dir(out: str) -> Path:
    run_dir = Path(out)
    if run_dir.exists():
        if any(run_dir.iterdir()):
            raise ConfigError(
                f"run directory {run_dir} already has contents; outputs are "
                "immutable, pick a fresh directory"
            )
    else:
        run_dir.mkdir(parents=True)
    return run_dir


def _digest_data_dir(mf, data_dir: Path) -> None:
    for path in sorted(data_dir.glob("*.csv")):
        mf.add_input(path)


def _load_panels(data_dir: str):
    from .panels import load_panel_dir

    return {p.market_id: p for p in load_panel_dir(data_dir)}


def cmd_ingest(args) -> int:
    from .manifest import RunManifest
    from .panels import ingest_csv, write_panel_dir

    t0 = time.perf_counter()
    in_dir = Path(args.input)
    if not in_dir.is_dir():
        raise DataError(f"input directory not found: {in_dir}")
    files = sorted(in_dir.glob("*.csv"))
    if not files:
        raise DataError(f"no CSV files in {in_dir}")
    run_dir = _prepare_run_dir(args.out)
    panels = [ingest_csv(f, rate_path=args.rates, mode=args.mode) for f in files]
    write_panel_dir(panels, run_dir)
    mf = RunManifest(
        command="ingest",
        config={"mode": args.mode, "rates": args.rates or ""},
        seed=0,
    )
    for f in files:
        mf.add_input(f)
    if args.rates:
        mf.add_input(args.rates)
    mf.add_output("index", run_dir, run_dir / "markets.csv")
    for p in panels:
        mf.add_output(f"panel:{p.market_id}", run_dir, run_dir / f"{p.market_id}.csv")
    mf.timings["total"] = time.perf_counter() - t0
    mf.write(run_dir)
    print(f"ingested {len(panels)} market(s) into {run_dir}")
    return 0


def cmd_synth(args) -> int:
    from .manifest import RunManifest
    from .panels import write_panel_dir
    from .synthetic import SynthSpec, generate_synth

    t0 = time.perf_counter()
    spec = SynthSpec(
        n_markets=args.markets,
        assets_per_market=args.assets,
        length=args.length,
        factor_loading=args.factor_loading,
        idio_vol=args.idio_vol,
        factor_persistence=args.persistence,
        seed=args.seed,
    )
    spec.validate()
    run_dir = _prepare_run_dir(args.out)
    panels = generate_synth(spec)
    write_panel_dir(panels, run_dir)
    mf = RunManifest(command="synth", config=vars(spec).copy(), seed=spec.seed)
    mf.add_output("index", run_dir, run_dir / "markets.csv")
    for p in panels:
        mf.add_output(f"panel:{p.market_id}", run_dir, run_dir / f"{p.market_id}.csv")
    mf.timings["total"] = time.perf_counter() - t0
    mf.write(run_dir)
    print(f"generated {len(panels)} synthetic market(s) into {run_dir}")
    return 0


def cmd_train(args) -> int:
    from .manifest import RunManifest
    from .panels import split_holdout
    from .params import dump_json
    from .trainer import TrainConfig, build_model, load_config, train, write_trace

    t0 = time.perf_counter()
    if args.config:
        cfg, model_kind = load_config(args.config)
    else:
        cfg, model_kind = TrainConfig(), "quantnet"
    if args.arch:
        model_kind = args.arch
    panels = _load_panels(args.data)
    if args.holdout:
        panels = {
            mid: split_holdout(p, args.holdout).train for mid, p in panels.items()
        }
    run_dir = _prepare_run_dir(args.out)
    markets = {mid: p.n_assets for mid, p in panels.items()}
    model = build_model(model_kind, markets, cfg)
    model, trace = train(model, panels, cfg)
    checkpoint = run_dir / "checkpoint.json"
    dump_json(model.payload(), checkpoint)
    trace_path = run_dir / "loss_trace.jsonl"
    write_trace(trace, trace_path)
    mf = RunManifest(
        command="train",
        config={"model": model_kind, "holdout": args.holdout, **cfg.to_dict()},
        seed=cfg.seed,
    )
    if args.config:
        mf.add_input(args.config)
    _digest_data_dir(mf, Path(args.data))
    mf.add_output("checkpoint", run_dir, checkpoint)
    mf.add_output("loss_trace", run_dir, trace_path)
    mf.timings["total"] = time.perf_counter() - t0
    mf.write(run_dir)
    final = trace[-1]["loss"] if trace else float("nan")
    print(f"trained {model_kind} for {cfg.steps} step(s); final loss {final:.6f}")
    print(f"checkpoint: {checkpoint}")
    return 0


def cmd_search(args) -> int:
    from .manifest import RunManifest
    from .trainer import SearchSpace, load_space, random_search, write_config

    t0 = time.perf_counter()
    space = load_space(args.space) if args.space else SearchSpace()
    panels = _load_panels(args.data)
    run_dir = _prepare_run_dir(args.out)
    log_path = run_dir / "trials.jsonl"
    with open(log_path, "w", encoding="utf-8") as log:
        best, records = random_search(
            panels,
            space,
            args.trials,
            budget_s=args.budget,
            seed=args.seed,
            log_stream=log,
        )
    best_path = run_dir / "best_config.toml"
    write_config(best, best_path, model=space.model)
    mf = RunManifest(
        command="search",
        config={"model": space.model, "trials": args.trials, "seed": args.seed},
        seed=args.seed,
    )
    if args.space:
        mf.add_input(args.space)
    _digest_data_dir(mf, Path(args.data))
    mf.add_output("trials", run_dir, log_path)
    mf.add_output("best_config", run_dir, best_path)
    mf.timings["total"] = time.perf_counter() - t0
    mf.write(run_dir)
    top = max(records, key=lambda r: r["val_sharpe"])
    print(f"searched {len(records)} trial(s); best val sharpe {top['val_sharpe']:.4f}")
    print(f"best config: {best_path}")
    return 0


def cmd_backtest(args) -> int:
    from .baselines import BASELINES
    from .evaluation import backtest, compare_strategies, write_pnl_csv
    from .manifest import RunManifest
    from .model import model_from_payload
    from .params import load_json
    from .signals import write_signals_csv
    from .strategies import NoTransferStrategy, QuantNetStrategy

    t0 = time.perf_counter()
    if args.baseline not in BASELINE_NAMES:
        raise ConfigError(
            f"baseline must be one of {BASELINE_NAMES}, got {args.baseline!r}"
        )
    if args.holdout < 2:
        raise ConfigError(f"holdout must be >= 2, got {args.holdout}")
    model = model_from_payload(load_json(args.checkpoint))
    panels = _load_panels(args.data)
    missing = sorted(set(panels) - set(model.markets))
    if missing:
        raise ConfigError(f"checkpoint has no parameters for market(s): {missing}")
    for mid, p in panels.items():
        if args.holdout >= p.n_obs:
            raise DataError(
                f"market {mid}: holdout {args.holdout} >= {p.n_obs} observations"
            )
    run_dir = _prepare_run_dir(args.out)
    if model.kind == "quantnet":
        model_strategy = QuantNetStrategy.from_model(model)
    else:
        model_strategy = NoTransferStrategy.from_model(model)
    strategies = {model.kind: model_strategy}
    for name in BASELINE_NAMES:
        strategies[name] = BASELINES[name]()

    mf = RunManifest(
        command="backtest",
        config={"holdout": args.holdout, "baseline": args.baseline},
        seed=0,
    )
    results: dict[str, list] = {}
    for name in sorted(strategies):
        sub = run_dir / name
        sub.mkdir()
        results[name] = []
        for mid in sorted(panels):
            panel = panels[mid]
            res = backtest(strategies[name], panel, eval_start=panel.n_obs - args.holdout)
            results[name].append(res)
            sig_path = sub / f"{mid}_signals.csv"
            pnl_path = sub / f"{mid}_pnl.csv"
            met_csv = sub / f"{mid}_metrics.csv"
            met_json = sub / f"{mid}_metrics.json"
            write_signals_csv(res.signals, sig_path)
            write_pnl_csv(res, pnl_path)
            res.report.write_csv(met_csv)
            res.report.write_json(met_json)
            for p in (sig_path, pnl_path, met_csv, met_json):
                mf.add_output(f"{name}:{p.name}", run_dir, p)
    comparison = compare_strategies(results[model.kind], results[args.baseline])
    comparison["strategy_a"] = model.kind
    comparison["strategy_b"] = args.baseline
    cmp_path = run_dir / "comparison.json"
    cmp_path.write_text(
        json.dumps(comparison, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    mf.add_input(args.checkpoint)
    _digest_data_dir(mf, Path(args.data))
    mf.add_output("comparison", run_dir, cmp_path)
    mf.timings["total"] = time.perf_counter() - t0
    mf.write(run_dir)
    print(
        f"backtested {len(strategies)} strategies on {len(panels)} market(s) "
        f"over the last {args.holdout} observation(s)"
    )
    print(f"comparison: {cmp_path}")
    return 0


def cmd_cluster(args) -> int:
    from .cluster import cluster_markets, write_assignments_csv, write_merges_json
    from .manifest import RunManifest
    from .model import model_from_payload
    from .params import load_json

    t0 = time.perf_counter()
    model = model_from_payload(load_json(args.checkpoint))
    if model.kind != "quantnet":
        raise ConfigError(
            f"clustering reads encoder scores; checkpoint holds {model.kind}"
        )
    panels = _load_panels(args.data)
    missing = sorted(set(panels) - set(model.markets))
    if missing:
        raise ConfigError(f"checkpoint has no parameters for market(s): {missing}")
    run_dir = _prepare_run_dir(args.out)
    scores = model.encoder_scores(list(panels.values()))
    assignments, merges = cluster_markets(scores, n_clusters=args.clusters)
    assign_path = run_dir / "clusters.csv"
    merges_path = run_dir / "merges.json"
    write_assignments_csv(assignments, assign_path)
    write_merges_json(merges, merges_path)
    mf = RunManifest(
        command="cluster", config={"clusters": args.clusters}, seed=0
    )
    mf.add_input(args.checkpoint)
    _digest_data_dir(mf, Path(args.data))
    mf.add_output("assignments", run_dir, assign_path)
    mf.add_output("merges", run_dir, merges_path)
    mf.timings["total"] = time.perf_counter() - t0
    mf.write(run_dir)
    k = len(set(assignments.values()))
    print(f"clustered {len(assignments)} market(s) into {k} cluster(s)")
    return 0


def cmd_report(args) -> int:
    from .manifest import RunManifest
    from .report import render_report

    t0 = time.perf_counter()
    backtest_dir = Path(args.backtest)
    run_dir = _prepare_run_dir(args.out)
    written = render_report(backtest_dir, run_dir)
    mf = RunManifest(command="report", config={"backtest": str(backtest_dir)}, seed=0)
    for sub in sorted(p for p in backtest_dir.iterdir() if p.is_dir()):
        for f in sorted(sub.glob("*_pnl.csv")):
            mf.add_input(f)
    for path in written:
        mf.add_output(path.name, run_dir, path)
    mf.timings["total"] = time.perf_counter() - t0
    mf.write(run_dir)
    print(f"report written to {run_dir} ({len(written)} file(s))")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantnet",
        description="Train and evaluate cross-market trading models.",
    )
    parser.add_argument("--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize raw market CSVs into a panel directory")
    p.add_argument("--input", required=True, help="directory of per-market CSV files")
    p.add_argument("--rates", default=None, help="reference rate CSV (date,rate in %%)")
    p.add_argument("--out", required=True, help="fresh run directory")
    p.add_argument("--mode", choices=("prices", "returns"), default="prices")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic multi-market panel directory")
    p.add_argument("--out", required=True)
    p.add_argument("--markets", type=int, default=8)
    p.add_argument("--assets", type=int, default=5)
    p.add_argument("--length", type=int, default=1500)
    p.add_argument("--factor-loading", type=float, default=1.0)
    p.add_argument("--idio-vol", type=float, default=1.0)
    p.add_argument("--persistence", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on a panel directory")
    p.add_argument("--config", default=None, help="TOML config file")
    p.add_argument("--data", required=True, help="panel directory from ingest/synth")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--arch",
        choices=("quantnet", "no-transfer-lstm", "no-transfer-linear"),
        default=None,
        help="model kind (overrides the config file)",
    )
    p.add_argument(
        "--holdout",
        type=int,
        default=0,
        help="reserve the last N observations (train never sees them)",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("search", help="random hyperparameter search")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--space", default=None, help="TOML search-space file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--budget", type=float, default=None, help="wall-clock seconds")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("backtest", help="evaluate a checkpoint and the baselines")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--holdout", type=int, default=752)
    p.add_argument("--out", required=True)
    p.add_argument("--baseline", default="buy_and_hold",
                   help="comparison baseline for the test statistics")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("cluster", help="cluster markets by encoder scores")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clusters", type=int, default=6)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("report", help="render table and curves from a backtest directory")
    p.add_argument("--backtest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    try:
        apply_thread_cap()
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except BudgetExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except QuantNetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
