#!/usr/bin/env python3
"""
rsglinear CLI - Linear-family long-horizon forecasting

Commands:
    rsglinear inspect <dataset>       Load a dataset and check it against the registry
    rsglinear train --dataset ...     Train one model, write checkpoint and reports
    rsglinear evaluate --checkpoint   Score a checkpoint on a dataset's test split
    rsglinear benchmark --grid FILE   Run an experiment grid and compare to reference numbers
    rsglinear predict --checkpoint    Export one test window's forecast as long-format CSV
    rsglinear plotdata --metrics FILE Export error-vs-horizon rows of a metrics.json as CSV

Exit codes: 0 success, 2 input/parse error, 3 configuration/shape error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

# Force UTF-8 on Windows terminals
if sys.platform == "win32":
    import io
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding="utf-8", errors="replace")
    sys.stderr = io.TextIOWrapper(sys.stderr.buffer, encoding="utf-8", errors="replace")

from rsg_core.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from rsg_core.data import infer_granularity, invert_scaler, prepare_splits
from rsg_core.evaluation import (
    ExperimentGrid,
    MetricsReport,
    ReferenceTable,
    compare_to_reference,
    evaluate,
    run_experiment,
    run_grid,
)
from rsg_core.models import ConfigError, ForecastError, RawSeries, ShapeError, SpecError
from rsg_core.registry import DatasetEntry, DatasetRegistry
from rsg_core.zoo import predict as model_predict

from .config import RunConfig
from .report import (
    _C,
    BenchmarkReport,
    prediction_frame,
    profile_frame,
    train_summary,
    write_csv,
    write_json,
)

logger = logging.getLogger("rsglinear.cli")


def _banner():
    try:
        from rsglinear import __version__
    except Exception:
        __version__ = "1.0.0"
    return f"{_C.CYAN}rsglinear{_C.RESET} {_C.DIM}v{__version__} - linear-family long-horizon forecasting{_C.RESET}"


def _load_dataset(name_or_path: str) -> Tuple[RawSeries, Optional[DatasetEntry], DatasetRegistry]:
    registry = DatasetRegistry.default()
    series, entry = registry.load(name_or_path)
    return series, entry, registry


def _check_channels(ckpt: Checkpoint, series: RawSeries) -> None:
    if ckpt.spec.n_channels != series.n_channels:
        raise ShapeError(
            f"Checkpoint expects {ckpt.spec.n_channels} channels, "
            f"dataset {series.name} has {series.n_channels}"
        )


def _checkpoint_source(ckpt: Checkpoint) -> str:
    return ckpt.meta.get("source") or ckpt.meta.get("dataset", "")


def _checkpoint_splits(ckpt: Checkpoint, series: RawSeries):
    split = RunConfig.from_dict(ckpt.meta.get("config", {})).split_spec()
    return prepare_splits(
        series, split, ckpt.spec.input_length, ckpt.spec.horizon,
        border_context=bool(ckpt.meta.get("config", {}).get("border_context", False)),
    )


# ─── inspect ─────────────────────────────────────────────────

def cmd_inspect(args):
    """Summarize a dataset and compare it with its registered statistics."""
    print(_banner())
    print()
    series, entry, registry = _load_dataset(args.dataset)
    granularity = infer_granularity(series.timestamps)
    print(f"  {_C.BOLD}{series.name}{_C.RESET}: {series.length} rows, {series.n_channels} columns, {granularity}")
    print(f"  {_C.DIM}{series.timestamps[0]} → {series.timestamps[-1]}{_C.RESET}")
    if entry is None:
        print(f"  {_C.DIM}Not a registered dataset; no expectations to check.{_C.RESET}")
        return 0
    problems = registry.check(series, entry)
    if problems:
        for p in problems:
            print(f"  {_C.YELLOW}⚠ {p}{_C.RESET}")
    else:
        print(f"  {_C.GREEN}✓ Matches registered statistics{_C.RESET}")
    return 0


# ─── train ───────────────────────────────────────────────────

def _run_config(args) -> RunConfig:
    cfg = RunConfig.default()
    if getattr(args, "config", None):
        cfg = cfg.merge(RunConfig.read_file(args.config))
    cfg = cfg.with_overrides(
        dataset=args.dataset,
        model=args.model,
        input_length=args.input,
        horizon=args.horizon,
        learning_rate=args.lr,
        batch_size=args.batch,
        max_epochs=args.epochs,
        patience=args.patience,
        dropout_rate=args.dropout,
        depth=args.depth,
        ma_kernel=args.kernel,
        seed=args.seed,
        out=args.out,
        name=args.name,
        max_train_windows=args.max_train_windows,
        border_context=args.border_context,
    )
    cfg.validate()
    return cfg


def cmd_train(args):
    """Train one model and write checkpoint.bin, report.json and metrics.json."""
    print(_banner())
    print()
    cfg = _run_config(args)
    series, entry, registry = _load_dataset(cfg.dataset)
    learning_rate = cfg.learning_rate or registry.learning_rate(series.name)
    spec = cfg.model_spec(series.n_channels)
    train_cfg = cfg.train_config(learning_rate)

    result = run_experiment(
        series, spec, train_cfg, cfg.split_spec(), cfg.border_context, cfg.max_train_windows,
    )

    run_dir = cfg.run_dir(series.name)
    resolved = cfg.with_overrides(learning_rate=learning_rate)
    save_checkpoint(run_dir / "checkpoint.bin", spec, result.state, meta={
        "dataset": series.name,
        "source": cfg.dataset,
        "column_names": series.column_names,
        "config": resolved.to_dict(),
    })
    write_json(run_dir / "report.json", {
        "config": resolved.to_dict(),
        "spec": spec.to_dict(),
        "train": result.report.to_dict(),
        "test": result.metrics.to_dict(),
    })
    write_json(run_dir / "metrics.json", {
        "train": result.report.metrics_dict(),
        "test": result.metrics.to_dict(),
    })

    print(train_summary(run_dir.name, result.report, result.metrics))
    print(f"\n  {_C.DIM}Outputs in {run_dir}{_C.RESET}")
    return 0


# ─── evaluate ────────────────────────────────────────────────

def cmd_evaluate(args):
    """Score a checkpoint on the test split of a dataset."""
    ckpt = load_checkpoint(args.checkpoint)
    series, _, _ = _load_dataset(args.dataset or _checkpoint_source(ckpt))
    _check_channels(ckpt, series)
    prepared = _checkpoint_splits(ckpt, series)
    metrics = evaluate(ckpt.spec, ckpt.state, prepared.test_windows)
    out = Path(args.out) if args.out else Path(args.checkpoint).parent / "metrics.json"
    write_json(out, {"test": metrics.to_dict(), "dataset": series.name, "spec": ckpt.spec.to_dict()})
    print(f"  {series.name} {ckpt.spec.kind.value}: MSE {_C.BOLD}{metrics.mse:.4f}{_C.RESET}  "
          f"MAE {_C.BOLD}{metrics.mae:.4f}{_C.RESET}")
    print(f"  {_C.DIM}Written {out}{_C.RESET}")
    return 0


# ─── benchmark ───────────────────────────────────────────────

def cmd_benchmark(args):
    """Run every cell of a grid file and diff against the reference tables."""
    print(_banner())
    grid = ExperimentGrid.from_file(args.grid)
    if args.seed is not None:
        grid.seed = args.seed
    report = run_grid(grid)
    comparisons = compare_to_reference(report, ReferenceTable.default())
    bench = BenchmarkReport(report, comparisons)
    out_dir = Path(args.out or "runs") / (grid.name or "benchmark")
    bench.save(out_dir)
    print(bench.to_terminal())
    print(f"\n  {_C.DIM}Outputs in {out_dir}{_C.RESET}")
    if not report.succeeded:
        raise ConfigError("Every grid cell failed", code="GRID_FAILED")
    return 0


# ─── predict ─────────────────────────────────────────────────

def cmd_predict(args):
    """Write the forecast and ground truth of one test window as long-format CSV."""
    ckpt = load_checkpoint(args.checkpoint)
    series, _, _ = _load_dataset(args.dataset or _checkpoint_source(ckpt))
    _check_channels(ckpt, series)
    prepared = _checkpoint_splits(ckpt, series)
    windows = prepared.test_windows
    if not 0 <= args.window < len(windows):
        raise SpecError(f"Window index {args.window} out of range (test split has {len(windows)} windows)")
    sample = windows[args.window]
    prediction = model_predict(ckpt.spec, ckpt.state, sample.input)
    target = sample.target
    if args.raw:
        prediction = invert_scaler(prepared.scaler, prediction)
        target = invert_scaler(prepared.scaler, target)
    frame = prediction_frame(prediction, target, series.column_names)
    out = Path(args.out) if args.out else Path(args.checkpoint).parent / "predictions.csv"
    write_csv(out, frame)
    print(f"  {len(frame)} rows written to {out}")
    return 0


# ─── plotdata ────────────────────────────────────────────────

def cmd_plotdata(args):
    """Export long-format error-vs-horizon rows of a metrics.json."""
    report = MetricsReport.from_file(args.metrics)
    frame = profile_frame(report, args.dataset)
    out = Path(args.out) if args.out else Path(args.metrics).with_name("horizon_profile.csv")
    write_csv(out, frame)
    print(f"  {len(frame)} rows written to {out}")
    return 0


# ─── main ────────────────────────────────────────────────────

def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="Registered dataset name or CSV path")
    p.add_argument("--model", help="linear, nlinear, dlinear, rlinear, glinear or rs_glinear")
    p.add_argument("--input", type=int, help="Look-back length L")
    p.add_argument("--horizon", type=int, help="Forecast horizon T")
    p.add_argument("--lr", type=float, help="Learning rate (default: dataset profile)")
    p.add_argument("--batch", type=int, help="Mini-batch size")
    p.add_argument("--epochs", type=int, help="Maximum epochs")
    p.add_argument("--patience", type=int, help="Early-stopping patience")
    p.add_argument("--dropout", type=float, help="Dropout rate")
    p.add_argument("--depth", type=int, help="Residual block count")
    p.add_argument("--kernel", type=int, help="Moving-average kernel")
    p.add_argument("--seed", type=int, help="Random seed")
    p.add_argument("--out", help="Output root directory")
    p.add_argument("--name", help="Run directory name")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--max-train-windows", type=int, dest="max_train_windows",
                   help="Train on the most recent N windows only")
    p.add_argument("--border-context", action="store_const", const=True, default=None,
                   dest="border_context", help="Let val/test windows look back across split borders")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsglinear",
        description="rsglinear - linear-family long-horizon forecasting",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command")

    p_inspect = sub.add_parser("inspect", help="Summarize a dataset")
    p_inspect.add_argument("dataset", help="Registered dataset name or CSV path")
    p_inspect.set_defaults(func=cmd_inspect)

    p_train = sub.add_parser("train", help="Train one model")
    _add_run_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="Score a checkpoint on the test split")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--dataset", help="Dataset (default: the one recorded in the checkpoint)")
    p_eval.add_argument("--out", help="metrics.json path")
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("benchmark", help="Run an experiment grid")
    p_bench.add_argument("--grid", required=True, help="Grid JSON file")
    p_bench.add_argument("--out", help="Output root directory")
    p_bench.add_argument("--seed", type=int, help="Override the grid seed")
    p_bench.set_defaults(func=cmd_benchmark)

    p_pred = sub.add_parser("predict", help="Export one test-window forecast as CSV")
    p_pred.add_argument("--checkpoint", required=True)
    p_pred.add_argument("--dataset", help="Dataset (default: the one recorded in the checkpoint)")
    p_pred.add_argument("--window", type=int, default=0, help="Test window index")
    p_pred.add_argument("--raw", action="store_true", help="Undo standardization")
    p_pred.add_argument("--out", help="predictions.csv path")
    p_pred.set_defaults(func=cmd_predict)

    p_plot = sub.add_parser("plotdata", help="Export error-vs-horizon CSV from metrics.json")
    p_plot.add_argument("--metrics", required=True)
    p_plot.add_argument("--dataset", help="Restrict to one dataset")
    p_plot.add_argument("--out", help="CSV path")
    p_plot.set_defaults(func=cmd_plotdata)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    if not args.command:
        _print_welcome()
        return 0

    try:
        return args.func(args)
    except ForecastError as e:
        print(f"{_C.RED}[{e.code}] {e}{_C.RESET}", file=sys.stderr)
        return e.exit_code


def _print_welcome():
    """Print a welcome screen when no command is given."""
    print(_banner())
    print()
    print(f"  {_C.BOLD}Data:{_C.RESET}")
    print(f"  {_C.CYAN}rsglinear inspect ili{_C.RESET}                       {_C.DIM}Rows, channels, sampling rate{_C.RESET}")
    print()
    print(f"  {_C.BOLD}Models:{_C.RESET}")
    print(f"  {_C.CYAN}rsglinear train --dataset ili --model rs_glinear --input 96 --horizon 60{_C.RESET}")
    print(f"  {_C.CYAN}rsglinear evaluate --checkpoint runs/<name>/checkpoint.bin{_C.RESET}")
    print(f"  {_C.CYAN}rsglinear predict --checkpoint runs/<name>/checkpoint.bin --window 0{_C.RESET}")
    print()
    print(f"  {_C.BOLD}Benchmarks:{_C.RESET}")
    print(f"  {_C.CYAN}rsglinear benchmark --grid grids/ili.json{_C.RESET}    {_C.DIM}Grid run + reference comparison{_C.RESET}")
    print(f"  {_C.CYAN}rsglinear plotdata --metrics runs/ili/metrics.json{_C.RESET}")
    print()
    print(f"  {_C.DIM}Datasets resolve against $LTSF_DATA_DIR; CSV paths work anywhere.{_C.RESET}")


if __name__ == "__main__":
    sys.exit(main())
