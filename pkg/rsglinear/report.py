"""
rsglinear Run Reports - Terminal summaries plus JSON, markdown and CSV exports.

Every file is written whole (temp file then rename) so a crashed run never
leaves a half-written artifact behind.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from rsg_core.checkpoint import atomic_write
from rsg_core.evaluation import (
    ComparisonRow,
    MetricsReport,
    comparison_to_markdown,
    horizon_profile,
)
from rsg_core.models import Metrics, TrainReport


# ANSI colors
class _C:
    RED    = "\033[31m"
    GREEN  = "\033[32m"
    YELLOW = "\033[33m"
    CYAN   = "\033[36m"
    DIM    = "\033[2m"
    BOLD   = "\033[1m"
    RESET  = "\033[0m"


PREDICTION_COLUMNS = ["t", "channel", "ground_truth", "prediction"]
PROFILE_COLUMNS = ["model", "dataset", "input_length", "horizon", "mse", "mae"]


# ── File exports ──────────────────────────────────────────────────────────────


def write_json(path: Union[str, Path], data: Any) -> Path:
    text = json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    atomic_write(path, text.encode("utf-8"))
    return Path(path)


def write_text(path: Union[str, Path], text: str) -> Path:
    atomic_write(path, text.encode("utf-8"))
    return Path(path)


def write_csv(path: Union[str, Path], frame: pd.DataFrame) -> Path:
    atomic_write(path, frame.to_csv(index=False, lineterminator="\n").encode("utf-8"))
    return Path(path)


def prediction_frame(
    prediction: np.ndarray,
    target: np.ndarray,
    column_names: Sequence[str],
) -> pd.DataFrame:
    """Long format: one row per (step ahead, channel), steps counted from 1."""
    horizon, n_channels = prediction.shape
    return pd.DataFrame({
        "t": np.repeat(np.arange(1, horizon + 1), n_channels),
        "channel": np.tile(np.asarray(column_names, dtype=object), horizon),
        "ground_truth": target.reshape(-1),
        "prediction": prediction.reshape(-1),
    }, columns=PREDICTION_COLUMNS)


def profile_frame(report: MetricsReport, dataset: Optional[str] = None) -> pd.DataFrame:
    return pd.DataFrame(horizon_profile(report, dataset), columns=PROFILE_COLUMNS)


class BenchmarkReport:
    """A grid's MetricsReport together with its reference comparison."""

    def __init__(self, report: MetricsReport, comparisons: List[ComparisonRow]):
        self.report = report
        self.comparisons = comparisons

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rsglinear_benchmark": {
                "version": "1.0",
                "metrics": self.report.to_dict(),
                "comparisons": [c.to_dict() for c in self.comparisons],
            }
        }

    def to_markdown(self) -> str:
        parts = ["## Metrics", "", self.report.to_markdown(), ""]
        if self.comparisons:
            parts += ["## Reference comparison", "", comparison_to_markdown(self.comparisons), ""]
        return "\n".join(parts)

    def save(self, out_dir: Union[str, Path]) -> List[Path]:
        out = Path(out_dir)
        return [
            write_json(out / "metrics.json", self.report.to_dict()),
            write_json(out / "report.json", self.to_dict()),
            write_text(out / "report.md", self.to_markdown()),
        ]

    # ── Terminal report ───────────────────────────────────────────────────────

    def to_terminal(self) -> str:
        lines = []
        W = 62
        meta = self.report.metadata
        lines.append(f"\n{_C.CYAN}Benchmark: {meta.get('grid') or meta.get('dataset', '?')}{_C.RESET}")
        lines.append(f"{_C.DIM}{'━' * W}{_C.RESET}")
        lines.append(self.report.to_markdown())

        ok, failed = len(self.report.succeeded), len(self.report.failed)
        lines.append(
            f"\n  {len(self.report.cells)} cell(s)  ·  "
            f"{_C.GREEN}{ok} ok{_C.RESET}  {_C.RED}{failed} failed{_C.RESET}"
        )
        for label, entry in sorted(self.report.cells.items()):
            if "error" in entry:
                lines.append(f"  {_C.RED}✗ {label}: [{entry['error']}] {entry['message']}{_C.RESET}")

        mse_rows = [c for c in self.comparisons if c.metric == "mse"]
        if mse_rows:
            lower = sum(1 for c in mse_rows if c.ours_lower)
            lines.append(
                f"  {_C.BOLD}{lower}/{len(mse_rows)}{_C.RESET} reference MSE values beaten"
            )
        return "\n".join(lines)


def train_summary(name: str, report: TrainReport, metrics: Optional[Metrics] = None) -> str:
    lines = [f"  {_C.BOLD}{name}{_C.RESET}"]
    for e in report.epochs:
        marker = f"{_C.GREEN}*{_C.RESET}" if e.epoch == report.best_epoch else " "
        lines.append(
            f"  {marker} epoch {e.epoch:>3}  train {e.train_loss:.6f}  val {e.val_loss:.6f}"
        )
    if report.stopped_early:
        lines.append(f"  {_C.YELLOW}Stopped early{_C.RESET} {_C.DIM}(patience exhausted){_C.RESET}")
    lines.append(f"  Best validation loss: {_C.BOLD}{report.best_val_loss:.6f}{_C.RESET} (epoch {report.best_epoch})")
    if metrics is not None:
        lines.append(f"  Test MSE {_C.BOLD}{metrics.mse:.4f}{_C.RESET}  MAE {_C.BOLD}{metrics.mae:.4f}{_C.RESET}")
    lines.append(f"  {_C.DIM}{report.wall_time_sec:.1f}s{_C.RESET}")
    return "\n".join(lines)
