"""
rsg_core - Evaluation
Scaled-space MSE/MAE, experiment grids, benchmark reports, and comparison
against the published reference numbers shipped in rsg_registry/paper_tables.json.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from .data import prepare_splits
from .models import (
    CellKey,
    ForecastError,
    Metrics,
    ModelKind,
    ModelSpec,
    RawSeries,
    SpecError,
    SplitSpec,
    TrainConfig,
    TrainReport,
    WindowSample,
)
from .registry import DatasetRegistry
from .trainer import fit, least_squares_oracle
from .zoo import ModelState, forward, init_state, stack_windows

logger = logging.getLogger("rsg_core.evaluation")

DEFAULT_REFERENCE = Path(__file__).resolve().parent.parent / "rsg_registry" / "paper_tables.json"
ORACLE_MODEL = "oracle"
UNDEFINED_PCT = "n/a"


# ─── Metrics ────────────────────────────────────────────────────────


def evaluate(
    spec: ModelSpec,
    state: ModelState,
    windows: Sequence[WindowSample],
    chunk: int = 256,
) -> Metrics:
    """MSE and MAE averaged over every window and every entry, in eval mode."""
    if not windows:
        raise SpecError("evaluate needs a non-empty window set", code="EMPTY_WINDOWS")
    previous = state.mode
    state.eval()
    squared = 0.0
    absolute = 0.0
    count = 0
    try:
        for start in range(0, len(windows), chunk):
            X, Y = stack_windows(windows[start:start + chunk])
            pred, _ = forward(spec, state, X)
            diff = pred - Y
            squared += float(np.sum(diff * diff))
            absolute += float(np.sum(np.abs(diff)))
            count += diff.size
    finally:
        state.mode = previous
    return Metrics(mse=squared / count, mae=absolute / count)


def derive_cell_seed(seed: int, dataset: str, model: str, input_length: int, horizon: int) -> int:
    """First 8 bytes (little endian) of SHA-256 over the JSON array [seed, dataset, model, L, T]."""
    payload = json.dumps([int(seed), dataset, model, int(input_length), int(horizon)], separators=(",", ":"))
    return int.from_bytes(hashlib.sha256(payload.encode("utf-8")).digest()[:8], "little")


# ─── Single experiment ──────────────────────────────────────────────


@dataclass
class ExperimentResult:
    spec: ModelSpec
    state: ModelState
    metrics: Metrics
    report: Optional[TrainReport] = None


def run_experiment(
    series: RawSeries,
    spec: ModelSpec,
    cfg: TrainConfig,
    split: Optional[SplitSpec] = None,
    border_context: bool = False,
    max_train_windows: Optional[int] = None,
) -> ExperimentResult:
    """Split, scale, window, fit and evaluate one model on the test segment."""
    split = split or SplitSpec()
    split.validate()
    prepared = prepare_splits(series, split, spec.input_length, spec.horizon, border_context=border_context)
    train = prepared.train_windows
    if max_train_windows is not None and len(train) > max_train_windows:
        train = train[-max_train_windows:]
    state = init_state(spec, cfg.seed)
    state, report = fit(spec, state, train, prepared.val_windows, cfg)
    metrics = evaluate(spec, state, prepared.test_windows, cfg.eval_chunk)
    return ExperimentResult(spec=spec, state=state, metrics=metrics, report=report)


def run_oracle(
    series: RawSeries,
    input_length: int,
    horizon: int,
    split: Optional[SplitSpec] = None,
    border_context: bool = False,
) -> ExperimentResult:
    """Closed-form least-squares `linear` model evaluated on the test segment."""
    split = split or SplitSpec()
    prepared = prepare_splits(series, split, input_length, horizon, border_context=border_context)
    solution = least_squares_oracle(prepared.train_windows, prepared.val_windows)
    spec = ModelSpec(ModelKind.LINEAR, input_length, horizon, series.n_channels)
    state = init_state(spec, 0)
    state.params["W"] = solution.weights
    metrics = evaluate(spec, state, prepared.test_windows)
    return ExperimentResult(spec=spec, state=state, metrics=metrics)


# ─── Experiment grids ───────────────────────────────────────────────


_MODEL_FIELDS = ("depth", "dropout_rate", "ma_kernel", "revin_epsilon", "gelu_variant", "dropout_placement")
_TRAIN_FIELDS = ("batch_size", "max_epochs", "patience", "beta1", "beta2", "adam_epsilon", "eval_chunk")


@dataclass
class ExperimentGrid:
    """A dataset swept over look-back lengths, horizons and model kinds."""
    dataset: str
    input_lengths: List[int]
    horizons: List[int]
    models: List[str]
    lr_profile: Union[str, float] = "registry"
    seed: int = 0
    name: str = ""
    model_overrides: Dict[str, Any] = field(default_factory=dict)
    train_overrides: Dict[str, Any] = field(default_factory=dict)
    max_train_windows: Optional[int] = None
    border_context: bool = False

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ExperimentGrid:
        if not data:
            raise SpecError("Grid definition is empty", code="EMPTY_GRID")
        data = dict(data)
        if "input_length" in data and "input_lengths" not in data:
            data["input_lengths"] = [data.pop("input_length")]
        missing = [k for k in ("dataset", "input_lengths", "horizons", "models") if k not in data]
        if missing:
            raise SpecError(f"Grid is missing {', '.join(missing)}", code="EMPTY_GRID")
        known = set(cls.__dataclass_fields__)
        grid = cls(**{k: v for k, v in data.items() if k in known})
        grid.validate()
        return grid

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> ExperimentGrid:
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise SpecError(f"Cannot read grid file {path}: {e}", code="FILE_NOT_FOUND")
        if not text.strip():
            raise SpecError(f"Grid file {path} is empty", code="EMPTY_GRID")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise SpecError(f"Grid file {path} is not valid JSON: {e}")
        grid = cls.from_dict(data)
        grid.name = grid.name or Path(path).stem
        return grid

    def validate(self) -> None:
        if not self.input_lengths or not self.horizons or not self.models:
            raise SpecError("Grid needs at least one input length, horizon and model", code="EMPTY_GRID")
        for label, values in (("input_lengths", self.input_lengths), ("horizons", self.horizons)):
            if any(not isinstance(v, int) or v < 1 for v in values):
                raise SpecError(f"{label} must be positive integers, got {values}")
            if len(set(values)) != len(values):
                raise SpecError(f"{label} must be unique, got {values}")
        allowed = {k.value for k in ModelKind} | {ORACLE_MODEL}
        unknown = [m for m in self.models if m not in allowed]
        if unknown:
            raise SpecError(f"Unknown model kinds in grid: {unknown}")
        if isinstance(self.lr_profile, str):
            if self.lr_profile != "registry":
                raise SpecError(f"lr_profile must be 'registry' or a number, got {self.lr_profile!r}")
        elif not self.lr_profile > 0:
            raise SpecError(f"lr_profile must be positive, got {self.lr_profile}")
        bad = [k for k in self.model_overrides if k not in _MODEL_FIELDS]
        bad += [k for k in self.train_overrides if k not in _TRAIN_FIELDS]
        if bad:
            raise SpecError(f"Unsupported grid overrides: {bad}")
        if self.max_train_windows is not None and self.max_train_windows < 1:
            raise SpecError(f"max_train_windows must be >= 1, got {self.max_train_windows}")

    def learning_rate(self, registry: DatasetRegistry) -> float:
        if self.lr_profile == "registry":
            return registry.learning_rate(self.dataset)
        return float(self.lr_profile)

    def cells(self) -> List[CellKey]:
        return [
            CellKey(model, self.dataset, L, T)
            for L in self.input_lengths
            for T in self.horizons
            for model in self.models
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


# ─── Reports ────────────────────────────────────────────────────────


def _markdown_table(headers: List[str], rows: List[List[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    def line(cells: List[str]) -> str:
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
    out = [line(headers), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    out.extend(line(r) for r in rows)
    return "\n".join(out)


@dataclass
class MetricsReport:
    """Cell label -> {"mse", "mae"} or {"error", "message"}, plus run metadata."""
    cells: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def add(self, key: CellKey, metrics: Metrics, report: Optional[TrainReport] = None) -> None:
        entry: Dict[str, Any] = metrics.to_dict()
        if report is not None:
            entry["best_epoch"] = report.best_epoch
            entry["epochs_run"] = len(report.epochs)
        self.cells[key.label()] = entry

    def add_error(self, key: CellKey, error: ForecastError) -> None:
        self.cells[key.label()] = error.to_dict()

    def metrics(self, key: CellKey) -> Optional[Metrics]:
        entry = self.cells.get(key.label())
        if not entry or "error" in entry:
            return None
        return Metrics(mse=entry["mse"], mae=entry["mae"])

    @property
    def succeeded(self) -> List[CellKey]:
        return [CellKey.parse(k) for k, v in self.cells.items() if "error" not in v]

    @property
    def failed(self) -> List[CellKey]:
        return [CellKey.parse(k) for k, v in self.cells.items() if "error" in v]

    def to_dict(self) -> Dict[str, Any]:
        return {"cells": self.cells, "metadata": self.metadata}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> MetricsReport:
        return cls(cells=dict(data.get("cells", {})), metadata=dict(data.get("metadata", {})))

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> MetricsReport:
        try:
            with open(path, "r", encoding="utf-8") as f:
                return cls.from_dict(json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            raise SpecError(f"Cannot read metrics report {path}: {e}")

    def to_markdown(self) -> str:
        rows = []
        for label in sorted(self.cells, key=lambda k: _sort_key(CellKey.parse(k))):
            key = CellKey.parse(label)
            entry = self.cells[label]
            if "error" in entry:
                mse, mae = f"error: {entry['error']}", ""
            else:
                mse, mae = f"{entry['mse']:.4f}", f"{entry['mae']:.4f}"
            rows.append([key.model, key.dataset, str(key.input_length), str(key.horizon), mse, mae])
        return _markdown_table(["model", "dataset", "L", "T", "MSE", "MAE"], rows)


def _sort_key(key: CellKey):
    return (key.dataset, key.input_length, key.horizon, key.model)


# ─── Reference numbers ──────────────────────────────────────────────


@dataclass(frozen=True)
class ReferenceEntry:
    source: str
    model: str
    dataset: str
    input_length: int
    horizon: int
    mse: float
    mae: float

    @property
    def key(self) -> CellKey:
        return CellKey(self.model, self.dataset, self.input_length, self.horizon)


class ReferenceTable:
    """Read-only published numbers, each tagged with the table it came from."""

    def __init__(self, entries: Iterable[ReferenceEntry], reported_reductions=None, notes=None):
        self._entries = tuple(entries)
        self.reported_reductions = tuple(reported_reductions or ())
        self.notes = tuple(notes or ())

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> ReferenceTable:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise SpecError(f"Cannot read reference table {path}: {e}")
        entries = [ReferenceEntry(**e) for e in data.get("entries", [])]
        return cls(entries, data.get("reported_reductions"), data.get("notes"))

    @classmethod
    def default(cls) -> ReferenceTable:
        return cls.from_file(DEFAULT_REFERENCE)

    @property
    def entries(self) -> tuple:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, dataset: str, input_length: int, horizon: int) -> List[ReferenceEntry]:
        return [
            e for e in self._entries
            if e.dataset == dataset and e.input_length == input_length and e.horizon == horizon
        ]

    def get(self, key: CellKey) -> Optional[ReferenceEntry]:
        for e in self._entries:
            if e.key == key:
                return e
        return None


@dataclass
class ComparisonRow:
    ours: CellKey
    reference_model: str
    source: str
    metric: str
    our_value: float
    reference_value: float
    delta: float
    pct: Optional[float]
    ours_lower: bool

    def pct_label(self) -> str:
        return UNDEFINED_PCT if self.pct is None else f"{self.pct * 100:+.1f}%"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cell": self.ours.label(),
            "reference_model": self.reference_model,
            "source": self.source,
            "metric": self.metric,
            "ours": self.our_value,
            "reference": self.reference_value,
            "delta": self.delta,
            "pct": self.pct if self.pct is not None else UNDEFINED_PCT,
            "ours_lower": self.ours_lower,
        }


def compare_values(ours: float, reference: float):
    """(delta, signed fraction (ours - ref)/ref or None when ref is 0)."""
    delta = ours - reference
    pct = None if reference == 0 else delta / reference
    return delta, pct


def compare_to_reference(report: MetricsReport, ref: ReferenceTable) -> List[ComparisonRow]:
    """One row per (our cell, reference entry at the same dataset/L/T, metric)."""
    rows = []
    for key in sorted(report.succeeded, key=_sort_key):
        ours = report.metrics(key)
        for entry in ref.lookup(key.dataset, key.input_length, key.horizon):
            for metric in ("mse", "mae"):
                our_value = getattr(ours, metric)
                ref_value = getattr(entry, metric)
                delta, pct = compare_values(our_value, ref_value)
                rows.append(ComparisonRow(
                    ours=key,
                    reference_model=entry.model,
                    source=entry.source,
                    metric=metric,
                    our_value=our_value,
                    reference_value=ref_value,
                    delta=delta,
                    pct=pct,
                    ours_lower=our_value < ref_value,
                ))
    return rows


def comparison_to_markdown(rows: Sequence[ComparisonRow]) -> str:
    body = [
        [
            r.ours.model, r.ours.dataset, str(r.ours.input_length), str(r.ours.horizon),
            r.metric.upper(), r.reference_model, r.source,
            f"{r.our_value:.4f}", f"{r.reference_value:.4f}", f"{r.delta:+.4f}",
            r.pct_label(), "yes" if r.ours_lower else "no",
        ]
        for r in rows
    ]
    headers = ["model", "dataset", "L", "T", "metric", "vs", "source", "ours", "ref", "delta", "pct", "ours lower"]
    return _markdown_table(headers, body)


def horizon_profile(report: MetricsReport, dataset: Optional[str] = None) -> List[Dict[str, Any]]:
    """Long-format (model, dataset, L, T, mse, mae) rows ordered for error-vs-horizon plots."""
    rows = []
    for key in report.succeeded:
        if dataset and key.dataset != dataset:
            continue
        m = report.metrics(key)
        rows.append({
            "model": key.model,
            "dataset": key.dataset,
            "input_length": key.input_length,
            "horizon": key.horizon,
            "mse": m.mse,
            "mae": m.mae,
        })
    rows.sort(key=lambda r: (r["dataset"], r["model"], r["input_length"], r["horizon"]))
    return rows


# ─── Grid runner ────────────────────────────────────────────────────


def run_grid(
    grid: ExperimentGrid,
    registry: Optional[DatasetRegistry] = None,
    series: Optional[RawSeries] = None,
    data_dir: Optional[str] = None,
) -> MetricsReport:
    """Every (L, T, model) cell of the grid; failing cells are recorded and skipped."""
    grid.validate()
    registry = registry or DatasetRegistry.default()
    if series is None:
        series, _ = registry.load(grid.dataset, data_dir)
    lr = grid.learning_rate(registry)
    split = SplitSpec()

    report = MetricsReport(metadata={
        "grid": grid.name,
        "dataset": grid.dataset,
        "seed": grid.seed,
        "learning_rate": lr,
        "config_hash": grid.config_hash(),
        "started_at": datetime.now(timezone.utc).isoformat(),
    })

    for key in grid.cells():
        cell_seed = derive_cell_seed(grid.seed, key.dataset, key.model, key.input_length, key.horizon)
        try:
            if key.model == ORACLE_MODEL:
                result = run_oracle(series, key.input_length, key.horizon, split, grid.border_context)
            else:
                spec = ModelSpec(
                    kind=key.model,
                    input_length=key.input_length,
                    horizon=key.horizon,
                    n_channels=series.n_channels,
                    **grid.model_overrides,
                )
                spec.validate()
                cfg = TrainConfig(learning_rate=lr, seed=cell_seed, **grid.train_overrides)
                result = run_experiment(
                    series, spec, cfg, split, grid.border_context, grid.max_train_windows,
                )
        except ForecastError as e:
            logger.warning("Cell %s failed: [%s] %s", key.label(), e.code, e)
            report.add_error(key, e)
            continue
        report.add(key, result.metrics, result.report)
        logger.info("Cell %s: mse %.4f mae %.4f", key.label(), result.metrics.mse, result.metrics.mae)

    report.metadata["finished_at"] = datetime.now(timezone.utc).isoformat()
    return report
