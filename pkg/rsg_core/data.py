"""
rsg_core - Data Pipeline
Load benchmark CSVs, split chronologically, standardize on the training
split, and carve sliding (L, T) windows into mini-batches.

The CSV layout is the one used by the public long-horizon benchmarks: a
header row, a ``date`` column first, then one numeric column per variate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from .models import (
    LoadError,
    OrderError,
    ParseError,
    RawSeries,
    Scaler,
    ShapeError,
    SpecError,
    SplitSpec,
    WindowError,
    WindowSample,
)
from .numeric import RngState

logger = logging.getLogger("rsg_core.data")

DEFAULT_SCALER_EPSILON = 1e-8

_GRANULARITY_LABELS = {
    pd.Timedelta(minutes=10): "10 minutes",
    pd.Timedelta(minutes=15): "15 minutes",
    pd.Timedelta(hours=1): "1 hour",
    pd.Timedelta(days=1): "1 day",
    pd.Timedelta(days=7): "weekly",
}


# ─── Loading ────────────────────────────────────────────────────────


def load_csv(path: str, name: Optional[str] = None) -> RawSeries:
    """
    Load a benchmark CSV into a RawSeries.

    Rows are reported 1-based, counting data records (the header is row 0).
    """
    csv_path = Path(path)
    if not csv_path.is_file():
        raise LoadError(f"File not found: {csv_path}", code="FILE_NOT_FOUND")

    try:
        frame = pd.read_csv(csv_path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"Cannot parse {csv_path.name}: {e}")

    if frame.shape[1] < 2:
        raise ParseError(f"{csv_path.name}: expected a date column and at least one numeric column")
    if frame.shape[0] == 0:
        raise ParseError(f"{csv_path.name}: no data records")

    date_col = frame.columns[0]
    if str(date_col).strip().lower() != "date":
        logger.warning("%s: first column is '%s', treating it as the timestamp column", csv_path.name, date_col)

    raw_dates = frame[date_col].str.strip()
    blank_dates = np.flatnonzero((raw_dates == "").to_numpy())
    if blank_dates.size:
        row = int(blank_dates[0]) + 1
        raise LoadError(f"{csv_path.name}: missing timestamp at row {row}, column '{date_col}'")
    timestamps = pd.to_datetime(raw_dates, errors="coerce")
    bad_dates = np.flatnonzero(timestamps.isna().to_numpy())
    if bad_dates.size:
        row = int(bad_dates[0]) + 1
        raise ParseError(
            f"{csv_path.name}: cannot parse timestamp '{raw_dates.iloc[row - 1]}' at row {row}"
        )

    value_cols = [str(c) for c in frame.columns[1:]]
    cells = frame.iloc[:, 1:].apply(lambda col: col.str.strip())
    blank = (cells == "").to_numpy()
    if blank.any():
        row, col = np.argwhere(blank)[0]
        raise LoadError(
            f"{csv_path.name}: missing value at row {row + 1}, column '{value_cols[col]}'"
        )
    numeric = cells.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().to_numpy() | ~np.isfinite(numeric.to_numpy(dtype=np.float64))
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise ParseError(
            f"{csv_path.name}: non-numeric value '{cells.iat[row, col]}' "
            f"at row {row + 1}, column '{value_cols[col]}'"
        )

    stamps = pd.DatetimeIndex(timestamps)
    not_increasing = np.flatnonzero(np.diff(stamps.asi8) <= 0)
    if not_increasing.size:
        row = int(not_increasing[0]) + 2
        raise OrderError(
            f"{csv_path.name}: timestamp at row {row} ({stamps[row - 1]}) "
            f"does not follow row {row - 1} ({stamps[row - 2]})"
        )

    values = np.ascontiguousarray(numeric.to_numpy(dtype=np.float64))
    series = RawSeries(
        name=name or csv_path.stem,
        timestamps=stamps,
        values=values,
        column_names=value_cols,
    )
    logger.info("Loaded %s: %d rows, %d columns", series.name, series.length, series.n_channels)
    return series


def infer_granularity(timestamps: pd.DatetimeIndex) -> str:
    """Human label for the dominant sampling interval."""
    if len(timestamps) < 2:
        return "unknown"
    delta = pd.Series(timestamps).diff().dropna().median()
    if delta in _GRANULARITY_LABELS:
        return _GRANULARITY_LABELS[delta]
    seconds = int(delta.total_seconds())
    for unit, size in (("days", 86400), ("hours", 3600), ("minutes", 60)):
        if seconds % size == 0:
            return f"{seconds // size} {unit}"
    return f"{seconds} seconds"


# ─── Splitting and scaling ──────────────────────────────────────────


def split_lengths(total: int, spec: SplitSpec) -> Tuple[int, int, int]:
    """Floor train and val, test takes the remainder."""
    spec.validate()
    n_train = int(math.floor(spec.train_ratio * total + 1e-9))
    n_val = int(math.floor(spec.val_ratio * total + 1e-9))
    return n_train, n_val, total - n_train - n_val


def chronological_split(series: RawSeries, spec: SplitSpec) -> Tuple[RawSeries, RawSeries, RawSeries]:
    """Contiguous, order-preserving train/val/test segments."""
    if series.length == 0:
        raise SpecError(f"Cannot split empty series '{series.name}'")
    n_train, n_val, _ = split_lengths(series.length, spec)
    return (
        series.slice(0, n_train, f"{series.name}:train"),
        series.slice(n_train, n_train + n_val, f"{series.name}:val"),
        series.slice(n_train + n_val, series.length, f"{series.name}:test"),
    )


def fit_scaler(train: RawSeries, epsilon: float = DEFAULT_SCALER_EPSILON) -> Scaler:
    """Per-column mean and population standard deviation of the training split."""
    if train.length == 0:
        raise SpecError("Cannot fit a scaler on an empty split")
    return Scaler(
        mean=train.values.mean(axis=0),
        std=train.values.std(axis=0),
        epsilon=float(epsilon),
    )


def _check_columns(scaler: Scaler, n_columns: int) -> None:
    if scaler.mean.shape[0] != n_columns:
        raise ShapeError(
            f"Scaler fitted on {scaler.mean.shape[0]} columns, series has {n_columns}"
        )


def apply_scaler(scaler: Scaler, series: RawSeries) -> RawSeries:
    """(x - mean) / (std + epsilon) per column."""
    _check_columns(scaler, series.n_channels)
    return series.with_values((series.values - scaler.mean) / (scaler.std + scaler.epsilon))


def invert_scaler(scaler: Scaler, values: np.ndarray) -> np.ndarray:
    """Map standardized values (any number of rows, N columns) back to raw units."""
    _check_columns(scaler, values.shape[1])
    return values * (scaler.std + scaler.epsilon) + scaler.mean


# ─── Windowing ──────────────────────────────────────────────────────


def make_windows(series: RawSeries, input_length: int, horizon: int) -> List[WindowSample]:
    """Stride-1 windows; sample k reads rows [k, k+L) and predicts [k+L, k+L+T)."""
    if input_length < 1 or horizon < 1:
        raise SpecError(f"L and T must be >= 1, got L={input_length}, T={horizon}")
    span = input_length + horizon
    if series.length < span:
        raise WindowError(
            f"window too long: L={input_length} + T={horizon} = {span} exceeds "
            f"length {series.length} of '{series.name}'"
        )
    values = series.values
    return [
        WindowSample(
            input=values[k:k + input_length],
            target=values[k + input_length:k + span],
            origin_index=k,
        )
        for k in range(series.length - span + 1)
    ]


def batches(
    samples: List[WindowSample],
    batch_size: int,
    shuffle: bool = False,
    rng: Optional[RngState] = None,
) -> Iterator[List[WindowSample]]:
    """Every sample exactly once; the last group may be short."""
    if batch_size < 1:
        raise SpecError(f"batch_size must be >= 1, got {batch_size}")
    if shuffle:
        if rng is None:
            raise SpecError("shuffle requires an RngState")
        order = rng.permutation(len(samples))
    else:
        order = np.arange(len(samples))
    for start in range(0, len(samples), batch_size):
        yield [samples[i] for i in order[start:start + batch_size]]


@dataclass
class PreparedData:
    """Scaled segments and their windows for one (L, T) experiment."""
    scaler: Scaler
    train: RawSeries
    val: RawSeries
    test: RawSeries
    train_windows: List[WindowSample] = field(default_factory=list)
    val_windows: List[WindowSample] = field(default_factory=list)
    test_windows: List[WindowSample] = field(default_factory=list)

    @property
    def segment_lengths(self) -> Tuple[int, int, int]:
        return self.train.length, self.val.length, self.test.length


def prepare_splits(
    series: RawSeries,
    split: SplitSpec,
    input_length: int,
    horizon: int,
    epsilon: float = DEFAULT_SCALER_EPSILON,
    border_context: bool = False,
) -> PreparedData:
    """
    Split, fit the scaler on train, scale all segments, and window them.

    With ``border_context`` the val and test segments are extended backwards
    by L rows so their first windows may look back across the split border.
    """
    n_train, n_val, _ = split_lengths(series.length, split)
    train, val, test = chronological_split(series, split)
    scaler = fit_scaler(train, epsilon)
    if border_context:
        val = series.slice(max(0, n_train - input_length), n_train + n_val, val.name)
        test = series.slice(max(0, n_train + n_val - input_length), series.length, test.name)
    train, val, test = (apply_scaler(scaler, s) for s in (train, val, test))
    logger.info(
        "%s split into %d/%d/%d rows (border_context=%s)",
        series.name, train.length, val.length, test.length, border_context,
    )
    return PreparedData(
        scaler=scaler,
        train=train,
        val=val,
        test=test,
        train_windows=make_windows(train, input_length, horizon),
        val_windows=make_windows(val, input_length, horizon),
        test_windows=make_windows(test, input_length, horizon),
    )
