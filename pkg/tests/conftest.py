"""
Shared test fixtures for the rsglinear test suite.
"""

import os
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
import pytest

from rsg_core.models import RawSeries, WindowSample

# Project root
PROJECT_ROOT = Path(__file__).parent.parent
GRIDS_DIR = PROJECT_ROOT / "grids"
REGISTRY_DIR = PROJECT_ROOT / "rsg_registry"
DATA_DIR = os.environ.get("LTSF_DATA_DIR", "")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: desk-scale reproduction runs on real benchmark CSVs")


def _timestamps(n: int, freq: str = "60min", start: str = "2020-01-01") -> pd.DatetimeIndex:
    return pd.date_range(start=start, periods=n, freq=freq)


def make_series(values, name: str = "synthetic", freq: str = "60min", columns: Optional[Sequence[str]] = None) -> RawSeries:
    """Wrap a (rows x channels) array as a RawSeries with regular timestamps."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    cols = list(columns) if columns else [f"c{i}" for i in range(values.shape[1])]
    return RawSeries(name=name, timestamps=_timestamps(values.shape[0], freq), values=values, column_names=cols)


def make_csv(path: Path, values, freq: str = "60min", columns: Optional[Sequence[str]] = None) -> Path:
    """Write a benchmark-style CSV (first column 'date') and return its path."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    cols = list(columns) if columns else [f"c{i}" for i in range(values.shape[1])]
    frame = pd.DataFrame(values, columns=cols)
    frame.insert(0, "date", _timestamps(values.shape[0], freq).strftime("%Y-%m-%d %H:%M:%S"))
    frame.to_csv(path, index=False)
    return Path(path)


def sine_values(n: int, n_channels: int = 1, period: float = 24.0) -> np.ndarray:
    t = np.arange(n, dtype=np.float64)[:, None]
    phases = np.arange(n_channels, dtype=np.float64)[None, :]
    return np.sin(2.0 * np.pi * t / period + phases)


def linear_generator_windows(
    weights: np.ndarray,
    count: int,
    seed: int,
    noise: float = 0.0,
) -> List[WindowSample]:
    """Windows with x ~ N(0, 1) and y = W* x (+ noise), one channel each."""
    gen = np.random.default_rng(seed)
    horizon, length = weights.shape
    out = []
    for k in range(count):
        x = gen.standard_normal((length, 1))
        y = weights @ x + noise * gen.standard_normal((horizon, 1))
        out.append(WindowSample(input=x, target=y, origin_index=k))
    return out


def requires_data(*files: str):
    """Skip unless every file exists under $LTSF_DATA_DIR."""
    present = bool(DATA_DIR) and all((Path(DATA_DIR) / f).is_file() for f in files)
    return pytest.mark.skipif(not present, reason=f"needs {', '.join(files)} under $LTSF_DATA_DIR")


@pytest.fixture
def gen():
    """Seeded numpy generator for property tests."""
    return np.random.default_rng(12345)


@pytest.fixture
def sine_series():
    """Noiseless 3000-step sine, one channel."""
    return make_series(sine_values(3000), name="sine")


@pytest.fixture
def small_csv(tmp_path):
    """Weekly 3-channel CSV with 240 rows of smooth signal plus noise."""
    gen = np.random.default_rng(7)
    values = sine_values(240, 3, period=52.0) * 10 + 0.5 * gen.standard_normal((240, 3)) + 20
    return make_csv(tmp_path / "small.csv", values, freq="7D", columns=["a", "b", "OT"])


@pytest.fixture
def data_dir(tmp_path, monkeypatch):
    """A temporary $LTSF_DATA_DIR holding a tiny ILI-shaped file."""
    root = tmp_path / "data"
    root.mkdir()
    gen = np.random.default_rng(11)
    values = sine_values(300, 7, period=52.0) + 0.1 * gen.standard_normal((300, 7))
    make_csv(root / "national_illness.csv", values, freq="7D",
             columns=["% WEIGHTED ILI", "%UNWEIGHTED ILI", "AGE 0-4", "AGE 5-24", "ILITOTAL", "NUM. OF PROVIDERS", "OT"])
    monkeypatch.setenv("LTSF_DATA_DIR", str(root))
    return root
