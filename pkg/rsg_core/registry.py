"""
rsg_core - Dataset Registry
Known benchmark datasets: file names, expected shape and sampling rate, and
the per-dataset learning-rate profile.

Names resolve against the directory in ``$LTSF_DATA_DIR``; anything that looks
like a path to an existing file is used as-is.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .data import infer_granularity, load_csv
from .models import LoadError, RawSeries, SpecError

logger = logging.getLogger("rsg_core.registry")

DATA_DIR_ENV = "LTSF_DATA_DIR"
DEFAULT_REGISTRY = Path(__file__).resolve().parent.parent / "rsg_registry" / "datasets.json"
DEFAULT_LEARNING_RATE = 0.001


@dataclass
class DatasetEntry:
    name: str
    file: str
    rows: int
    columns: int
    sample_rate: str
    learning_rate: float = DEFAULT_LEARNING_RATE
    aliases: List[str] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> DatasetEntry:
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in data.items() if k in known})

    def to_dict(self) -> Dict[str, Any]:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


class DatasetRegistry:
    """Name and alias lookup over the registered datasets."""

    def __init__(self, entries: List[DatasetEntry]):
        self._entries: Dict[str, DatasetEntry] = {}
        self._aliases: Dict[str, str] = {}
        for entry in entries:
            self._entries[entry.name] = entry
            for alias in [entry.name, *entry.aliases]:
                self._aliases[alias.lower()] = entry.name

    @classmethod
    def from_file(cls, path: Path) -> DatasetRegistry:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise SpecError(f"Cannot read dataset registry {path}: {e}")
        return cls([DatasetEntry.from_dict(d) for d in data.get("datasets", [])])

    @classmethod
    def default(cls) -> DatasetRegistry:
        return cls.from_file(DEFAULT_REGISTRY)

    @property
    def names(self) -> List[str]:
        return sorted(self._entries)

    def get(self, name: str) -> Optional[DatasetEntry]:
        canonical = self._aliases.get(name.lower())
        return self._entries.get(canonical) if canonical else None

    def learning_rate(self, name: str) -> float:
        entry = self.get(name)
        return entry.learning_rate if entry else DEFAULT_LEARNING_RATE

    def resolve(self, name_or_path: str, data_dir: Optional[str] = None) -> Tuple[Path, Optional[DatasetEntry]]:
        """Map a dataset name or CSV path to (file path, registry entry or None)."""
        candidate = Path(name_or_path)
        entry = self.get(candidate.stem) if candidate.suffix else self.get(name_or_path)
        if candidate.suffix and candidate.is_file():
            return candidate, entry
        if entry is None:
            raise LoadError(
                f"Unknown dataset '{name_or_path}' (registered: {', '.join(self.names)})",
                code="UNKNOWN_DATASET",
            )
        root = data_dir or os.environ.get(DATA_DIR_ENV)
        if not root:
            raise LoadError(
                f"Dataset '{entry.name}' needs ${DATA_DIR_ENV} or an explicit CSV path",
                code="FILE_NOT_FOUND",
            )
        return Path(root) / entry.file, entry

    def load(self, name_or_path: str, data_dir: Optional[str] = None) -> Tuple[RawSeries, Optional[DatasetEntry]]:
        path, entry = self.resolve(name_or_path, data_dir)
        series = load_csv(str(path), name=entry.name if entry else None)
        if entry:
            for problem in self.check(series, entry):
                logger.warning("%s: %s", entry.name, problem)
        return series, entry

    def check(self, series: RawSeries, entry: Optional[DatasetEntry] = None) -> List[str]:
        """Differences between a loaded series and its registered expectations."""
        entry = entry or self.get(series.name)
        if entry is None:
            return []
        problems = []
        if series.length != entry.rows:
            problems.append(f"expected {entry.rows} rows, found {series.length}")
        if series.n_channels != entry.columns:
            problems.append(f"expected {entry.columns} columns, found {series.n_channels}")
        granularity = infer_granularity(series.timestamps)
        if granularity != entry.sample_rate:
            problems.append(f"expected sample rate '{entry.sample_rate}', found '{granularity}'")
        return problems
