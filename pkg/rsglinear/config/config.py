"""
rsglinear Config Layer - Run configuration definition, loading, and merging.

Precedence: command-line flags > --config file > default_config.json > field defaults.
Everything is range-checked by `validate()` before any work starts.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from rsg_core.models import ModelKind, ModelSpec, SpecError, SplitSpec, TrainConfig

logger = logging.getLogger("rsglinear.config")

_DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(__file__), "default_config.json")
_WRAPPER_KEY = "rsglinear_config"


@dataclass
class RunConfig:
    """One train/evaluate/predict invocation."""

    # Data
    dataset: str = ""
    train_ratio: float = 0.6
    val_ratio: float = 0.2
    test_ratio: float = 0.2
    border_context: bool = False

    # Model
    model: str = "rs_glinear"
    input_length: int = 336
    horizon: int = 96
    depth: int = 4
    dropout_rate: float = 0.1
    ma_kernel: int = 25
    revin_epsilon: float = 1e-5
    gelu_variant: str = "exact"
    dropout_placement: str = "branch"

    # Training; learning_rate None means the dataset's registered profile
    learning_rate: Optional[float] = None
    batch_size: int = 32
    max_epochs: int = 10
    patience: int = 3
    seed: int = 0
    max_train_windows: Optional[int] = None

    # Output
    out: str = "runs"
    name: str = ""

    # ─── Factory methods ─────────────────────────────────────

    @classmethod
    def default(cls) -> RunConfig:
        """Field defaults overlaid with the packaged default_config.json."""
        if os.path.exists(_DEFAULT_CONFIG_PATH):
            return cls().merge(cls.read_file(_DEFAULT_CONFIG_PATH))
        return cls()

    @classmethod
    def _known(cls, data: Dict[str, Any]) -> Dict[str, Any]:
        known_fields = {f for f in cls.__dataclass_fields__}
        unknown = sorted(k for k in data if k not in known_fields)
        if unknown:
            logger.warning("Ignoring unknown config keys: %s", ", ".join(unknown))
        return {k: v for k, v in data.items() if k in known_fields}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> RunConfig:
        return cls(**cls._known(data))

    @staticmethod
    def read_file(path: str) -> Dict[str, Any]:
        """The key/value pairs a config file sets, wrapper key removed."""
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except OSError as e:
            raise SpecError(f"Cannot read config file {path}: {e}", code="FILE_NOT_FOUND")
        except json.JSONDecodeError as e:
            raise SpecError(f"Config file {path} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise SpecError(f"Config file {path} must hold a JSON object")
        if _WRAPPER_KEY in data:
            data = data[_WRAPPER_KEY]
            if not isinstance(data, dict):
                raise SpecError(f"'{_WRAPPER_KEY}' in {path} must be a JSON object")
        return data

    # ─── Merge ───────────────────────────────────────────────

    def merge(self, values: Dict[str, Any]) -> RunConfig:
        """Every key present in `values` wins, including values equal to a field default."""
        return dataclasses.replace(self, **self._known(values))

    def with_overrides(self, **flags: Any) -> RunConfig:
        """Apply explicit values (command-line flags); None means not given."""
        given = {k: v for k, v in flags.items() if v is not None}
        unknown = [k for k in given if k not in self.__dataclass_fields__]
        if unknown:
            raise SpecError(f"Unknown config fields: {unknown}")
        return dataclasses.replace(self, **given)

    def to_dict(self) -> Dict[str, Any]:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    # ─── Validation and derived objects ──────────────────────

    def validate(self) -> None:
        if not self.dataset:
            raise SpecError("No dataset given (use --dataset)")
        kinds = [k.value for k in ModelKind]
        if self.model not in kinds:
            raise SpecError(f"Unknown model '{self.model}' (choose from {', '.join(kinds)})")
        self.model_spec(n_channels=1).validate()
        self.train_config(self.learning_rate or 0.001).validate()
        self.split_spec().validate()
        if self.learning_rate is not None and not self.learning_rate > 0:
            raise SpecError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.max_train_windows is not None and self.max_train_windows < 1:
            raise SpecError(f"max_train_windows must be >= 1, got {self.max_train_windows}")

    def model_spec(self, n_channels: int) -> ModelSpec:
        return ModelSpec(
            kind=self.model,
            input_length=self.input_length,
            horizon=self.horizon,
            n_channels=n_channels,
            depth=self.depth,
            dropout_rate=self.dropout_rate,
            ma_kernel=self.ma_kernel,
            revin_epsilon=self.revin_epsilon,
            gelu_variant=self.gelu_variant,
            dropout_placement=self.dropout_placement,
        )

    def train_config(self, learning_rate: float) -> TrainConfig:
        return TrainConfig(
            learning_rate=learning_rate,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=self.seed,
        )

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.train_ratio, self.val_ratio, self.test_ratio)

    def run_name(self, dataset_name: Optional[str] = None) -> str:
        if self.name:
            return self.name
        dataset = dataset_name or Path(self.dataset).stem
        return f"{dataset}_{self.model}_L{self.input_length}_T{self.horizon}_s{self.seed}"

    def run_dir(self, dataset_name: Optional[str] = None) -> Path:
        return Path(self.out) / self.run_name(dataset_name)
