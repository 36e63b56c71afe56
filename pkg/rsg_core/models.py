"""
rsg_core - Data Models
Linear-family long-horizon forecasting

All data structures and errors shared across the rsg_core engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd


# ─── Errors ─────────────────────────────────────────────────────────


class ForecastError(ValueError):
    """Base error. `code` is a stable identifier, `exit_code` the CLI status."""
    code = "FORECAST_ERROR"
    exit_code = 1

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        if code:
            self.code = code

    def to_dict(self) -> Dict[str, str]:
        return {"error": self.code, "message": str(self)}


class InputError(ForecastError):
    code = "INPUT_ERROR"
    exit_code = 2


class LoadError(InputError):
    code = "MISSING_VALUE"


class ParseError(InputError):
    code = "PARSE_ERROR"


class OrderError(InputError):
    code = "TIMESTAMP_ORDER"


class ConfigError(ForecastError):
    code = "CONFIG_ERROR"
    exit_code = 3


class ShapeError(ConfigError):
    code = "SHAPE_MISMATCH"


class WindowError(ConfigError):
    code = "WINDOW_TOO_LONG"


class SpecError(ConfigError):
    code = "INVALID_SPEC"


class ContractError(ConfigError):
    code = "CONTRACT_VIOLATION"


class CheckpointError(ConfigError):
    code = "BAD_CHECKPOINT"


class NumericError(ForecastError):
    code = "NON_FINITE"
    exit_code = 4


# ─── Enums ──────────────────────────────────────────────────────────


class ModelKind(str, Enum):
    LINEAR = "linear"
    NLINEAR = "nlinear"
    DLINEAR = "dlinear"
    RLINEAR = "rlinear"
    GLINEAR = "glinear"
    RS_GLINEAR = "rs_glinear"


class Mode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


class GeluVariant(str, Enum):
    EXACT = "exact"
    TANH = "tanh"


class DropoutPlacement(str, Enum):
    BRANCH = "branch"      # z <- dropout(gelu(W z)) + z
    POST_ADD = "post_add"  # z <- dropout(gelu(W z) + z)


REVIN_KINDS = (ModelKind.RLINEAR, ModelKind.GLINEAR, ModelKind.RS_GLINEAR)


# ─── Data pipeline ──────────────────────────────────────────────────


@dataclass
class RawSeries:
    """A timestamped T_total x N block of observations."""
    name: str
    timestamps: pd.DatetimeIndex
    values: np.ndarray
    column_names: List[str]

    @property
    def length(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_channels(self) -> int:
        return int(self.values.shape[1])

    def slice(self, start: int, stop: int, name: Optional[str] = None) -> RawSeries:
        return RawSeries(
            name=name or self.name,
            timestamps=self.timestamps[start:stop],
            values=self.values[start:stop],
            column_names=list(self.column_names),
        )

    def with_values(self, values: np.ndarray) -> RawSeries:
        return RawSeries(self.name, self.timestamps, values, list(self.column_names))


@dataclass
class SplitSpec:
    """Chronological split ratios."""
    train_ratio: float = 0.6
    val_ratio: float = 0.2
    test_ratio: float = 0.2

    def validate(self) -> None:
        ratios = (self.train_ratio, self.val_ratio, self.test_ratio)
        if any(r <= 0 for r in ratios):
            raise SpecError(f"Split ratios must be positive, got {ratios}")
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise SpecError(f"Split ratios must sum to 1, got {sum(ratios)!r}")


@dataclass
class Scaler:
    """Per-column standardization fitted on the training split."""
    mean: np.ndarray
    std: np.ndarray
    epsilon: float = 1e-8


@dataclass
class WindowSample:
    """One supervised pair; `input` is L x N, `target` is T x N."""
    input: np.ndarray
    target: np.ndarray
    origin_index: int


# ─── Model zoo ──────────────────────────────────────────────────────


@dataclass
class ModelSpec:
    """Architecture selection and hyperparameters."""
    kind: ModelKind
    input_length: int
    horizon: int
    n_channels: int
    depth: int = 4
    dropout_rate: float = 0.1
    ma_kernel: int = 25
    revin_epsilon: float = 1e-5
    gelu_variant: GeluVariant = GeluVariant.EXACT
    dropout_placement: DropoutPlacement = DropoutPlacement.BRANCH

    def __post_init__(self):
        for name, enum in (("kind", ModelKind), ("gelu_variant", GeluVariant), ("dropout_placement", DropoutPlacement)):
            value = getattr(self, name)
            try:
                setattr(self, name, enum(value))
            except ValueError:
                choices = ", ".join(e.value for e in enum)
                raise SpecError(f"Unknown {name} {value!r} (choose from {choices})") from None

    def validate(self) -> None:
        for name in ("input_length", "horizon", "n_channels", "depth"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise SpecError(f"{name} must be an integer >= 1, got {value!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise SpecError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.ma_kernel < 1 or self.ma_kernel % 2 == 0:
            raise SpecError(f"ma_kernel must be odd and >= 1, got {self.ma_kernel}")
        if not self.revin_epsilon >= 0.0:
            raise SpecError(f"revin_epsilon must be >= 0, got {self.revin_epsilon}")

    @property
    def uses_revin(self) -> bool:
        return self.kind in REVIN_KINDS

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "input_length": int(self.input_length),
            "horizon": int(self.horizon),
            "n_channels": int(self.n_channels),
            "depth": int(self.depth),
            "dropout_rate": float(self.dropout_rate),
            "ma_kernel": int(self.ma_kernel),
            "revin_epsilon": float(self.revin_epsilon),
            "gelu_variant": self.gelu_variant.value,
            "dropout_placement": self.dropout_placement.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ModelSpec:
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class RevInStats:
    """Per-column window statistics captured by revin_normalize."""
    mu: np.ndarray
    sigma: np.ndarray
    epsilon: float
    consumed: bool = False


# ─── Trainer ────────────────────────────────────────────────────────


@dataclass
class TrainConfig:
    """Optimisation settings. Defaults follow the published training protocol."""
    learning_rate: float = 0.001
    batch_size: int = 32
    max_epochs: int = 10
    patience: int = 3
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    eval_chunk: int = 256

    def validate(self) -> None:
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise SpecError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise SpecError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise SpecError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise SpecError(f"patience must be >= 1, got {self.patience}")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise SpecError(f"Adam betas must be in (0, 1), got {self.beta1}, {self.beta2}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise SpecError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def to_dict(self) -> Dict[str, Any]:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float

    def to_dict(self) -> Dict[str, Any]:
        return {"epoch": self.epoch, "train_loss": self.train_loss, "val_loss": self.val_loss}


@dataclass
class TrainReport:
    """Outcome of one `fit` call."""
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False
    wall_time_sec: float = 0.0

    @property
    def best_val_loss(self) -> float:
        return self.epochs[self.best_epoch - 1].val_loss

    def metrics_dict(self) -> Dict[str, Any]:
        """Everything except timing; identical across reruns with one seed."""
        return {
            "epochs": [e.to_dict() for e in self.epochs],
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss if self.epochs else None,
            "stopped_early": self.stopped_early,
        }

    def to_dict(self) -> Dict[str, Any]:
        data = self.metrics_dict()
        data["wall_time_sec"] = self.wall_time_sec
        return data


# ─── Evaluation ─────────────────────────────────────────────────────


@dataclass
class Metrics:
    mse: float
    mae: float

    def to_dict(self) -> Dict[str, float]:
        return {"mse": self.mse, "mae": self.mae}


@dataclass(frozen=True)
class CellKey:
    """Identifies one (model, dataset, L, T) benchmark cell."""
    model: str
    dataset: str
    input_length: int
    horizon: int

    def label(self) -> str:
        return f"{self.model}|{self.dataset}|{self.input_length}|{self.horizon}"

    @classmethod
    def parse(cls, label: str) -> CellKey:
        model, dataset, input_length, horizon = label.split("|")
        return cls(model, dataset, int(input_length), int(horizon))
