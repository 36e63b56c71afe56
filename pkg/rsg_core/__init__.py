"""
rsg_core - Linear-family Long-horizon Forecasting Engine
=========================================================

Channel-independent linear forecasters (Linear, NLinear, DLinear, RLinear,
GLinear, RS-GLinear) with analytic gradients, trained with Adam on
standardized benchmark series.

Core modules:
- models: Data structures, enums and the error hierarchy
- numeric: Matrix helpers, seeded RNG, finite-difference oracle
- data: CSV ingestion, chronological split, scaling, windowing
- layers: GeLU, dropout, RevIN, moving-average decomposition
- zoo: Model definitions with forward/backward passes
- checkpoint: Binary model container
- trainer: Loss, Adam, early stopping, training loop
- evaluation: Metrics, experiment grids, reference comparison
- registry: Known benchmark datasets
"""

__version__ = "1.0.0"

from .models import (
    CellKey,
    CheckpointError,
    ConfigError,
    ContractError,
    DropoutPlacement,
    ForecastError,
    GeluVariant,
    InputError,
    LoadError,
    Metrics,
    Mode,
    ModelKind,
    ModelSpec,
    NumericError,
    OrderError,
    ParseError,
    RawSeries,
    Scaler,
    ShapeError,
    SpecError,
    SplitSpec,
    TrainConfig,
    TrainReport,
    WindowError,
    WindowSample,
)
from .numeric import RngState
from .data import load_csv, prepare_splits
from .zoo import ModelState, backward, forward, init_state
from .checkpoint import load_checkpoint, save_checkpoint
from .trainer import fit
from .evaluation import (
    ExperimentGrid,
    MetricsReport,
    ReferenceTable,
    compare_to_reference,
    evaluate,
    run_grid,
)
from .registry import DatasetRegistry

__all__ = [
    # Pipeline
    "load_csv",
    "prepare_splits",
    "init_state",
    "forward",
    "backward",
    "fit",
    "evaluate",
    "run_grid",
    "compare_to_reference",
    "save_checkpoint",
    "load_checkpoint",
    # Classes
    "DatasetRegistry",
    "ExperimentGrid",
    "MetricsReport",
    "ReferenceTable",
    "ModelState",
    "RngState",
    # Models
    "CellKey",
    "DropoutPlacement",
    "GeluVariant",
    "Metrics",
    "Mode",
    "ModelKind",
    "ModelSpec",
    "RawSeries",
    "Scaler",
    "SplitSpec",
    "TrainConfig",
    "TrainReport",
    "WindowSample",
    # Errors
    "ForecastError",
    "InputError",
    "LoadError",
    "ParseError",
    "OrderError",
    "ConfigError",
    "ShapeError",
    "WindowError",
    "SpecError",
    "ContractError",
    "CheckpointError",
    "NumericError",
]
