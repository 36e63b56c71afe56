"""
rsg_core - Trainer
MSE training with Adam, shuffled mini-batches, and early stopping on the
validation loss with best-weights restoration.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .data import batches
from .models import (
    EpochRecord,
    ModelSpec,
    NumericError,
    SpecError,
    TrainConfig,
    TrainReport,
    WindowSample,
)
from .numeric import Matrix, RngState, require_same_shape
from .zoo import ModelState, backward, forward, stack_windows

logger = logging.getLogger("rsg_core.trainer")


# ─── Loss and metric ────────────────────────────────────────────────


def mse_loss(pred: Matrix, target: Matrix) -> Tuple[float, Matrix]:
    """Mean squared error over all entries and its gradient 2(pred - target)/m."""
    require_same_shape(pred, target, "mse_loss")
    diff = pred - target
    return float(np.mean(diff * diff)), (2.0 / diff.size) * diff


def mae_metric(pred: Matrix, target: Matrix) -> float:
    require_same_shape(pred, target, "mae_metric")
    return float(np.mean(np.abs(pred - target)))


# ─── Adam ───────────────────────────────────────────────────────────


@dataclass
class AdamState:
    m: Dict[str, Matrix] = field(default_factory=dict)
    v: Dict[str, Matrix] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Dict[str, Matrix]) -> AdamState:
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(
    params: Dict[str, Matrix],
    grads: Dict[str, Matrix],
    opt: AdamState,
    cfg: TrainConfig,
) -> Tuple[Dict[str, Matrix], AdamState]:
    """One bias-corrected Adam update. Inputs are left untouched."""
    for name, g in grads.items():
        if name not in params:
            raise SpecError(f"Gradient for unknown parameter {name}")
        require_same_shape(params[name], g, f"gradient of {name}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"Non-finite gradient for parameter {name}")

    t = opt.t + 1
    b1, b2 = cfg.beta1, cfg.beta2
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t
    new_params, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = grads.get(name)
        m = opt.m.get(name, np.zeros_like(p))
        v = opt.v.get(name, np.zeros_like(p))
        if g is None:
            new_params[name], new_m[name], new_v[name] = p.copy(), m.copy(), v.copy()
            continue
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / correction1
        v_hat = v / correction2
        new_params[name] = p - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon)
        new_m[name], new_v[name] = m, v
    return new_params, AdamState(m=new_m, v=new_v, t=t)


# ─── Early stopping ─────────────────────────────────────────────────


class EarlyStopping:
    """Tracks the best validation loss and counts epochs without improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_value = math.inf
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch: int, value: float) -> bool:
        if value < self.best_value:
            self.best_value = value
            self.best_epoch = epoch
            self.bad_epochs = 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_epochs >= self.patience


# ─── Training loop ──────────────────────────────────────────────────


def validation_loss(
    spec: ModelSpec,
    state: ModelState,
    samples: Sequence[WindowSample],
    chunk: int = 256,
) -> float:
    """Eval-mode MSE over every window, summed chunk by chunk in window order."""
    previous = state.mode
    state.eval()
    total = 0.0
    count = 0
    try:
        for start in range(0, len(samples), chunk):
            X, Y = stack_windows(samples[start:start + chunk])
            pred, _ = forward(spec, state, X)
            diff = pred - Y
            total += float(np.sum(diff * diff))
            count += diff.size
    finally:
        state.mode = previous
    return total / count


def fit(
    spec: ModelSpec,
    state: ModelState,
    train: Sequence[WindowSample],
    val: Sequence[WindowSample],
    cfg: TrainConfig,
) -> Tuple[ModelState, TrainReport]:
    """Train in place and return the state restored to its best validation epoch."""
    cfg.validate()
    spec.validate()
    if not train or not val:
        raise SpecError(
            f"fit needs non-empty train and val windows (got {len(train)} and {len(val)})",
            code="EMPTY_WINDOWS",
        )
    state.check(spec)

    started = time.perf_counter()
    shuffle_rng = RngState(cfg.seed)
    opt = AdamState.zeros_like(state.params)
    stopper = EarlyStopping(cfg.patience)
    report = TrainReport()
    best = state.snapshot()

    for epoch in range(1, cfg.max_epochs + 1):
        state.train()
        weighted = 0.0
        for step, batch in enumerate(batches(train, cfg.batch_size, shuffle=True, rng=shuffle_rng)):
            X, Y = stack_windows(batch)
            pred, cache = forward(spec, state, X)
            loss, loss_grad = mse_loss(pred, Y)
            if not math.isfinite(loss):
                raise NumericError(f"Non-finite training loss at epoch {epoch}, step {step}")
            grads = backward(spec, state, cache, loss_grad)
            state.params, opt = adam_step(state.params, grads.params, opt, cfg)
            weighted += loss * len(batch)
            logger.debug("epoch %d step %d loss %.6f", epoch, step, loss)
        train_loss = weighted / len(train)

        val_loss = validation_loss(spec, state, val, cfg.eval_chunk)
        if not math.isfinite(val_loss):
            raise NumericError(f"Non-finite validation loss at epoch {epoch}")
        report.epochs.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
        logger.info("epoch %d: train %.6f val %.6f", epoch, train_loss, val_loss)

        if stopper.update(epoch, val_loss):
            best = state.snapshot()
        elif stopper.should_stop:
            report.stopped_early = epoch < cfg.max_epochs
            if report.stopped_early:
                logger.info("Early stop at epoch %d (best epoch %d)", epoch, stopper.best_epoch)
                break

    state.restore(best)
    state.eval()
    report.best_epoch = stopper.best_epoch
    report.wall_time_sec = time.perf_counter() - started
    return state, report


# ─── Closed-form baseline ───────────────────────────────────────────


@dataclass
class LeastSquaresResult:
    weights: Matrix
    train_mse: float
    val_mse: float


def least_squares_oracle(
    train: Sequence[WindowSample],
    val: Sequence[WindowSample],
) -> LeastSquaresResult:
    """Normal-equations solution of Y = W X over the training windows."""
    if not train or not val:
        raise SpecError("least_squares_oracle needs non-empty train and val windows", code="EMPTY_WINDOWS")
    X, Y = stack_windows(train)
    solution, *_ = np.linalg.lstsq(X.T, Y.T, rcond=None)
    W = np.ascontiguousarray(solution.T)
    train_mse, _ = mse_loss(W @ X, Y)
    Xv, Yv = stack_windows(val)
    val_mse, _ = mse_loss(W @ Xv, Yv)
    return LeastSquaresResult(weights=W, train_mse=train_mse, val_mse=val_mse)
