"""
rsg_core - Layers
GeLU, inverted dropout, reversible instance normalization (RevIN) and the
moving-average trend/seasonal decomposition, each with its analytic
backward pass.

Every function works column-wise on an ``L x C`` matrix: each column is one
channel of one window. Per-channel vectors (RevIN alpha/beta) of length N are
tiled across the ``C / N`` windows of a batch.
"""

from __future__ import annotations

import functools
import math
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf

from .models import ContractError, GeluVariant, Mode, RevInStats, ShapeError, SpecError
from .numeric import Matrix, RngState, require_same_shape, shape_str

SQRT_2 = math.sqrt(2.0)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
GELU_TANH_COEF = 0.044715


# ─── GeLU ───────────────────────────────────────────────────────────


def normal_cdf(x: Matrix) -> Matrix:
    return 0.5 * (1.0 + erf(x / SQRT_2))


def normal_pdf(x: Matrix) -> Matrix:
    return INV_SQRT_2PI * np.exp(-0.5 * x * x)


def gelu(x: Matrix, variant: GeluVariant = GeluVariant.EXACT) -> Matrix:
    """x * Phi(x), or the tanh approximation."""
    if GeluVariant(variant) is GeluVariant.TANH:
        inner = SQRT_2_OVER_PI * (x + GELU_TANH_COEF * x ** 3)
        return 0.5 * x * (1.0 + np.tanh(inner))
    return x * normal_cdf(x)


def gelu_derivative(x: Matrix, variant: GeluVariant = GeluVariant.EXACT) -> Matrix:
    if GeluVariant(variant) is GeluVariant.TANH:
        t = np.tanh(SQRT_2_OVER_PI * (x + GELU_TANH_COEF * x ** 3))
        d_inner = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_TANH_COEF * x * x)
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner
    return normal_cdf(x) + x * normal_pdf(x)


def gelu_backward(x: Matrix, upstream: Matrix, variant: GeluVariant = GeluVariant.EXACT) -> Matrix:
    require_same_shape(x, upstream, "gelu_backward")
    return upstream * gelu_derivative(x, variant)


# ─── Dropout ────────────────────────────────────────────────────────


def dropout(
    x: Matrix,
    rate: float,
    mode: Mode,
    rng: Optional[RngState] = None,
) -> Tuple[Matrix, Optional[Matrix]]:
    """
    Inverted dropout. Returns (output, mask) where mask holds the per-entry
    scale (0 or 1/(1-rate)); mask is None when the layer is the identity.
    """
    if not 0.0 <= rate < 1.0:
        raise SpecError(f"dropout rate must be in [0, 1), got {rate}")
    if Mode(mode) is Mode.EVAL or rate == 0.0:
        return x, None
    if rng is None:
        raise ContractError("train-mode dropout needs an RngState")
    keep = rng.random(x.shape) >= rate
    mask = keep / (1.0 - rate)
    return x * mask, mask


def dropout_backward(upstream: Matrix, mask: Optional[Matrix]) -> Matrix:
    return upstream if mask is None else upstream * mask


# ─── RevIN ──────────────────────────────────────────────────────────


def tile_channels(vec: np.ndarray, n_columns: int) -> np.ndarray:
    """Repeat a per-channel vector across the windows of a column batch."""
    flat = np.asarray(vec, dtype=np.float64).reshape(-1)
    if flat.size == 0 or n_columns % flat.size:
        raise ShapeError(f"{n_columns} columns cannot be split into channels of size {flat.size}")
    return np.tile(flat, n_columns // flat.size)


def fold_channels(col_values: np.ndarray, n_channels: int) -> np.ndarray:
    """Sum per-column values back onto their channel (inverse of tiling)."""
    return col_values.reshape(-1, n_channels).sum(axis=0).reshape(1, n_channels)


def revin_normalize(
    window: Matrix,
    alpha: np.ndarray,
    beta: np.ndarray,
    epsilon: float,
) -> Tuple[Matrix, RevInStats]:
    """x' = (x - mu) / (sigma + eps), then x'' = (x' - beta) / alpha, per column."""
    a = tile_channels(alpha, window.shape[1])
    b = tile_channels(beta, window.shape[1])
    if np.any(a == 0.0):
        raise SpecError("RevIN alpha has a zero entry", code="DEGENERATE_AFFINE")
    mu = window.mean(axis=0)
    sigma = np.sqrt(np.mean((window - mu) ** 2, axis=0))
    x_prime = (window - mu) / (sigma + epsilon)
    return (x_prime - b) / a, RevInStats(mu=mu, sigma=sigma, epsilon=float(epsilon))


def revin_denormalize(
    yhat: Matrix,
    stats: RevInStats,
    alpha: np.ndarray,
    beta: np.ndarray,
) -> Matrix:
    """y' = alpha * yhat + beta, then y' * (sigma + eps) + mu. Consumes ``stats``."""
    if stats.consumed:
        raise ContractError("RevIN statistics were already consumed by a denormalize call")
    if yhat.shape[1] != stats.mu.shape[0]:
        raise ShapeError(
            f"denormalize got {shape_str(yhat)} but statistics cover {stats.mu.shape[0]} columns"
        )
    a = tile_channels(alpha, yhat.shape[1])
    b = tile_channels(beta, yhat.shape[1])
    stats.consumed = True
    return (a * yhat + b) * (stats.sigma + stats.epsilon) + stats.mu


def revin_denormalize_backward(
    upstream: Matrix,
    yhat: Matrix,
    stats: RevInStats,
    alpha: np.ndarray,
    beta: np.ndarray,
):
    """
    Returns (d_yhat, d_alpha_cols, d_beta_cols, d_mu, d_scale) where the last
    two are the gradients flowing into the window statistics.
    """
    a = tile_channels(alpha, yhat.shape[1])
    b = tile_channels(beta, yhat.shape[1])
    scale = stats.sigma + stats.epsilon
    d_affine = upstream * scale
    d_scale = np.sum(upstream * (a * yhat + b), axis=0)
    d_mu = np.sum(upstream, axis=0)
    return (
        d_affine * a,
        np.sum(d_affine * yhat, axis=0),
        np.sum(d_affine, axis=0),
        d_mu,
        d_scale,
    )


def revin_normalize_backward(
    upstream: Matrix,
    window: Matrix,
    stats: RevInStats,
    alpha: np.ndarray,
    beta: np.ndarray,
    d_mu: np.ndarray,
    d_scale: np.ndarray,
):
    """
    Returns (d_window, d_alpha_cols, d_beta_cols). ``d_mu``/``d_scale`` carry
    the statistics gradient already collected at the denormalize end.
    """
    a = tile_channels(alpha, window.shape[1])
    b = tile_channels(beta, window.shape[1])
    length = window.shape[0]
    scale = stats.sigma + stats.epsilon
    centered = window - stats.mu
    x_prime = centered / scale
    x_pp = (x_prime - b) / a

    d_alpha = -np.sum(upstream * x_pp, axis=0) / a
    d_beta = -np.sum(upstream, axis=0) / a
    d_prime = upstream / a

    d_mu = d_mu - np.sum(d_prime, axis=0) / scale
    d_scale = d_scale - np.sum(d_prime * x_prime, axis=0) / scale
    # d sigma / d x_k = (x_k - mu) / (L sigma); zero for a flat column
    safe_sigma = np.where(stats.sigma > 0.0, stats.sigma, 1.0)
    d_sigma_dx = np.where(stats.sigma > 0.0, centered / (length * safe_sigma), 0.0)
    d_window = d_prime / scale + d_mu / length + d_scale * d_sigma_dx
    return d_window, d_alpha, d_beta


# ─── Moving-average decomposition ───────────────────────────────────


def _check_kernel(kernel: int) -> None:
    if kernel < 1 or kernel % 2 == 0:
        raise SpecError(f"moving-average kernel must be odd and >= 1, got {kernel}")


def moving_average(x: Matrix, kernel: int) -> Matrix:
    """
    Centered mean over ``kernel`` rows per column, replicate-padding
    (kernel-1)/2 rows at each end.

    Computed as the row value plus the mean deviation of its window, so flat
    stretches come out exactly flat.
    """
    _check_kernel(kernel)
    if kernel == 1:
        return x.copy()
    pad = (kernel - 1) // 2
    padded = np.pad(x, ((pad, pad), (0, 0)), mode="edge")
    windows = sliding_window_view(padded, kernel, axis=0)  # (L, C, kernel)
    return x + (windows - x[:, :, None]).mean(axis=-1)


@functools.lru_cache(maxsize=64)
def moving_average_matrix(length: int, kernel: int) -> Matrix:
    """The L x L averaging operator A with moving_average(x) == A @ x."""
    _check_kernel(kernel)
    pad = (kernel - 1) // 2
    rows = np.repeat(np.arange(length), kernel)
    cols = np.clip(np.arange(length)[:, None] + np.arange(-pad, pad + 1)[None, :], 0, length - 1)
    op = np.zeros((length, length))
    np.add.at(op, (rows, cols.reshape(-1)), 1.0 / kernel)
    op.setflags(write=False)
    return op


def decompose(x: Matrix, kernel: int) -> Tuple[Matrix, Matrix]:
    """
    Split into (seasonal, trend) with trend = moving_average(x).

    The trend is re-derived from the seasonal part so that seasonal + trend
    rounds back to x; this holds bit-exactly whenever |trend| <= |x| or the
    data sit on a common dyadic grid (integers, constants, ramps, impulses).
    """
    trend = moving_average(x, kernel)
    seasonal = x - trend
    return seasonal, x - seasonal
