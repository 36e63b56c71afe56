"""
rsg_core - Numeric Core
Dense float64 matrices, a seeded counter-based RNG, and a central
finite-difference gradient oracle.

Matrices are plain 2-D C-contiguous ``numpy.float64`` arrays (row-major flat
storage). The helpers here add the shape checks and error contracts the rest
of the engine relies on.
"""

from __future__ import annotations

from enum import Enum
from typing import Callable, Tuple

import numpy as np
import numpy.typing as npt

from .models import NumericError, ShapeError, SpecError

Matrix = npt.NDArray[np.float64]

UINT64_MAX = 2 ** 64 - 1


class ElementwiseOp(str, Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"


_ELEMENTWISE = {
    ElementwiseOp.ADD: np.add,
    ElementwiseOp.SUB: np.subtract,
    ElementwiseOp.MUL: np.multiply,
}


def as_matrix(data) -> Matrix:
    """Coerce to a 2-D C-contiguous float64 array."""
    m = np.ascontiguousarray(data, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ShapeError(f"Expected a 2-D matrix, got shape {m.shape}")
    return m


def shape_str(m: Matrix) -> str:
    return f"{m.shape[0]}x{m.shape[1]}"


def require_same_shape(a: Matrix, b: Matrix, what: str = "operands") -> None:
    if a.shape != b.shape:
        raise ShapeError(f"Shape mismatch for {what}: {shape_str(a)} vs {shape_str(b)}")


def require_finite(m: Matrix, what: str) -> None:
    if not np.all(np.isfinite(m)):
        raise NumericError(f"Non-finite values in {what}")


# ─── RNG ────────────────────────────────────────────────────────────


class RngState:
    """
    Seeded counter-based generator (Philox 4x64).

    Identical seed plus identical call sequence yields identical output on
    every platform. ``position`` counts the values handed out so far.
    """

    def __init__(self, seed: int):
        if not 0 <= int(seed) <= UINT64_MAX:
            raise SpecError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self._seed = int(seed)
        self._gen = np.random.Generator(np.random.Philox(key=self._seed))
        self._position = 0

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def position(self) -> int:
        return self._position

    def uniform(self, low: float, high: float, shape: Tuple[int, ...]) -> np.ndarray:
        out = self._gen.uniform(low, high, size=shape)
        self._position += int(out.size)
        return out

    def random(self, shape: Tuple[int, ...]) -> np.ndarray:
        out = self._gen.random(size=shape)
        self._position += int(out.size)
        return out

    def permutation(self, n: int) -> np.ndarray:
        self._position += n
        return self._gen.permutation(n)

    def __repr__(self) -> str:
        return f"RngState(seed={self._seed}, position={self._position})"


# ─── Operations ─────────────────────────────────────────────────────


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Standard matrix product; raises ShapeError naming both shapes."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"Cannot multiply {shape_str(a)} by {shape_str(b)}")
    return a @ b


def elementwise(a: Matrix, b: Matrix, op: ElementwiseOp) -> Matrix:
    require_same_shape(a, b, f"elementwise {ElementwiseOp(op).value}")
    return _ELEMENTWISE[ElementwiseOp(op)](a, b)


def init_uniform(rng: RngState, rows: int, cols: int, bound: float) -> Matrix:
    """Entries i.i.d. uniform in [-bound, bound], drawn in row-major order."""
    if not bound > 0:
        raise SpecError(f"init bound must be > 0, got {bound}")
    return np.ascontiguousarray(rng.uniform(-bound, bound, (rows, cols)))


def finite_diff_gradient(f: Callable[[Matrix], float], x: Matrix, h: float = 1e-5) -> Matrix:
    """
    Central differences: g[i, j] = (f(x + h e_ij) - f(x - h e_ij)) / 2h.

    ``x`` is not modified.
    """
    if not h > 0:
        raise SpecError(f"finite-difference step must be > 0, got {h}")
    point = np.array(x, dtype=np.float64, copy=True)
    grad = np.zeros_like(point)
    for idx in np.ndindex(*point.shape):
        original = point[idx]
        point[idx] = original + h
        f_plus = f(point)
        point[idx] = original - h
        f_minus = f(point)
        point[idx] = original
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericError(f"Non-finite function value at entry {idx}")
        grad[idx] = (f_plus - f_minus) / (2.0 * h)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-12) -> float:
    """||a - b|| / max(||a|| + ||b||, floor)."""
    num = float(np.linalg.norm(a - b))
    den = float(np.linalg.norm(a) + np.linalg.norm(b))
    return num / max(den, floor)
