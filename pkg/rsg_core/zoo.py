"""
rsg_core - Model Zoo
The six linear-family forecasters with analytic forward and backward passes:

    linear      y = W x
    nlinear     y = W (x - x_L) + x_L
    dlinear     y = W_s seasonal(x) + W_t trend(x)
    rlinear     RevIN -> W -> RevIN^-1
    glinear     RevIN -> W_1 -> GeLU -> W_out -> RevIN^-1
    rs_glinear  RevIN -> depth x [z <- dropout(GeLU(W_i z)) + z] -> W_out -> RevIN^-1

All kinds run channel-independently with weights shared across variates.
Inputs are ``L x C`` where C = windows x N; column j is channel j mod N.
"""

from __future__ import annotations

import copy
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .layers import (
    decompose,
    dropout,
    dropout_backward,
    fold_channels,
    gelu,
    gelu_backward,
    moving_average_matrix,
    revin_denormalize,
    revin_denormalize_backward,
    revin_normalize,
    revin_normalize_backward,
)
from .models import (
    ContractError,
    DropoutPlacement,
    Mode,
    ModelKind,
    ModelSpec,
    ShapeError,
    WindowSample,
)
from .numeric import Matrix, RngState, init_uniform, require_finite, shape_str

logger = logging.getLogger("rsg_core.zoo")


# ─── Parameters and state ───────────────────────────────────────────


def block_names(spec: ModelSpec) -> List[str]:
    return [f"W_{i}" for i in range(1, spec.depth + 1)]


def parameter_shapes(spec: ModelSpec) -> "OrderedDict[str, Tuple[int, int]]":
    """Name -> shape of every learnable matrix, in initialization order."""
    L, T, N = spec.input_length, spec.horizon, spec.n_channels
    shapes: "OrderedDict[str, Tuple[int, int]]" = OrderedDict()
    if spec.kind in (ModelKind.LINEAR, ModelKind.NLINEAR, ModelKind.RLINEAR):
        shapes["W"] = (T, L)
    elif spec.kind is ModelKind.DLINEAR:
        shapes["W_s"] = (T, L)
        shapes["W_t"] = (T, L)
    elif spec.kind is ModelKind.GLINEAR:
        shapes["W_1"] = (L, L)
        shapes["W_out"] = (T, L)
    else:
        for name in block_names(spec):
            shapes[name] = (L, L)
        shapes["W_out"] = (T, L)
    if spec.uses_revin:
        shapes["alpha"] = (1, N)
        shapes["beta"] = (1, N)
    return shapes


def parameter_count(spec: ModelSpec) -> int:
    return sum(r * c for r, c in parameter_shapes(spec).values())


@dataclass
class ModelState:
    """Learnable parameters plus the dropout stream and train/eval mode."""
    params: Dict[str, Matrix]
    rng: RngState
    mode: Mode = Mode.EVAL

    def train(self) -> ModelState:
        self.mode = Mode.TRAIN
        return self

    def eval(self) -> ModelState:
        self.mode = Mode.EVAL
        return self

    def snapshot(self) -> Dict[str, Matrix]:
        return {name: value.copy() for name, value in self.params.items()}

    def restore(self, params: Dict[str, Matrix]) -> None:
        self.params = {name: value.copy() for name, value in params.items()}

    def check(self, spec: ModelSpec) -> None:
        """Parameter set must match the spec exactly and be finite."""
        expected = parameter_shapes(spec)
        if set(expected) != set(self.params):
            raise ContractError(
                f"Parameters {sorted(self.params)} do not match {spec.kind.value} "
                f"(expected {sorted(expected)})"
            )
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ShapeError(
                    f"Parameter {name} is {shape_str(self.params[name])}, expected {shape[0]}x{shape[1]}"
                )
            require_finite(self.params[name], f"parameter {name}")


def init_state(spec: ModelSpec, seed: int) -> ModelState:
    """Uniform +-1/sqrt(fan_in) weights, RevIN alpha = 1 and beta = 0."""
    spec.validate()
    rng = RngState(seed)
    params: Dict[str, Matrix] = {}
    for name, (rows, cols) in parameter_shapes(spec).items():
        if name == "alpha":
            params[name] = np.ones((rows, cols))
        elif name == "beta":
            params[name] = np.zeros((rows, cols))
        else:
            params[name] = init_uniform(rng, rows, cols, 1.0 / math.sqrt(cols))
    return ModelState(params=params, rng=rng)


# ─── Forward / backward ─────────────────────────────────────────────


@dataclass
class ForwardCache:
    """Intermediates of one forward call; consumed by exactly one backward."""
    kind: ModelKind
    input_shape: Tuple[int, int]
    values: Dict[str, Any] = field(default_factory=dict)
    used: bool = False


@dataclass
class Gradients:
    params: Dict[str, Matrix]
    input: Matrix


def _check_input(spec: ModelSpec, x: Matrix) -> None:
    if x.ndim != 2 or x.shape[0] != spec.input_length or x.shape[1] % spec.n_channels:
        raise ShapeError(
            f"Expected input with {spec.input_length} rows and a multiple of "
            f"{spec.n_channels} columns, got {x.shape[0]}x{x.shape[1] if x.ndim == 2 else '?'}"
        )


def _fwd_linear(spec, state, x, cache):
    cache["x"] = x
    return state.params["W"] @ x


def _bwd_linear(spec, state, cache, grad, grads):
    W = state.params["W"]
    grads["W"] = grad @ cache["x"].T
    return W.T @ grad


def _fwd_nlinear(spec, state, x, cache):
    last = x[-1:, :]
    shifted = x - last
    cache["shifted"] = shifted
    return state.params["W"] @ shifted + last


def _bwd_nlinear(spec, state, cache, grad, grads):
    W = state.params["W"]
    grads["W"] = grad @ cache["shifted"].T
    d_shifted = W.T @ grad
    d_x = d_shifted.copy()
    d_x[-1, :] += grad.sum(axis=0) - d_shifted.sum(axis=0)
    return d_x


def _fwd_dlinear(spec, state, x, cache):
    seasonal, trend = decompose(x, spec.ma_kernel)
    cache["seasonal"], cache["trend"] = seasonal, trend
    return state.params["W_s"] @ seasonal + state.params["W_t"] @ trend


def _bwd_dlinear(spec, state, cache, grad, grads):
    W_s, W_t = state.params["W_s"], state.params["W_t"]
    grads["W_s"] = grad @ cache["seasonal"].T
    grads["W_t"] = grad @ cache["trend"].T
    d_seasonal = W_s.T @ grad
    d_trend = W_t.T @ grad
    avg = moving_average_matrix(spec.input_length, spec.ma_kernel)
    # seasonal = (I - A) x, trend = A x
    return d_seasonal + avg.T @ (d_trend - d_seasonal)


# Bodies run between RevIN normalize and denormalize: z (L x C) -> h (T x C).


def _body_rlinear(spec, state, z, cache):
    cache["z"] = z
    return state.params["W"] @ z


def _body_rlinear_bwd(spec, state, cache, d_h, grads):
    grads["W"] = d_h @ cache["z"].T
    return state.params["W"].T @ d_h


def _body_glinear(spec, state, z, cache):
    pre = state.params["W_1"] @ z
    act = gelu(pre, spec.gelu_variant)
    cache.update(z=z, pre=pre, act=act)
    return state.params["W_out"] @ act


def _body_glinear_bwd(spec, state, cache, d_h, grads):
    W_1, W_out = state.params["W_1"], state.params["W_out"]
    grads["W_out"] = d_h @ cache["act"].T
    d_pre = gelu_backward(cache["pre"], W_out.T @ d_h, spec.gelu_variant)
    grads["W_1"] = d_pre @ cache["z"].T
    return W_1.T @ d_pre


def _body_rs_glinear(spec, state, z, cache):
    blocks = []
    rng = state.rng if state.mode is Mode.TRAIN else None
    for name in block_names(spec):
        pre = state.params[name] @ z
        act = gelu(pre, spec.gelu_variant)
        if spec.dropout_placement is DropoutPlacement.BRANCH:
            branch, mask = dropout(act, spec.dropout_rate, state.mode, rng)
            z_next = branch + z
        else:
            z_next, mask = dropout(act + z, spec.dropout_rate, state.mode, rng)
        blocks.append({"name": name, "z": z, "pre": pre, "mask": mask})
        z = z_next
    cache["blocks"] = blocks
    cache["z_out"] = z
    return state.params["W_out"] @ z


def _body_rs_glinear_bwd(spec, state, cache, d_h, grads):
    W_out = state.params["W_out"]
    grads["W_out"] = d_h @ cache["z_out"].T
    d_z = W_out.T @ d_h
    for block in reversed(cache["blocks"]):
        W = state.params[block["name"]]
        if spec.dropout_placement is DropoutPlacement.BRANCH:
            d_pre = gelu_backward(block["pre"], dropout_backward(d_z, block["mask"]), spec.gelu_variant)
            skip = d_z
        else:
            d_sum = dropout_backward(d_z, block["mask"])
            d_pre = gelu_backward(block["pre"], d_sum, spec.gelu_variant)
            skip = d_sum
        grads[block["name"]] = d_pre @ block["z"].T
        d_z = skip + W.T @ d_pre
    return d_z


_BODIES: Dict[ModelKind, Tuple[Callable, Callable]] = {
    ModelKind.RLINEAR: (_body_rlinear, _body_rlinear_bwd),
    ModelKind.GLINEAR: (_body_glinear, _body_glinear_bwd),
    ModelKind.RS_GLINEAR: (_body_rs_glinear, _body_rs_glinear_bwd),
}


def _fwd_revin(spec, state, x, cache):
    body, _ = _BODIES[spec.kind]
    alpha, beta = state.params["alpha"], state.params["beta"]
    z, stats = revin_normalize(x, alpha, beta, spec.revin_epsilon)
    h = body(spec, state, z, cache)
    cache.update(x=x, h=h, stats=stats)
    return revin_denormalize(h, stats, alpha, beta)


def _bwd_revin(spec, state, cache, grad, grads):
    _, body_bwd = _BODIES[spec.kind]
    alpha, beta = state.params["alpha"], state.params["beta"]
    stats = cache["stats"]
    d_h, d_alpha_out, d_beta_out, d_mu, d_scale = revin_denormalize_backward(
        grad, cache["h"], stats, alpha, beta
    )
    d_z = body_bwd(spec, state, cache, d_h, grads)
    d_x, d_alpha_in, d_beta_in = revin_normalize_backward(
        d_z, cache["x"], stats, alpha, beta, d_mu, d_scale
    )
    grads["alpha"] = fold_channels(d_alpha_out + d_alpha_in, spec.n_channels)
    grads["beta"] = fold_channels(d_beta_out + d_beta_in, spec.n_channels)
    return d_x


_KINDS: Dict[ModelKind, Tuple[Callable, Callable]] = {
    ModelKind.LINEAR: (_fwd_linear, _bwd_linear),
    ModelKind.NLINEAR: (_fwd_nlinear, _bwd_nlinear),
    ModelKind.DLINEAR: (_fwd_dlinear, _bwd_dlinear),
    ModelKind.RLINEAR: (_fwd_revin, _bwd_revin),
    ModelKind.GLINEAR: (_fwd_revin, _bwd_revin),
    ModelKind.RS_GLINEAR: (_fwd_revin, _bwd_revin),
}


def forward(spec: ModelSpec, state: ModelState, x: Matrix) -> Tuple[Matrix, ForwardCache]:
    """Predict T x C from L x C; the cache feeds one matching backward call."""
    _check_input(spec, x)
    fwd, _ = _KINDS[spec.kind]
    cache = ForwardCache(kind=spec.kind, input_shape=x.shape)
    prediction = fwd(spec, state, x, cache.values)
    return prediction, cache


def backward(
    spec: ModelSpec,
    state: ModelState,
    cache: Optional[ForwardCache],
    loss_grad: Matrix,
) -> Gradients:
    """Gradients of every parameter and of the input, given dLoss/dPrediction."""
    if cache is None or cache.used or cache.kind is not spec.kind:
        raise ContractError("backward needs the unused cache of a matching forward call")
    expected = (spec.horizon, cache.input_shape[1])
    if loss_grad.shape != expected:
        raise ShapeError(
            f"loss gradient is {shape_str(loss_grad)}, prediction was {expected[0]}x{expected[1]}"
        )
    cache.used = True
    _, bwd = _KINDS[spec.kind]
    grads: Dict[str, Matrix] = {}
    d_input = bwd(spec, state, cache.values, loss_grad, grads)
    return Gradients(params=grads, input=d_input)


def predict(spec: ModelSpec, state: ModelState, x: Matrix) -> Matrix:
    """Eval-mode forward without keeping the cache."""
    previous = state.mode
    state.eval()
    try:
        prediction, _ = forward(spec, state, x)
    finally:
        state.mode = previous
    return prediction


# ─── Batching helpers ───────────────────────────────────────────────


def stack_windows(samples: Sequence[WindowSample]) -> Tuple[Matrix, Matrix]:
    """(L x BN inputs, T x BN targets); window b owns columns [bN, (b+1)N)."""
    inputs = np.hstack([s.input for s in samples])
    targets = np.hstack([s.target for s in samples])
    return inputs, targets


def clone_state(state: ModelState) -> ModelState:
    return ModelState(params=state.snapshot(), rng=copy.deepcopy(state.rng), mode=state.mode)
