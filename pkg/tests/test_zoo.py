"""
Tests for the model zoo: shapes, analytic gradients and structural identities.
"""

import numpy as np
import pytest

from rsg_core.models import (
    ContractError,
    DropoutPlacement,
    GeluVariant,
    Mode,
    ModelKind,
    ModelSpec,
    ShapeError,
    WindowSample,
)
from rsg_core.numeric import RngState, finite_diff_gradient, relative_error
from rsg_core.zoo import (
    backward,
    clone_state,
    forward,
    init_state,
    parameter_count,
    parameter_shapes,
    predict,
    stack_windows,
)

L, T, N = 8, 4, 2
DROPOUT_SEED = 77


def _spec(kind, **kw):
    kw.setdefault("ma_kernel", 3)
    return ModelSpec(kind=kind, input_length=L, horizon=T, n_channels=N, **kw)


def _perturbed_state(spec, gen):
    state = init_state(spec, seed=3)
    if spec.uses_revin:
        state.params["alpha"] = 1.0 + 0.3 * gen.standard_normal((1, N))
        state.params["beta"] = 0.2 * gen.standard_normal((1, N))
    return state


def _loss_fn(spec, state, x, upstream):
    def f():
        state.rng = RngState(DROPOUT_SEED)
        pred, _ = forward(spec, state, x)
        return float(np.sum(pred * upstream))
    return f


def _assert_gradient_matches(analytic, numeric, what):
    """Relative error below 1e-4, or both sides agree to 1e-8 when the true gradient is ~0."""
    close = np.allclose(analytic, numeric, rtol=1e-4, atol=1e-8)
    assert close or relative_error(analytic, numeric) < 1e-4, (
        f"{what}: analytic {analytic!r} vs numeric {numeric!r}"
    )


GRADIENT_CASES = [
    (ModelKind.LINEAR, {}),
    (ModelKind.NLINEAR, {}),
    (ModelKind.DLINEAR, {}),
    (ModelKind.RLINEAR, {}),
    (ModelKind.GLINEAR, {"gelu_variant": GeluVariant.EXACT}),
    (ModelKind.GLINEAR, {"gelu_variant": GeluVariant.TANH}),
    (ModelKind.RS_GLINEAR, {"gelu_variant": GeluVariant.EXACT}),
    (ModelKind.RS_GLINEAR, {"gelu_variant": GeluVariant.TANH}),
    (ModelKind.RS_GLINEAR, {"dropout_placement": DropoutPlacement.POST_ADD}),
]


class TestParameters:
    """Parameter layout and initialization."""

    def test_shapes(self):
        spec = ModelSpec(kind="rs_glinear", input_length=336, horizon=96, n_channels=7)
        shapes = parameter_shapes(spec)
        assert list(shapes) == ["W_1", "W_2", "W_3", "W_4", "W_out", "alpha", "beta"]
        assert shapes["W_out"] == (96, 336)
        assert shapes["alpha"] == (1, 7)

    def test_counts(self):
        big = dict(input_length=336, horizon=96, n_channels=7)
        assert parameter_count(ModelSpec(kind="linear", **big)) == 96 * 336
        assert parameter_count(ModelSpec(kind="dlinear", **big)) == 2 * 96 * 336
        assert parameter_count(ModelSpec(kind="glinear", **big)) == 336 * 336 + 96 * 336 + 14
        assert parameter_count(ModelSpec(kind="rs_glinear", **big)) == 4 * 336 * 336 + 96 * 336 + 14

    def test_init(self):
        spec = _spec(ModelKind.GLINEAR)
        state = init_state(spec, seed=5)
        assert np.array_equal(state.params["alpha"], np.ones((1, N)))
        assert np.array_equal(state.params["beta"], np.zeros((1, N)))
        assert np.max(np.abs(state.params["W_1"])) <= 1 / np.sqrt(L)
        assert state.mode is Mode.EVAL

    def test_init_deterministic(self):
        spec = _spec(ModelKind.RS_GLINEAR)
        a, b = init_state(spec, 11), init_state(spec, 11)
        for name in a.params:
            assert np.array_equal(a.params[name], b.params[name])
        assert not np.array_equal(a.params["W_1"], init_state(spec, 12).params["W_1"])

    def test_check(self):
        spec = _spec(ModelKind.RLINEAR)
        state = init_state(spec, 0)
        state.check(spec)
        del state.params["beta"]
        with pytest.raises(ContractError):
            state.check(spec)

    def test_check_shape(self):
        spec = _spec(ModelKind.LINEAR)
        state = init_state(spec, 0)
        state.params["W"] = np.zeros((T, L + 1))
        with pytest.raises(ShapeError):
            state.check(spec)


class TestGradients:
    """Analytic backward against central differences."""

    @pytest.mark.parametrize("kind,kw", GRADIENT_CASES)
    @pytest.mark.parametrize("mode", [Mode.EVAL, Mode.TRAIN])
    def test_parameter_gradients(self, gen, kind, kw, mode):
        spec = _spec(kind, dropout_rate=0.3, **kw)
        state = _perturbed_state(spec, gen)
        state.mode = mode
        x = gen.standard_normal((L, 2 * N)) * 2 + 1
        upstream = gen.standard_normal((T, 2 * N))

        state.rng = RngState(DROPOUT_SEED)
        _, cache = forward(spec, state, x)
        grads = backward(spec, state, cache, upstream)

        f = _loss_fn(spec, state, x, upstream)
        for name in parameter_shapes(spec):
            original = state.params[name]

            def loss_at(value, name=name):
                state.params[name] = value
                return f()

            numeric = finite_diff_gradient(loss_at, original)
            state.params[name] = original
            _assert_gradient_matches(grads.params[name], numeric, name)

    @pytest.mark.parametrize("kind,kw", GRADIENT_CASES)
    def test_input_gradient(self, gen, kind, kw):
        spec = _spec(kind, **kw)
        state = _perturbed_state(spec, gen)
        x = gen.standard_normal((L, N)) + 0.5
        upstream = gen.standard_normal((T, N))
        _, cache = forward(spec, state, x)
        grads = backward(spec, state, cache, upstream)

        def loss_at(value):
            return float(np.sum(forward(spec, state, value)[0] * upstream))

        _assert_gradient_matches(grads.input, finite_diff_gradient(loss_at, x), "input")

    def test_rlinear_alpha_cancels(self, gen):
        spec = _spec(ModelKind.RLINEAR)
        state = _perturbed_state(spec, gen)
        x = gen.standard_normal((L, N)) * 2 + 1
        before = predict(spec, state, x)
        _, cache = forward(spec, state, x)
        grads = backward(spec, state, cache, gen.standard_normal((T, N)))
        assert np.allclose(grads.params["alpha"], 0.0, atol=1e-9)
        state.params["alpha"] = state.params["alpha"] * 2.5
        assert np.allclose(predict(spec, state, x), before, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("kind,kw", GRADIENT_CASES)
    def test_zero_upstream(self, gen, kind, kw):
        spec = _spec(kind, **kw)
        state = _perturbed_state(spec, gen)
        _, cache = forward(spec, state, gen.standard_normal((L, N)))
        grads = backward(spec, state, cache, np.zeros((T, N)))
        for name, value in grads.params.items():
            assert not np.any(value), name
        assert not np.any(grads.input)

    def test_linear_weight_gradient(self, gen):
        spec = _spec(ModelKind.LINEAR)
        state = init_state(spec, 0)
        x = gen.standard_normal((L, N))
        g = gen.standard_normal((T, N))
        _, cache = forward(spec, state, x)
        grads = backward(spec, state, cache, g)
        assert np.allclose(grads.params["W"], g @ x.T, atol=1e-14)


class TestIdentities:
    """Closed-form behaviour of special weight settings."""

    def test_identity_linear(self, gen):
        spec = ModelSpec(kind="linear", input_length=6, horizon=6, n_channels=3)
        state = init_state(spec, 0)
        state.params["W"] = np.eye(6)
        x = gen.standard_normal((6, 3))
        assert np.array_equal(predict(spec, state, x), x)

    def test_nlinear_zero_weights_repeat_last(self, gen):
        spec = _spec(ModelKind.NLINEAR)
        state = init_state(spec, 0)
        state.params["W"] = np.zeros((T, L))
        x = gen.standard_normal((L, N))
        assert np.array_equal(predict(spec, state, x), np.tile(x[-1:], (T, 1)))

    def test_zero_blocks_reduce_to_rlinear(self, gen):
        rs_spec = _spec(ModelKind.RS_GLINEAR)
        rs = _perturbed_state(rs_spec, gen)
        for i in range(1, 5):
            rs.params[f"W_{i}"] = np.zeros((L, L))
        r_spec = _spec(ModelKind.RLINEAR)
        r = init_state(r_spec, 0)
        r.params.update(W=rs.params["W_out"], alpha=rs.params["alpha"], beta=rs.params["beta"])
        x = gen.standard_normal((L, 3 * N))
        assert np.array_equal(predict(rs_spec, rs, x), predict(r_spec, r, x))

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_channel_permutation(self, gen, kind):
        spec = ModelSpec(kind=kind, input_length=L, horizon=T, n_channels=3, ma_kernel=3)
        state = init_state(spec, 4)
        if spec.uses_revin:
            state.params["alpha"] = gen.uniform(0.5, 1.5, (1, 3))
            state.params["beta"] = gen.normal(0, 0.3, (1, 3))
        x = gen.standard_normal((L, 3))
        perm = [2, 0, 1]
        base = predict(spec, state, x)

        permuted = clone_state(state)
        if spec.uses_revin:
            permuted.params["alpha"] = state.params["alpha"][:, perm]
            permuted.params["beta"] = state.params["beta"][:, perm]
        assert np.allclose(predict(spec, permuted, x[:, perm]), base[:, perm], atol=1e-12)

    def test_eval_deterministic(self, gen):
        spec = _spec(ModelKind.RS_GLINEAR, dropout_rate=0.5)
        state = init_state(spec, 1)
        x = gen.standard_normal((L, N))
        assert np.array_equal(predict(spec, state, x), predict(spec, state, x))

    def test_train_mode_uses_dropout(self, gen):
        spec = _spec(ModelKind.RS_GLINEAR, dropout_rate=0.5)
        state = init_state(spec, 1)
        x = gen.standard_normal((L, 4 * N))
        evaluated = predict(spec, state, x)
        state.train()
        trained, _ = forward(spec, state, x)
        assert not np.array_equal(trained, evaluated)
        assert state.rng.position > 0

    def test_predict_keeps_mode(self, gen):
        spec = _spec(ModelKind.RLINEAR)
        state = init_state(spec, 1).train()
        predict(spec, state, gen.standard_normal((L, N)))
        assert state.mode is Mode.TRAIN


class TestContracts:
    """Cache and shape discipline."""

    def test_cache_used_once(self, gen):
        spec = _spec(ModelKind.GLINEAR)
        state = init_state(spec, 0)
        _, cache = forward(spec, state, gen.standard_normal((L, N)))
        backward(spec, state, cache, np.ones((T, N)))
        with pytest.raises(ContractError):
            backward(spec, state, cache, np.ones((T, N)))

    def test_missing_cache(self):
        spec = _spec(ModelKind.LINEAR)
        with pytest.raises(ContractError):
            backward(spec, init_state(spec, 0), None, np.ones((T, N)))

    def test_cache_from_other_kind(self, gen):
        linear, nlinear = _spec(ModelKind.LINEAR), _spec(ModelKind.NLINEAR)
        _, cache = forward(linear, init_state(linear, 0), gen.standard_normal((L, N)))
        with pytest.raises(ContractError):
            backward(nlinear, init_state(nlinear, 0), cache, np.ones((T, N)))

    def test_loss_grad_shape(self, gen):
        spec = _spec(ModelKind.LINEAR)
        state = init_state(spec, 0)
        _, cache = forward(spec, state, gen.standard_normal((L, N)))
        with pytest.raises(ShapeError):
            backward(spec, state, cache, np.ones((T + 1, N)))

    def test_input_shape(self):
        spec = _spec(ModelKind.LINEAR)
        state = init_state(spec, 0)
        with pytest.raises(ShapeError):
            forward(spec, state, np.zeros((L - 1, N)))
        with pytest.raises(ShapeError):
            forward(spec, state, np.zeros((L, N + 1)))


class TestBatching:
    """Window stacking."""

    def test_stack_and_split(self, gen):
        samples = [
            WindowSample(input=gen.standard_normal((L, N)), target=gen.standard_normal((T, N)), origin_index=i)
            for i in range(3)
        ]
        inputs, targets = stack_windows(samples)
        assert inputs.shape == (L, 3 * N) and targets.shape == (T, 3 * N)
        for sample, part in zip(samples, np.hsplit(targets, 3)):
            assert np.array_equal(sample.target, part)

    def test_batched_equals_single(self, gen):
        spec = _spec(ModelKind.RS_GLINEAR)
        state = init_state(spec, 2)
        windows = [gen.standard_normal((L, N)) for _ in range(4)]
        batched = predict(spec, state, np.hstack(windows))
        for w, part in zip(windows, np.hsplit(batched, len(windows))):
            assert np.allclose(predict(spec, state, w), part, atol=1e-12)
