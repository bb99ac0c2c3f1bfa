"""Tests for the network substrate: activations, backprop, optimizers, schedule."""

import math

import numpy as np
import pytest

from scmtest.errors import ContractViolationError, InvalidArgumentError
from scmtest.nnet import (
    LrSchedule,
    Mlp,
    MlpSpec,
    backward,
    forward,
    init_mlp,
    init_optimizer,
    lr_at,
    mlp_from_json,
    mlp_to_json,
    optimizer_step,
    soft_leaky_relu,
    soft_leaky_relu_grad,
)


def fd_param_grads(loss_fn, params, h=1e-5):
    """Central finite differences over every parameter entry."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + h
            up = loss_fn()
            p[idx] = old - h
            down = loss_fn()
            p[idx] = old
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_rel_err(analytic, numeric, floor=1e-6):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


class TestSoftLeakyRelu:
    def test_value_at_zero(self):
        assert soft_leaky_relu(0.0) == pytest.approx(0.9 * math.log(2), abs=1e-12)

    def test_asymptotic_slopes(self):
        big = 50.0
        up = (soft_leaky_relu(big + 1) - soft_leaky_relu(big))
        down = (soft_leaky_relu(-big) - soft_leaky_relu(-big - 1))
        assert up == pytest.approx(1.0, abs=1e-6)
        assert down == pytest.approx(0.1, abs=1e-6)

    def test_grad_at_zero(self):
        assert soft_leaky_relu_grad(0.0) == pytest.approx(0.55, abs=1e-12)

    def test_monotone_and_grad_range(self):
        t = np.linspace(-40, 40, 2001)
        y = soft_leaky_relu(t)
        assert np.all(np.diff(y) > 0)
        g = soft_leaky_relu_grad(t)
        assert np.all(g >= 0.1) and np.all(g <= 1.0)
        # strictly inside (0.1, 1) wherever floats have not saturated
        inner = soft_leaky_relu_grad(np.linspace(-30, 30, 2001))
        assert np.all(inner > 0.1) and np.all(inner < 1.0)

    def test_stable_for_large_inputs(self):
        assert np.isfinite(soft_leaky_relu(1e4))
        assert np.isfinite(soft_leaky_relu(-1e4))


class TestForward:
    def test_zero_net_zero_output(self):
        spec = MlpSpec((3, 4, 2))
        mlp = Mlp(spec, [np.zeros((3, 4)), np.zeros((4, 2))],
                  [np.zeros(4), np.zeros(2)])
        y, _ = forward(mlp, np.array([1.0, -2.0, 3.0]))
        # hidden soft-leaky-relu of 0 is a constant, but its weights are zero
        assert np.allclose(y, 0.0)

    def test_single_linear_layer(self):
        rng = np.random.default_rng(0)
        w = rng.standard_normal((3, 2))
        b = rng.standard_normal(2)
        mlp = Mlp(MlpSpec((3, 2)), [w], [b])
        x = rng.standard_normal(3)
        y, _ = forward(mlp, x)
        assert np.allclose(y, x @ w + b, atol=1e-14)

    def test_two_layer_hand_recomputation(self):
        rng = np.random.default_rng(5)
        mlp = init_mlp(MlpSpec((2, 3, 2)), rng)
        x = np.array([1.0, -1.0])
        y, _ = forward(mlp, x)
        z1 = x @ mlp.weights[0] + mlp.biases[0]
        h1 = 0.1 * z1 + 0.9 * np.log1p(np.exp(z1))
        expected = h1 @ mlp.weights[1] + mlp.biases[1]
        assert np.allclose(y, expected, atol=1e-12)

    def test_batch_shape(self):
        mlp = init_mlp(MlpSpec((3, 4, 1)), np.random.default_rng(0))
        ys, _ = forward(mlp, np.ones((5, 3)))
        assert ys.shape == (5, 1)

    def test_size_mismatch(self):
        mlp = init_mlp(MlpSpec((3, 2)), np.random.default_rng(0))
        with pytest.raises(InvalidArgumentError):
            forward(mlp, np.ones(4))


class TestBackward:
    def test_zero_grad_output(self):
        mlp = init_mlp(MlpSpec((3, 4, 2)), np.random.default_rng(1))
        _, cache = forward(mlp, np.ones(3))
        grads, g_in = backward(mlp, cache, np.zeros(2))
        assert all(np.all(g == 0) for g in grads)
        assert np.all(g_in == 0)

    def test_linear_layer_closed_form(self):
        rng = np.random.default_rng(2)
        w = rng.standard_normal((3, 2))
        mlp = Mlp(MlpSpec((3, 2)), [w], [np.zeros(2)])
        x = rng.standard_normal(3)
        g = rng.standard_normal(2)
        _, cache = forward(mlp, x)
        grads, g_in = backward(mlp, cache, g)
        assert np.allclose(grads[0], np.outer(x, g), atol=1e-14)
        assert np.allclose(grads[1], g, atol=1e-14)
        assert np.allclose(g_in, w @ g, atol=1e-14)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        mlp = init_mlp(MlpSpec((3, 5, 2)), rng)
        x = rng.standard_normal((4, 3))
        target = rng.standard_normal((4, 2))

        def loss():
            y, _ = forward(mlp, x)
            return float(((y - target) ** 2).sum())

        y, cache = forward(mlp, x)
        grads, _ = backward(mlp, cache, 2.0 * (y - target))
        numeric = fd_param_grads(loss, mlp.parameters())
        assert max_rel_err(grads, numeric) < 1e-5

    def test_stale_cache_rejected(self):
        mlp_a = init_mlp(MlpSpec((2, 2)), np.random.default_rng(0))
        mlp_b = init_mlp(MlpSpec((2, 2)), np.random.default_rng(1))
        _, cache = forward(mlp_a, np.ones(2))
        with pytest.raises(ContractViolationError):
            backward(mlp_b, cache, np.ones(2))

    def test_wrong_grad_shape_rejected(self):
        mlp = init_mlp(MlpSpec((2, 3)), np.random.default_rng(0))
        _, cache = forward(mlp, np.ones(2))
        with pytest.raises(ContractViolationError):
            backward(mlp, cache, np.ones(2))


class TestOptimizers:
    def test_sgd_step(self):
        p = [np.array([1.0])]
        state = init_optimizer("sgd", p)
        optimizer_step(state, p, [np.array([0.5])], lr=0.1)
        assert p[0][0] == pytest.approx(0.95, abs=1e-15)

    def test_adam_first_step_magnitude(self):
        # first bias-corrected step moves by ~lr regardless of gradient scale
        for g0 in (0.5, 3.0, 1e-3):
            p = [np.array([1.0])]
            state = init_optimizer("adam", p)
            optimizer_step(state, p, [np.array([g0])], lr=0.01)
            expected = 1.0 - 0.01 * g0 / (abs(g0) + 1e-8)
            assert p[0][0] == pytest.approx(expected, abs=1e-12)

    def test_adabelief_first_step_closed_form(self):
        g0 = 0.7
        p = [np.array([2.0])]
        state = init_optimizer("adabelief", p)
        optimizer_step(state, p, [np.array([g0])], lr=0.01)
        m1 = 0.1 * g0
        s1 = 0.001 * (g0 - m1) ** 2 + 1e-8
        step = 0.01 * (m1 / 0.1) / (math.sqrt(s1 / 0.001) + 1e-8)
        assert p[0][0] == pytest.approx(2.0 - step, abs=1e-12)

    def test_zero_gradient_is_fixed_point(self):
        for kind in ("adam", "adabelief"):
            p = [np.array([1.0, -2.0])]
            state = init_optimizer(kind, p)
            for _ in range(3):
                optimizer_step(state, p, [np.zeros(2)], lr=0.1)
            assert np.allclose(p[0], [1.0, -2.0], atol=1e-8 * 0.1)

    def test_shape_mismatch(self):
        p = [np.zeros(2)]
        state = init_optimizer("sgd", p)
        with pytest.raises(ContractViolationError):
            optimizer_step(state, p, [np.zeros(3)], lr=0.1)

    def test_unknown_kind(self):
        with pytest.raises(InvalidArgumentError):
            init_optimizer("lbfgs", [np.zeros(1)])


class TestLrSchedule:
    def test_start_is_initial(self):
        s = LrSchedule(0.01, period=10)
        assert lr_at(s, 0) == pytest.approx(0.01)

    def test_end_is_zero_without_restarts(self):
        s = LrSchedule(0.01, period=10)
        assert lr_at(s, 10) == pytest.approx(0.0, abs=1e-18)
        assert lr_at(s, 15) == pytest.approx(0.0, abs=1e-18)

    def test_warm_restart_returns_to_initial(self):
        s = LrSchedule(0.01, period=10, warm_restarts=True)
        assert lr_at(s, 10) == pytest.approx(0.01)
        assert lr_at(s, 25) == pytest.approx(lr_at(s, 5))

    def test_midpoint_half(self):
        s = LrSchedule(0.02, period=10)
        assert lr_at(s, 5) == pytest.approx(0.01)

    def test_negative_epoch_rejected(self):
        with pytest.raises(InvalidArgumentError):
            lr_at(LrSchedule(0.01, period=10), -1)


class TestSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(9)
        mlp = init_mlp(MlpSpec((3, 5, 2), activation="tanh", init="unit"), rng)
        back = mlp_from_json(mlp_to_json(mlp))
        assert back.spec == mlp.spec
        for a, b in zip(mlp.parameters(), back.parameters()):
            assert np.array_equal(a, b)

    def test_forward_identical_after_round_trip(self):
        rng = np.random.default_rng(10)
        mlp = init_mlp(MlpSpec((4, 8, 1)), rng)
        back = mlp_from_json(mlp_to_json(mlp))
        x = rng.standard_normal((6, 4))
        ya, _ = forward(mlp, x)
        yb, _ = forward(back, x)
        assert np.array_equal(ya, yb)


class TestMlpSpec:
    def test_rejects_single_layer(self):
        with pytest.raises(InvalidArgumentError):
            MlpSpec((3,))

    def test_rejects_zero_width(self):
        with pytest.raises(InvalidArgumentError):
            MlpSpec((3, 0, 1))

    def test_determinism(self):
        a = init_mlp(MlpSpec((3, 4, 1)), np.random.default_rng(5))
        b = init_mlp(MlpSpec((3, 4, 1)), np.random.default_rng(5))
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert np.array_equal(pa, pb)
