"""
Tests for the dense network substrate.
"""

import numpy as np
import pytest

from src.exceptions import DimensionMismatchError, InvalidLabelsError, NonFiniteError
from src.nn.core import (
    Activation, AdamState, DenseLayer, Mlp, adam_step, backward, bce_logit_loss, build_mlp,
    forward, grad_check, mse_loss
)
from src.nn.rng import RngHandle, derive_seed, make_rng


def _identity_net(dim: int, activation: Activation = Activation.LINEAR) -> Mlp:
    return Mlp([DenseLayer(np.eye(dim), np.zeros(dim), activation)])


def _kink_margin(mlp: Mlp, batch: np.ndarray) -> float:
    """Smallest |pre-activation| over all ReLU units."""
    margin = np.inf
    current = batch
    for layer in mlp.layers:
        pre = current @ layer.weights + layer.bias
        if layer.activation is Activation.RELU:
            margin = min(margin, float(np.min(np.abs(pre))))
            current = np.maximum(pre, 0.0)
        else:
            current = pre
    return margin


def _random_net(rng: np.random.Generator):
    """Random MLP (<= 3 layers, <= 64 units) and a batch that stays off ReLU kinks."""
    while True:
        n_layers = int(rng.integers(1, 4))
        sizes = [int(rng.integers(1, 9))] + [int(rng.integers(2, 65)) for _ in range(n_layers - 1)]
        sizes.append(int(rng.integers(1, 5)))
        mlp = build_mlp(sizes, rng)
        for layer in mlp.layers:
            layer.bias[:] = rng.normal(0.0, 0.1, size=layer.bias.shape)
        batch = rng.normal(size=(3, sizes[0]))
        if _kink_margin(mlp, batch) > 1e-3:
            return mlp, batch


class TestForward:
    """Test cases for forward passes."""

    def test_identity_linear_layer(self, rng):
        """Test that a linear identity layer returns its input."""
        x = rng.normal(size=(5, 3))
        out = forward(_identity_net(3), x)[-1]
        np.testing.assert_array_equal(out, x)

    def test_relu_identity_layer(self):
        """Test ReLU on [-1, 2] with identity weights."""
        out = forward(_identity_net(2, Activation.RELU), np.array([[-1.0, 2.0]]))[-1]
        np.testing.assert_array_equal(out, [[0.0, 2.0]])

    def test_two_layer_hand_evaluation(self):
        """Test a 2-layer net against hand-evaluated matrix products."""
        mlp = Mlp([
            DenseLayer(np.array([[1.0, -1.0], [2.0, 0.5]]), np.array([0.0, 0.1]), Activation.RELU),
            DenseLayer(np.array([[1.0], [3.0]]), np.array([-1.0]), Activation.LINEAR)
        ])
        # hidden = relu([1 + 2, -1 + 0.5 + 0.1]) = [3, 0]; output = 3 * 1 + 0 * 3 - 1
        activations = forward(mlp, np.array([[1.0, 1.0]]))
        np.testing.assert_allclose(activations[1], [[3.0, 0.0]])
        np.testing.assert_allclose(activations[-1], [[2.0]])
        assert len(activations) == 3

    def test_dimension_mismatch(self):
        """Test that a batch of the wrong width is rejected."""
        with pytest.raises(DimensionMismatchError):
            forward(_identity_net(3), np.ones((2, 4)))

    def test_layer_chaining_is_validated(self):
        """Test that non-chaining layers cannot form an Mlp."""
        with pytest.raises(DimensionMismatchError):
            Mlp([DenseLayer(np.ones((2, 3)), np.zeros(3)), DenseLayer(np.ones((4, 1)), np.zeros(1))])

    def test_bias_length_is_validated(self):
        """Test the bias length invariant."""
        with pytest.raises(DimensionMismatchError):
            DenseLayer(np.ones((2, 3)), np.zeros(2))


class TestBackward:
    """Test cases for backpropagation."""

    def test_linear_sum_loss_weight_grad(self, rng):
        """Test that d(sum of outputs)/dW is the column-wise input sum."""
        mlp = Mlp([DenseLayer(rng.normal(size=(3, 2)), np.zeros(2), Activation.LINEAR)])
        x = rng.normal(size=(4, 3))
        activations = forward(mlp, x)
        grads, input_grad = backward(mlp, activations, np.ones((4, 2)))
        expected = np.repeat(x.sum(axis=0)[:, None], 2, axis=1)
        np.testing.assert_allclose(grads[0], expected)
        np.testing.assert_allclose(grads[1], [4.0, 4.0])
        np.testing.assert_allclose(input_grad, np.ones((4, 2)) @ mlp.layers[0].weights.T)

    def test_dead_relu_blocks_gradient(self):
        """Test that all-negative pre-activations give zero upstream gradients."""
        mlp = Mlp([DenseLayer(np.eye(2), np.full(2, -10.0), Activation.RELU)])
        activations = forward(mlp, np.array([[1.0, 2.0], [0.5, -3.0]]))
        grads, input_grad = backward(mlp, activations, np.ones((2, 2)))
        assert not np.any(grads[0])
        assert not np.any(grads[1])
        assert not np.any(input_grad)

    def test_shape_mismatch(self, rng):
        """Test that a wrongly shaped output gradient is rejected."""
        mlp = _identity_net(2)
        activations = forward(mlp, rng.normal(size=(3, 2)))
        with pytest.raises(DimensionMismatchError):
            backward(mlp, activations, np.ones((2, 2)))
        with pytest.raises(DimensionMismatchError):
            backward(mlp, activations[:1], np.ones((3, 2)))


class TestGradCheck:
    """Test cases for the finite-difference gradient check."""

    def test_twenty_random_nets(self):
        """Test analytic vs central-difference gradients on 20 random MLPs."""
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(20):
            mlp, batch = _random_net(rng)
            target = rng.normal(size=(batch.shape[0], mlp.out_dim))
            worst = max(worst, grad_check(mlp, batch, "mse", target))
        assert worst < 1e-4

    def test_bce_random_nets(self):
        """Test the check with the logistic loss used by the discriminator."""
        rng = np.random.default_rng(77)
        for _ in range(5):
            mlp, batch = _random_net(rng)
            assert grad_check(mlp, batch, "bce") < 1e-4

    def test_identity_net_is_exact(self, rng):
        """Test that a linear identity net checks to near machine precision."""
        assert grad_check(_identity_net(3), rng.uniform(1.0, 2.0, size=(4, 3)), "sum") < 1e-9

    def test_frozen_zero_layer(self, rng):
        """Test a net whose first layer is all zero: gradients are zero both ways."""
        mlp = Mlp([
            DenseLayer(np.zeros((2, 3)), np.full(3, -1.0), Activation.RELU),
            DenseLayer(rng.normal(size=(3, 1)), np.zeros(1), Activation.LINEAR)
        ])
        activations = forward(mlp, rng.normal(size=(4, 2)))
        grads, _ = backward(mlp, activations, np.ones((4, 1)))
        assert not np.any(grads[0]) and not np.any(grads[1])
        assert grad_check(mlp, rng.normal(size=(4, 2)), "sum") < 1e-6


class TestLosses:
    """Test cases for MSE and BCE-on-logits."""

    def test_mse_zero(self, rng):
        """Test that pred == target gives zero loss and gradient."""
        x = rng.normal(size=(3, 2))
        loss, grad = mse_loss(x, x)
        assert loss == 0.0
        assert not np.any(grad)

    def test_mse_hand_example(self):
        """Test pred [1, 1] against target [0, 0]."""
        loss, grad = mse_loss(np.array([[1.0, 1.0]]), np.zeros((1, 2)))
        assert loss == pytest.approx(1.0)
        np.testing.assert_allclose(grad, [[1.0, 1.0]])

    def test_mse_quadratic_scaling(self, rng):
        """Test that scaling the residual by c scales the loss by c^2."""
        pred, target = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
        base, _ = mse_loss(pred, target)
        scaled, _ = mse_loss(target + 3.0 * (pred - target), target)
        assert scaled == pytest.approx(9.0 * base)

    def test_mse_shape_mismatch(self):
        """Test MSE shape validation."""
        with pytest.raises(DimensionMismatchError):
            mse_loss(np.ones((2, 2)), np.ones((2, 3)))

    def test_bce_examples(self):
        """Test logit 0 against both labels."""
        loss, _ = bce_logit_loss(np.zeros((1, 1)), np.ones((1, 1)))
        assert loss == pytest.approx(np.log(2.0))
        _, grad = bce_logit_loss(np.zeros((1, 1)), np.zeros((1, 1)))
        assert grad[0, 0] == pytest.approx(0.5)

    def test_bce_is_stable(self):
        """Test finiteness for logits up to 1e6 in magnitude."""
        loss, _ = bce_logit_loss(np.array([[50.0]]), np.array([[1.0]]))
        assert 0.0 <= loss < 1e-20
        logits = np.array([[-1e6], [1e6], [0.0]])
        for label in (0.0, 1.0):
            loss, grad = bce_logit_loss(logits, np.full((3, 1), label))
            assert np.isfinite(loss)
            assert np.all(np.isfinite(grad))

    def test_bce_rejects_soft_labels(self):
        """Test that labels outside {0, 1} are rejected."""
        with pytest.raises(InvalidLabelsError):
            bce_logit_loss(np.zeros((2, 1)), np.array([[0.5], [1.0]]))


class TestAdam:
    """Test cases for the ADAM optimizer."""

    def test_zero_gradient_is_noop(self, rng):
        """Test that zero gradients leave parameters and moments unchanged for any state."""
        params = [rng.normal(size=(3, 2)), rng.normal(size=2)]
        state = AdamState.for_params(params, lr=1e-3)
        adam_step(params, [rng.normal(size=(3, 2)), rng.normal(size=2)], state)
        before = [p.copy() for p in params]
        m_before = [m.copy() for m in state.m]
        v_before = [v.copy() for v in state.v]

        adam_step(params, [np.zeros((3, 2)), np.zeros(2)], state)

        for p, b in zip(params, before):
            np.testing.assert_array_equal(p, b)
        for m, b in zip(state.m, m_before):
            np.testing.assert_array_equal(m, b)
        for v, b in zip(state.v, v_before):
            np.testing.assert_array_equal(v, b)

    def test_zero_gradient_entry_does_not_coast(self):
        """Test a masked entry keeps its value despite stored momentum while its neighbour moves."""
        params = [np.zeros(2)]
        state = AdamState.for_params(params, lr=1e-2)
        adam_step(params, [np.array([1.0, 1.0])], state)
        after_first = params[0].copy()
        assert state.m[0][0] != 0.0

        adam_step(params, [np.array([0.0, 1.0])], state)

        assert params[0][0] == after_first[0]
        assert params[0][1] < after_first[1]

    def test_first_step_is_lr_times_sign(self):
        """Test that the bias-corrected first step moves by about lr * sign(g)."""
        params = [np.zeros(3)]
        state = AdamState.for_params(params, lr=1e-4)
        adam_step(params, [np.array([2.0, -0.5, 30.0])], state)
        np.testing.assert_allclose(params[0], [-1e-4, 1e-4, -1e-4], rtol=1e-6)
        assert state.t == 1

    def test_constant_gradient_is_monotone(self):
        """Test that repeated steps keep moving against the gradient sign."""
        params = [np.array([1.0])]
        state = AdamState.for_params(params, lr=0.01)
        trajectory = [1.0]
        for _ in range(2):
            adam_step(params, [np.array([0.3])], state)
            trajectory.append(float(params[0][0]))
        assert trajectory[0] > trajectory[1] > trajectory[2]

    def test_non_finite_gradient(self):
        """Test that NaN gradients are rejected before any update."""
        params = [np.ones(2)]
        state = AdamState.for_params(params)
        with pytest.raises(NonFiniteError):
            adam_step(params, [np.array([np.nan, 1.0])], state)
        assert state.t == 0
        np.testing.assert_array_equal(params[0], np.ones(2))

    def test_state_validation(self):
        """Test AdamState invariants."""
        with pytest.raises(ValueError):
            AdamState(m=[], v=[], beta1=1.0)
        with pytest.raises(ValueError):
            AdamState(m=[], v=[], eps=0.0)


class TestInitializationAndRng:
    """Test cases for network construction and seeded streams."""

    def test_glorot_bounds_and_activations(self, rng):
        """Test init limits, ReLU hidden layers and a linear output."""
        mlp = build_mlp([4, 16, 16, 2], rng)
        for layer in mlp.layers:
            limit = np.sqrt(6.0 / (layer.in_dim + layer.out_dim))
            assert np.all(np.abs(layer.weights) <= limit)
            assert not np.any(layer.bias)
        assert [layer.activation for layer in mlp.layers] == [Activation.RELU, Activation.RELU, Activation.LINEAR]

    def test_same_seed_same_network(self):
        """Test bit-identical initialization from identical seeds."""
        a = build_mlp([3, 8, 2], RngHandle(42).generator())
        b = build_mlp([3, 8, 2], RngHandle(42).generator())
        for pa, pb in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(pa, pb)

    def test_derived_streams_are_independent_of_order(self):
        """Test that derived seeds depend only on (seed, keys)."""
        assert derive_seed(1, "detector") == derive_seed(1, "detector")
        assert derive_seed(1, "detector") != derive_seed(1, "aae")
        assert derive_seed(1, "magnitude", 20.0) != derive_seed(2, "magnitude", 20.0)
        first = make_rng(5, "edge").random(3)
        make_rng(5, "aae").random(100)
        np.testing.assert_array_equal(first, make_rng(5, "edge").random(3))
