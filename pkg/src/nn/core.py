"""
Dense neural-network substrate: layers, MLPs, losses, ADAM and gradient checks.

Matrices are 2-D float64 numpy arrays, rows are samples. Networks are plain
stacks of dense layers with ReLU or linear activations; backward is written
out by hand and verified against central differences by ``grad_check``.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..exceptions import DimensionMismatchError, InvalidLabelsError, NonFiniteError

logger = logging.getLogger(__name__)


class Activation(str, Enum):
    RELU = "relu"
    LINEAR = "linear"


def as_matrix(data, name: str = "batch") -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    if matrix.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return matrix


@dataclass
class DenseLayer:
    """Affine map followed by an activation; weights are (in x out)."""
    weights: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.RELU

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64).reshape(-1)
        self.activation = Activation(self.activation)
        if self.weights.ndim != 2:
            raise DimensionMismatchError(f"weights must be 2-D, got shape {self.weights.shape}")
        if self.bias.shape[0] != self.weights.shape[1]:
            raise DimensionMismatchError(
                f"bias length {self.bias.shape[0]} != weights.cols {self.weights.shape[1]}"
            )

    @property
    def in_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class Mlp:
    """Ordered stack of dense layers."""
    layers: List[DenseLayer] = field(default_factory=list)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("An Mlp needs at least one layer")
        for i in range(len(self.layers) - 1):
            if self.layers[i].out_dim != self.layers[i + 1].in_dim:
                raise DimensionMismatchError(
                    f"layer {i} outputs {self.layers[i].out_dim} but layer {i + 1} "
                    f"expects {self.layers[i + 1].in_dim}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def n_params(self) -> int:
        return sum(layer.weights.size + layer.bias.size for layer in self.layers)

    def parameters(self) -> List[np.ndarray]:
        """Parameter arrays in the order [W0, b0, W1, b1, ...] (live references)."""
        params = []
        for layer in self.layers:
            params.extend([layer.weights, layer.bias])
        return params

    def copy(self) -> "Mlp":
        return Mlp([
            DenseLayer(layer.weights.copy(), layer.bias.copy(), layer.activation)
            for layer in self.layers
        ])


def glorot_layer(in_dim: int, out_dim: int, activation: Activation, rng: np.random.Generator) -> DenseLayer:
    """Layer with weights uniform in +-sqrt(6 / (fan_in + fan_out)) and zero bias."""
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    weights = rng.uniform(-limit, limit, size=(in_dim, out_dim))
    return DenseLayer(weights, np.zeros(out_dim), activation)


def build_mlp(
    sizes: Sequence[int],
    rng: np.random.Generator,
    output_activation: Activation = Activation.LINEAR
) -> Mlp:
    """Build an MLP with ReLU hidden layers, e.g. sizes=[2, 64, 64, 2]."""
    if len(sizes) < 2:
        raise ValueError("sizes must name at least an input and an output width")
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        activation = output_activation if i == len(sizes) - 2 else Activation.RELU
        layers.append(glorot_layer(int(fan_in), int(fan_out), activation, rng))
    return Mlp(layers)


def forward(mlp: Mlp, batch: np.ndarray) -> List[np.ndarray]:
    """Return [input, a1, ..., aL]; the last entry is the network output."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != mlp.in_dim:
        raise DimensionMismatchError(
            f"batch shape {batch.shape} does not match network input dim {mlp.in_dim}"
        )
    activations = [batch]
    current = batch
    for layer in mlp.layers:
        current = current @ layer.weights + layer.bias
        if layer.activation is Activation.RELU:
            current = np.maximum(current, 0.0)
        activations.append(current)
    return activations


def backward(
    mlp: Mlp,
    activations: List[np.ndarray],
    output_grad: np.ndarray
) -> Tuple[List[np.ndarray], np.ndarray]:
    """Backpropagate dL/d(output).

    Returns the parameter gradients in ``Mlp.parameters()`` order and dL/d(input).
    """
    if len(activations) != len(mlp.layers) + 1:
        raise DimensionMismatchError(
            f"expected {len(mlp.layers) + 1} stored activations, got {len(activations)}"
        )
    grad = np.asarray(output_grad, dtype=np.float64)
    if grad.shape != activations[-1].shape:
        raise DimensionMismatchError(
            f"output grad shape {grad.shape} != output shape {activations[-1].shape}"
        )

    grads: List[np.ndarray] = [None] * (2 * len(mlp.layers))
    for i in range(len(mlp.layers) - 1, -1, -1):
        layer = mlp.layers[i]
        if layer.activation is Activation.RELU:
            # a > 0 exactly where the pre-activation is > 0
            grad = grad * (activations[i + 1] > 0.0)
        grads[2 * i] = activations[i].T @ grad
        grads[2 * i + 1] = grad.sum(axis=0)
        grad = grad @ layer.weights.T
    return grads, grad


def mse_loss(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean squared error over all entries and its gradient w.r.t. ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionMismatchError(f"pred shape {pred.shape} != target shape {target.shape}")
    residual = pred - target
    count = residual.size
    loss = float(np.sum(residual * residual) / count)
    return loss, 2.0 * residual / count


def bce_logit_loss(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Binary cross-entropy on logits, averaged; gradient is (sigmoid - label) / count."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if logits.shape != labels.shape:
        raise DimensionMismatchError(f"logits shape {logits.shape} != labels shape {labels.shape}")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise InvalidLabelsError("BCE labels must be 0 or 1")
    count = logits.size
    # max(x, 0) - x*y + log(1 + exp(-|x|)) never overflows
    per_entry = np.maximum(logits, 0.0) - logits * labels + np.log1p(np.exp(-np.abs(logits)))
    loss = float(np.sum(per_entry) / count)
    return loss, (expit(logits) - labels) / count


@dataclass
class AdamState:
    """Moments and step counter for one group of parameters."""
    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.eps <= 0.0 or self.lr <= 0.0:
            raise ValueError("lr and eps must be positive")

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], lr: float = 1e-4, **kwargs) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            lr=lr,
            **kwargs
        )


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState
) -> Tuple[Sequence[np.ndarray], AdamState]:
    """One bias-corrected ADAM update, applied in place.

    Entries whose gradient is exactly zero keep their parameter and moments,
    so a zero-gradient step leaves any state untouched. Unlike textbook ADAM,
    such entries (e.g. weights into a dead ReLU unit) do not coast on their
    stored momentum; the skipped decay resumes when the gradient returns.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DimensionMismatchError("params, grads and optimizer state differ in length")
    for p, g in zip(params, grads):
        if p.shape != np.shape(g):
            raise DimensionMismatchError(f"param shape {p.shape} != grad shape {np.shape(g)}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("gradient contains non-finite entries")

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        active = g != 0.0
        m[active] = state.beta1 * m[active] + (1.0 - state.beta1) * g[active]
        v[active] = state.beta2 * v[active] + (1.0 - state.beta2) * g[active] ** 2
        m_hat = m[active] / correction1
        v_hat = v[active] / correction2
        p[active] -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


def _loss_for(kind: str, output: np.ndarray, target: Optional[np.ndarray]) -> Tuple[float, np.ndarray]:
    if kind == "mse":
        return mse_loss(output, np.zeros_like(output) if target is None else target)
    if kind == "bce":
        return bce_logit_loss(output, (output > 0).astype(np.float64) if target is None else target)
    if kind == "sum":
        return float(np.sum(output)), np.ones_like(output)
    raise ValueError(f"Unknown loss kind: {kind}")


def grad_check(
    mlp: Mlp,
    batch: np.ndarray,
    loss_kind: str = "mse",
    target: Optional[np.ndarray] = None,
    step: float = 1e-5
) -> float:
    """Worst relative error between backward and central differences.

    Relative error per parameter is |analytic - numeric| / (|analytic| + 1e-8).
    """
    batch = as_matrix(batch)
    activations = forward(mlp, batch)
    if target is None and loss_kind == "bce":
        # fix labels once so perturbations cannot flip them
        target = (activations[-1] > 0).astype(np.float64)
    _, output_grad = _loss_for(loss_kind, activations[-1], target)
    analytic, _ = backward(mlp, activations, output_grad)

    worst = 0.0
    for param, grad in zip(mlp.parameters(), analytic):
        flat = param.reshape(-1)
        flat_grad = grad.reshape(-1)
        for j in range(flat.size):
            original = flat[j]
            flat[j] = original + step
            plus, _ = _loss_for(loss_kind, forward(mlp, batch)[-1], target)
            flat[j] = original - step
            minus, _ = _loss_for(loss_kind, forward(mlp, batch)[-1], target)
            flat[j] = original
            numeric = (plus - minus) / (2.0 * step)
            error = abs(flat_grad[j] - numeric) / (abs(flat_grad[j]) + 1e-8)
            worst = max(worst, error)

    logger.debug(f"grad_check over {mlp.n_params} parameters: max relative error {worst:.3e}")
    return worst
