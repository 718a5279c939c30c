"""Five-hidden-layer perceptron regressor with SGD or Adam, from scratch.

Hidden layers use the rectifier, the output is linear and the loss is the
mean squared error over the batch. Inputs and targets are standardized
internally (parameters stored on the model; predictions are mapped back).
Initialization is He-normal from the (seed, 0) stream and batch order comes
from the (seed, 1) stream, so training is deterministic given the seed.
A non-finite epoch loss aborts training with the epoch index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..rng import make_rng

DEFAULT_WIDTHS = (32, 24, 16, 12, 8)


class MlpDivergenceError(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


@dataclass
class MlpModel:
    widths: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float
    seed: int
    params: dict
    feature_names: list[str]
    imputation: np.ndarray

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def init_parameters(n_inputs: int, widths: tuple[int, ...], seed: int):
    """He-normal hidden layers, smaller-variance linear output layer."""
    rng = make_rng(seed, 0)
    sizes = [n_inputs] + list(widths) + [1]
    weights = []
    biases = []
    for layer in range(len(sizes) - 1):
        fan_in, fan_out = sizes[layer], sizes[layer + 1]
        std = np.sqrt(2.0 / fan_in) if layer < len(widths) else np.sqrt(1.0 / fan_in)
        weights.append(rng.standard_normal((fan_in, fan_out)) * std)
        biases.append(np.zeros(fan_out))
    return weights, biases


def forward(weights, biases, x: np.ndarray) -> np.ndarray:
    h = x
    for w, b in zip(weights[:-1], biases[:-1]):
        h = np.maximum(h @ w + b, 0.0)
    return (h @ weights[-1] + biases[-1])[:, 0]


def loss_and_grads(weights, biases, x: np.ndarray, y: np.ndarray):
    """MSE loss and its gradients w.r.t. every weight and bias (backprop)."""
    h = x
    activations = [x]
    pre = []
    for w, b in zip(weights[:-1], biases[:-1]):
        z = h @ w + b
        pre.append(z)
        h = np.maximum(z, 0.0)
        activations.append(h)
    out = (h @ weights[-1] + biases[-1])[:, 0]
    err = out - y
    n = y.shape[0]
    loss = float(np.mean(err ** 2))

    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    delta = (2.0 * err / n)[:, None]                   # d loss / d out
    grad_w[-1] = activations[-1].T @ delta
    grad_b[-1] = delta.sum(axis=0)
    back = delta @ weights[-1].T
    for layer in range(len(weights) - 2, -1, -1):
        back = back * (pre[layer] > 0.0)
        grad_w[layer] = activations[layer].T @ back
        grad_b[layer] = back.sum(axis=0)
        if layer > 0:
            back = back @ weights[layer].T
    return loss, grad_w, grad_b


def train_mlp(X: np.ndarray, y: np.ndarray, params: dict, seed: int,
              feature_names: Optional[list[str]] = None) -> MlpModel:
    """Fit the network.

    params: widths (5-tuple, default DEFAULT_WIDTHS), epochs (default 200),
    lr (default 1e-3), optimizer ('adam' default, or 'sgd'), batch_size
    (default 32).
    """
    from . import prepare_training

    X, y, feature_names, imputation = prepare_training(X, y, feature_names)
    widths = tuple(int(w) for w in params.get("widths", DEFAULT_WIDTHS))
    if len(widths) != 5 or any(w < 1 for w in widths):
        raise ValueError(f"widths must be five positive integers, got {widths}")
    epochs = int(params.get("epochs", 200))
    lr = float(params.get("lr", 1e-3))
    optimizer = params.get("optimizer", "adam")
    if optimizer not in ("sgd", "adam"):
        raise ValueError(f"optimizer must be 'sgd' or 'adam', got {optimizer!r}")
    batch_size = int(params.get("batch_size", 32))

    n, p = X.shape
    x_mean = X.mean(axis=0)
    x_scale = X.std(axis=0)
    x_scale[x_scale == 0] = 1.0
    xs = (X - x_mean) / x_scale
    y_mean = float(y.mean())
    y_scale = float(y.std()) or 1.0
    ys = (y - y_mean) / y_scale

    weights, biases = init_parameters(p, widths, seed)
    batch_rng = make_rng(seed, 1)

    if optimizer == "adam":
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        m_w = [np.zeros_like(w) for w in weights]
        v_w = [np.zeros_like(w) for w in weights]
        m_b = [np.zeros_like(b) for b in biases]
        v_b = [np.zeros_like(b) for b in biases]
        step = 0

    # divergence shows up as inf/nan in the epoch loss; let the arithmetic
    # produce those silently instead of warning on the way there
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(epochs):
            perm = batch_rng.permutation(n)
            for start in range(0, n, batch_size):
                batch = perm[start:start + batch_size]
                _, gw, gb = loss_and_grads(weights, biases, xs[batch], ys[batch])
                if optimizer == "sgd":
                    for i in range(len(weights)):
                        weights[i] -= lr * gw[i]
                        biases[i] -= lr * gb[i]
                else:
                    step += 1
                    corr1 = 1.0 - beta1 ** step
                    corr2 = 1.0 - beta2 ** step
                    for i in range(len(weights)):
                        m_w[i] = beta1 * m_w[i] + (1 - beta1) * gw[i]
                        v_w[i] = beta2 * v_w[i] + (1 - beta2) * gw[i] ** 2
                        weights[i] -= lr * (m_w[i] / corr1) \
                            / (np.sqrt(v_w[i] / corr2) + eps)
                        m_b[i] = beta1 * m_b[i] + (1 - beta1) * gb[i]
                        v_b[i] = beta2 * v_b[i] + (1 - beta2) * gb[i] ** 2
                        biases[i] -= lr * (m_b[i] / corr1) \
                            / (np.sqrt(v_b[i] / corr2) + eps)
            epoch_loss = float(np.mean((forward(weights, biases, xs) - ys) ** 2))
            if not np.isfinite(epoch_loss):
                raise MlpDivergenceError(epoch)

    return MlpModel(widths=widths, weights=weights, biases=biases,
                    x_mean=x_mean, x_scale=x_scale, y_mean=y_mean,
                    y_scale=y_scale, seed=seed,
                    params={"widths": list(widths), "epochs": epochs, "lr": lr,
                            "optimizer": optimizer, "batch_size": batch_size},
                    feature_names=feature_names, imputation=imputation)


def predict_mlp(model: MlpModel, X: np.ndarray) -> np.ndarray:
    xs = (X - model.x_mean) / model.x_scale
    return forward(model.weights, model.biases, xs) * model.y_scale + model.y_mean
