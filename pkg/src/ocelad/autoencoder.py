"""Graph convolutional autoencoder: forward, analytic backward, training, scoring.

The encoder is two graph-convolution layers and the decoder one more, all
sharing the normalized adjacency N:

    Z    = ReLU(N * ReLU(N * X * W0) * W1)
    Xhat = ReLU(N * Z * W2)

Training minimizes the mean squared reconstruction error over all entries
(full batch, Adam). Gradients are derived by hand; N is symmetric, so its
transpose never needs materializing. Per-event anomaly scores average the
squared reconstruction error within each feature group first and across
groups second, so wide one-hot blocks do not drown out single numeric
columns.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoding import EncodedGraph, FeatureLayout, layout_checksum
from .numerics import (
    AdamState,
    DimensionMismatchError,
    adam_step,
    glorot_init,
    make_rng,
    matmul,
    relu,
    relu_backward,
    spmm,
)


class NonFiniteLossError(Exception):
    """Training loss became NaN or infinite."""

    def __init__(self, epoch: int, value: float) -> None:
        super().__init__(f"loss is not finite at epoch {epoch}: {value!r}")
        self.epoch = epoch
        self.value = value


class LayoutMismatchError(Exception):
    """A saved model does not match the target log's feature layout."""


@dataclass
class GcnaeModel:
    """The three learnable weight matrices, chained k -> h1 -> h2 -> k."""

    w0: np.ndarray
    w1: np.ndarray
    w2: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    hidden1: int = 64
    hidden2: int = 32
    learning_rate: float = 0.02
    epochs: int = 800
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if self.hidden1 < 1 or self.hidden2 < 1:
            raise ValueError("hidden widths must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


@dataclass
class TrainReport:
    """Loss per epoch (recorded before each update) and the final model."""

    losses: list[float]
    model: GcnaeModel


@dataclass
class ForwardCache:
    """Intermediates of one forward pass, reused by the backward pass."""

    ax: np.ndarray
    h0_pre: np.ndarray
    h0: np.ndarray
    ah0: np.ndarray
    h1_pre: np.ndarray
    z: np.ndarray
    az: np.ndarray
    h2_pre: np.ndarray
    xhat: np.ndarray


def init_model(n_features: int, config: TrainConfig) -> GcnaeModel:
    """Glorot-initialized weights, deterministic in the config seed.

    The decoder matrix takes the absolute value of its Glorot sample: the
    latent is ReLU-nonnegative, so a signed init can leave an output column
    with a nonpositive pre-activation at every node, where the final ReLU
    pins it to zero with no gradient to recover. Nonnegative decoder weights
    start every output column alive.
    """
    rng = make_rng(config.seed)
    return GcnaeModel(
        w0=glorot_init(n_features, config.hidden1, rng),
        w1=glorot_init(config.hidden1, config.hidden2, rng),
        w2=np.abs(glorot_init(config.hidden2, n_features, rng)),
    )


def forward_cached(graph: EncodedGraph, model: GcnaeModel) -> ForwardCache:
    x = graph.features
    if x.shape[1] != model.w0.shape[0]:
        raise DimensionMismatchError(
            f"features have {x.shape[1]} columns, model expects {model.w0.shape[0]}"
        )
    norm = graph.normalized
    ax = spmm(norm, x)
    h0_pre = matmul(ax, model.w0)
    h0 = relu(h0_pre)
    ah0 = spmm(norm, h0)
    h1_pre = matmul(ah0, model.w1)
    z = relu(h1_pre)
    az = spmm(norm, z)
    h2_pre = matmul(az, model.w2)
    xhat = relu(h2_pre)
    return ForwardCache(
        ax=ax, h0_pre=h0_pre, h0=h0, ah0=ah0, h1_pre=h1_pre, z=z, az=az,
        h2_pre=h2_pre, xhat=xhat,
    )


def forward(graph: EncodedGraph, model: GcnaeModel) -> tuple[np.ndarray, np.ndarray]:
    """Embeddings and reconstruction: (Z: n x h2, Xhat: n x k)."""
    cache = forward_cached(graph, model)
    return cache.z, cache.xhat


def loss(x: np.ndarray, xhat: np.ndarray) -> float:
    """Average row-wise mean squared error between input and reconstruction."""
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    if x.shape != xhat.shape:
        raise DimensionMismatchError(f"shape {x.shape} does not match {xhat.shape}")
    diff = x - xhat
    # Overflow to inf is the signal the training loop turns into
    # NonFiniteLossError; no point warning about it here.
    with np.errstate(over="ignore"):
        return float(np.mean(diff * diff))


def backward(
    graph: EncodedGraph, model: GcnaeModel, cache: ForwardCache
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of the loss with respect to W0, W1, W2.

    Relies on the normalized adjacency being symmetric: left-multiplying an
    upstream gradient by N plays the role of N-transpose.
    """
    x = graph.features
    n, k = x.shape
    norm = graph.normalized

    d_xhat = (2.0 / (n * k)) * (cache.xhat - x)
    d_h2_pre = relu_backward(d_xhat, cache.h2_pre)
    grad_w2 = matmul(cache.az.T, d_h2_pre)

    d_z = matmul(spmm(norm, d_h2_pre), model.w2.T)
    d_h1_pre = relu_backward(d_z, cache.h1_pre)
    grad_w1 = matmul(cache.ah0.T, d_h1_pre)

    d_h0 = matmul(spmm(norm, d_h1_pre), model.w1.T)
    d_h0_pre = relu_backward(d_h0, cache.h0_pre)
    grad_w0 = matmul(cache.ax.T, d_h0_pre)

    return grad_w0, grad_w1, grad_w2


def train(graph: EncodedGraph, config: TrainConfig) -> TrainReport:
    """Full-batch Adam training for the configured number of epochs.

    Deterministic given the config seed. Aborts with ``NonFiniteLossError``
    if the loss leaves the finite range.
    """
    model = init_model(graph.features.shape[1], config)
    states = {
        name: AdamState(
            learning_rate=config.learning_rate,
            beta1=config.beta1,
            beta2=config.beta2,
            epsilon=config.epsilon,
        )
        for name in ("w0", "w1", "w2")
    }
    losses: list[float] = []
    for epoch in range(config.epochs):
        cache = forward_cached(graph, model)
        value = loss(graph.features, cache.xhat)
        if not math.isfinite(value):
            raise NonFiniteLossError(epoch, value)
        losses.append(value)
        grad_w0, grad_w1, grad_w2 = backward(graph, model, cache)
        model.w0 = adam_step(model.w0, grad_w0, states["w0"])
        model.w1 = adam_step(model.w1, grad_w1, states["w1"])
        model.w2 = adam_step(model.w2, grad_w2, states["w2"])
    return TrainReport(losses=losses, model=model)


def score_events(x: np.ndarray, xhat: np.ndarray, layout: FeatureLayout) -> np.ndarray:
    """Per-event anomaly scores: group-wise MSE averaged across feature groups."""
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    if x.shape != xhat.shape:
        raise DimensionMismatchError(f"shape {x.shape} does not match {xhat.shape}")
    if x.shape[1] != layout.n_columns:
        raise DimensionMismatchError(
            f"matrix has {x.shape[1]} columns, layout expects {layout.n_columns}"
        )
    squared = (x - xhat) ** 2
    group_means = [
        squared[:, group.start : group.stop].mean(axis=1) for group in layout.groups
    ]
    return np.mean(group_means, axis=0)


def save_model(model: GcnaeModel, layout: FeatureLayout, path: str | Path) -> None:
    """Persist weights with dimensions and a layout checksum for safe reloading."""
    doc = {
        "n_features": model.w0.shape[0],
        "hidden1": model.w0.shape[1],
        "hidden2": model.w1.shape[1],
        "layout_checksum": layout_checksum(layout),
        "w0": model.w0.tolist(),
        "w1": model.w1.tolist(),
        "w2": model.w2.tolist(),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_model(path: str | Path, layout: FeatureLayout) -> GcnaeModel:
    """Load a saved model, validating it against the target log's layout."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc["layout_checksum"] != layout_checksum(layout):
        raise LayoutMismatchError(
            "saved model was trained against a different feature layout"
        )
    return GcnaeModel(
        w0=np.array(doc["w0"], dtype=np.float64),
        w1=np.array(doc["w1"], dtype=np.float64),
        w2=np.array(doc["w2"], dtype=np.float64),
    )
