"""Numerical substrate: dense/sparse products, ReLU, init, Adam, RNG.

Everything runs in 64-bit floats on numpy arrays. The reference path is
single-threaded and deterministic: identical inputs (including generator
state) produce bitwise-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .encoding import NormalizedAdjacency, SparseAdjacency


class DimensionMismatchError(Exception):
    """Operand shapes are incompatible."""


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic 64-bit generator (PCG64); same seed, same stream everywhere."""
    return np.random.Generator(np.random.PCG64(seed))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense matrix product with explicit shape checking."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionMismatchError("matmul operands must be 2-D")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatchError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def spmm(sparse: SparseAdjacency | NormalizedAdjacency, dense: np.ndarray) -> np.ndarray:
    """Sparse (CSR) times dense product.

    Uses a segment-sum fast path when every row has at least one entry (true
    for normalized adjacencies, which always carry the diagonal) and a
    deterministic scatter-add otherwise.
    """
    dense = np.asarray(dense, dtype=np.float64)
    if dense.ndim != 2:
        raise DimensionMismatchError("dense operand must be 2-D")
    if sparse.n != dense.shape[0]:
        raise DimensionMismatchError(
            f"sparse has {sparse.n} columns, dense has {dense.shape[0]} rows"
        )
    indptr = sparse.indptr
    indices = sparse.indices
    weights = getattr(sparse, "weights", None)

    if indices.size == 0:
        return np.zeros((sparse.n, dense.shape[1]), dtype=np.float64)

    gathered = dense[indices]
    if weights is not None:
        gathered = gathered * weights[:, None]

    counts = np.diff(indptr)
    if (counts > 0).all():
        return np.add.reduceat(gathered, indptr[:-1], axis=0)

    out = np.zeros((sparse.n, dense.shape[1]), dtype=np.float64)
    rows = np.repeat(np.arange(sparse.n, dtype=np.int64), counts)
    np.add.at(out, rows, gathered)
    return out


def relu(values: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x)."""
    return np.maximum(np.asarray(values, dtype=np.float64), 0.0)


def relu_backward(upstream: np.ndarray, pre_activation: np.ndarray) -> np.ndarray:
    """Zero the upstream gradient wherever the pre-activation was <= 0.

    The derivative at exactly 0 is taken as 0.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    pre_activation = np.asarray(pre_activation, dtype=np.float64)
    if upstream.shape != pre_activation.shape:
        raise DimensionMismatchError(
            f"upstream {upstream.shape} does not match pre-activation {pre_activation.shape}"
        )
    return np.where(pre_activation > 0.0, upstream, 0.0)


def glorot_init(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform init in +/- sqrt(6 / (rows + cols))."""
    if rows <= 0 or cols <= 0:
        raise DimensionMismatchError("matrix dimensions must be positive")
    limit = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


@dataclass
class AdamState:
    """Per-parameter Adam accumulators and hyperparameters.

    Moment buffers are allocated lazily on the first step so one constructor
    covers any parameter shape.
    """

    learning_rate: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState) -> np.ndarray:
    """One bias-corrected Adam update; mutates ``state``, returns new parameters."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape:
        raise DimensionMismatchError(
            f"parameter shape {params.shape} does not match gradient shape {grads.shape}"
        )
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    elif state.m.shape != params.shape:
        raise DimensionMismatchError(
            f"optimizer state shape {state.m.shape} does not match parameters {params.shape}"
        )
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    return params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
