"""Parameter updates: vanilla SGD and c-winsorized SGD.

Winsorization level c in [0, 50] is a percentile: with minibatch size m,
k = floor(c*m/100) values are clipped on each side of every trainable
coordinate's per-example gradient values before summing.  Clip bounds are
the k-th and (m-1-k)-th order statistics, computed per coordinate from the
current minibatch only.  c=0 is unmodified SGD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels_py, kernels
from .net import BackpropState, GradientBuffer, MlpParams, NonFiniteError


@dataclass(frozen=True)
class WinsorConfig:
    c: float
    learning_rate: float
    minibatch_size: int

    def __post_init__(self):
        if not 0.0 <= self.c <= 50.0:
            raise ValueError(f"winsorization level must be in [0, 50], got {self.c}")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.minibatch_size < 1:
            raise ValueError("minibatch size must be >= 1")
        if 2 * self.clip_count >= self.minibatch_size:
            raise ValueError(
                f"c={self.c} clips 2*{self.clip_count} of {self.minibatch_size} values"
            )

    @property
    def clip_count(self) -> int:
        return clip_count(self.c, self.minibatch_size)


def clip_count(c: float, m: int) -> int:
    """Values clipped per side: k = floor(c*m/100)."""
    return int(math.floor(c * m / 100.0))


def apply_update(params: MlpParams, layer_grads, learning_rate: float, m: int) -> MlpParams:
    """In-place w <- w - (lr/m) * g for [(dW, db)] summed-over-examples grads."""
    scale = learning_rate / m
    for (dw, db), w, b in zip(layer_grads, params.weights, params.biases):
        w -= scale * dw
        b -= scale * db
    return params


def sgd_step(params: MlpParams, grads: GradientBuffer, learning_rate: float) -> MlpParams:
    """Vanilla step from a materialized gradient buffer."""
    layer_grads = list(zip(grads.batch_weight_sums, grads.batch_bias_sums))
    for dw, db in layer_grads:
        if not (np.isfinite(dw).all() and np.isfinite(db).all()):
            raise NonFiniteError("non-finite gradient coordinates")
    return apply_update(params, layer_grads, learning_rate, grads.minibatch_size)


def winsorize(values, c: float) -> float:
    """Winsorized sum of one coordinate's m per-example values.

    Sorts, clips to the [k, m-1-k] order statistics, sums in sorted order;
    exactly invariant to the input order.
    """
    values = np.asarray(values, dtype=np.float64)
    m = values.shape[0]
    if m < 1:
        raise ValueError("need at least one value")
    if not 0.0 <= c <= 50.0:
        raise ValueError(f"winsorization level must be in [0, 50], got {c}")
    k = clip_count(c, m)
    if 2 * k >= m:
        raise ValueError(f"c={c} clips 2*{k} of {m} values")
    s = np.sort(values)
    return float(np.clip(s, s[k], s[m - 1 - k]).sum())


def _winsorized_layer_sums(state: BackpropState, k: int, threads: int):
    """[(winsorized dW, winsorized db)] per layer, streamed from backprop state."""
    impl = kernels.active if kernels.supports_k(k) else _kernels_py
    out = []
    for delta, acts in zip(state.deltas, state.activations):
        deltaT = np.ascontiguousarray(delta.T, dtype=np.float64)
        actsT = np.ascontiguousarray(acts.T, dtype=np.float64)
        dw = impl.winsorized_outer_sum(deltaT, actsT, k, threads=threads)
        db = impl.winsorized_column_sum(deltaT, k, threads=threads)
        out.append((dw, db))
    return out


def winsorized_update(
    params: MlpParams, state: BackpropState, config: WinsorConfig, threads: int | None = None
) -> MlpParams:
    """Winsorize per coordinate over the minibatch, then apply the SGD rule.

    With k=0 this routes through the identical plain-sum computation as the
    vanilla step, so c=0 runs are bit-for-bit vanilla SGD.
    """
    m = state.deltas[0].shape[0]
    for delta in state.deltas:
        if not np.isfinite(delta).all():
            raise NonFiniteError("non-finite gradient coordinates")
    # short final minibatches recompute k from the actual size
    k = clip_count(config.c, m)
    if 2 * k >= m:
        raise ValueError(f"c={config.c} clips 2*{k} of {m} values")
    if k == 0:
        layer_grads = state.batch_gradients()
    else:
        layer_grads = _winsorized_layer_sums(
            state, k, threads if threads is not None else kernels.default_threads()
        )
    return apply_update(params, layer_grads, config.learning_rate, m)


def winsorized_sgd_step(
    params: MlpParams, grads: GradientBuffer, config: WinsorConfig
) -> MlpParams:
    """Winsorized step from a materialized per-example gradient buffer."""
    if grads.per_example_weights is None:
        raise ValueError("per-example gradients required for winsorization")
    m = grads.minibatch_size
    k = clip_count(config.c, m)
    if 2 * k >= m:
        raise ValueError(f"c={config.c} clips 2*{k} of {m} values")
    if k == 0:
        return sgd_step(params, grads, config.learning_rate)
    layer_grads = []
    for gw, gb in zip(grads.per_example_weights, grads.per_example_biases):
        dw = _kernels_py._winsorize_columns(gw.reshape(m, -1), k).reshape(gw.shape[1:])
        db = _kernels_py._winsorize_columns(gb, k)
        layer_grads.append((dw, db))
    return apply_update(params, layer_grads, config.learning_rate, m)
