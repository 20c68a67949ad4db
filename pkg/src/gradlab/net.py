"""Fully-connected ReLU network with softmax cross-entropy.

Everything is explicit numpy: forward pass, batch backprop, and per-example
gradients.  Gradients are taken of the SUM of per-example losses, so the
overall gradient is literally the sum of the per-example gradients; the
optimizer divides by the minibatch size, which makes the conventional
"learning rate 0.1" behave as mean-loss SGD.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .prng import Rng

CHECKPOINT_VERSION = 1


class NonFiniteError(FloatingPointError):
    """A forward or backward pass produced NaN/Inf."""


@dataclass
class MlpParams:
    weights: list  # per layer, (fan_out, fan_in)
    biases: list  # per layer, (fan_out,)

    def __post_init__(self):
        if not self.weights or len(self.weights) != len(self.biases):
            raise ValueError("weights and biases must be non-empty and parallel")
        for ell, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {ell}: weight rows != bias length")
            if ell > 0 and w.shape[1] != self.weights[ell - 1].shape[0]:
                raise ValueError(f"layer {ell}: fan_in does not chain")

    @property
    def architecture(self) -> list:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def dtype(self):
        return self.weights[0].dtype

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def all_finite(self) -> bool:
        return all(np.isfinite(w).all() for w in self.weights) and all(
            np.isfinite(b).all() for b in self.biases
        )

    def flat(self) -> np.ndarray:
        """All parameters as one vector: per layer, W row-major then b."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def save(self, path) -> None:
        """Checkpoint: u32 version, u32 width count, u32 widths, then per
        layer row-major little-endian float64 weights followed by biases."""
        arch = self.architecture
        with open(path, "wb") as f:
            f.write(struct.pack("<I", CHECKPOINT_VERSION))
            f.write(struct.pack("<I", len(arch)))
            f.write(struct.pack(f"<{len(arch)}I", *arch))
            for w, b in zip(self.weights, self.biases):
                f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
                f.write(np.asarray(b, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path, dtype=np.float64) -> "MlpParams":
        with open(path, "rb") as f:
            (version,) = struct.unpack("<I", f.read(4))
            if version != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {version}")
            (n,) = struct.unpack("<I", f.read(4))
            arch = struct.unpack(f"<{n}I", f.read(4 * n))
            weights, biases = [], []
            for fan_in, fan_out in zip(arch[:-1], arch[1:]):
                w = np.frombuffer(f.read(8 * fan_in * fan_out), dtype="<f8")
                weights.append(w.reshape(fan_out, fan_in).astype(dtype))
                b = np.frombuffer(f.read(8 * fan_out), dtype="<f8")
                biases.append(b.astype(dtype))
            trailing = f.read(1)
        if trailing:
            raise ValueError("trailing bytes after checkpoint payload")
        return cls(weights, biases)


def xavier_init(architecture, seed: int, dtype=np.float64) -> MlpParams:
    """Xavier/Glorot uniform weights, bound sqrt(6/(fan_in+fan_out)); zero biases."""
    if len(architecture) < 2:
        raise ValueError("architecture needs at least input and output widths")
    if any(w < 1 for w in architecture):
        raise ValueError("layer widths must be >= 1")
    rng = Rng(seed)
    weights, biases = [], []
    for ell, (fan_in, fan_out) in enumerate(zip(architecture[:-1], architecture[1:])):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        draw = rng.child("xavier", ell).uniform_range(-bound, bound, fan_in * fan_out)
        weights.append(draw.reshape(fan_out, fan_in).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return MlpParams(weights, biases)


@dataclass
class ForwardResult:
    logits: np.ndarray  # (m, K)
    per_example_loss: np.ndarray  # (m,)
    mean_loss: float
    activations: list  # inputs to each layer: [X, h1, ..., h_{L-1}]
    probs: np.ndarray  # softmax(logits), kept for backprop


def _softmax_xent(logits, labels):
    # non-finite logits flow through as nan and are rejected by backprop
    with np.errstate(invalid="ignore", over="ignore"):
        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        total = exp.sum(axis=1)
        log_probs = shifted - np.log(total)[:, None]
        losses = -log_probs[np.arange(len(labels)), labels]
        return losses, exp / total[:, None]


def forward(params: MlpParams, x: np.ndarray, labels: np.ndarray) -> ForwardResult:
    """Hidden layers ReLU, affine output, softmax cross-entropy vs labels."""
    x = np.asarray(x, dtype=params.dtype)
    if x.ndim != 2 or x.shape[1] != params.architecture[0]:
        raise ValueError(
            f"batch features {x.shape} do not match input width {params.architecture[0]}"
        )
    activations = [x]
    h = x
    # diverged parameters overflow here; backprop turns that into an error
    with np.errstate(over="ignore", invalid="ignore"):
        for w, b in zip(params.weights[:-1], params.biases[:-1]):
            h = np.maximum(h @ w.T + b, 0.0)
            activations.append(h)
        logits = h @ params.weights[-1].T + params.biases[-1]
    losses, probs = _softmax_xent(logits, np.asarray(labels))
    return ForwardResult(logits, losses, float(losses.mean()), activations, probs)


@dataclass
class BackpropState:
    """Per-example deltas and layer inputs from one backward pass.

    deltas[l][e] is d(loss_e)/d(preactivation of layer l), so the
    per-example gradient of W_l for example e is outer(deltas[l][e],
    activations[l][e]) and of b_l is deltas[l][e].
    """

    forward: ForwardResult
    deltas: list  # per layer, (m, fan_out)
    batch_examples: np.ndarray  # indices of the minibatch rows

    @property
    def activations(self) -> list:
        return self.forward.activations

    def batch_gradients(self) -> list:
        """Summed-over-examples gradients [(dW, db)] via matrix products."""
        return [
            (d.T @ a, d.sum(axis=0))
            for d, a in zip(self.deltas, self.forward.activations)
        ]

    def per_example_gradients(self) -> "GradientBuffer":
        weight_grads = [
            d[:, :, None] * a[:, None, :]
            for d, a in zip(self.deltas, self.forward.activations)
        ]
        return GradientBuffer(
            per_example_weights=weight_grads,
            per_example_biases=[d.copy() for d in self.deltas],
            batch_examples=self.batch_examples,
        )


def backprop(
    params: MlpParams, x: np.ndarray, labels: np.ndarray, batch_examples=None
) -> BackpropState:
    """Backpropagate the sum of per-example losses; ReLU' at 0 is 0."""
    fwd = forward(params, x, labels)
    if not np.isfinite(fwd.logits).all():
        raise NonFiniteError("non-finite activations in forward pass")
    m = x.shape[0]
    delta = fwd.probs.copy()
    delta[np.arange(m), np.asarray(labels)] -= 1.0
    deltas = [None] * params.num_layers
    deltas[-1] = delta
    for ell in range(params.num_layers - 1, 0, -1):
        upstream = deltas[ell] @ params.weights[ell]
        deltas[ell - 1] = upstream * (fwd.activations[ell] > 0)
    if batch_examples is None:
        batch_examples = np.arange(m)
    return BackpropState(fwd, deltas, np.asarray(batch_examples))


@dataclass
class GradientBuffer:
    """Per-example gradients for one minibatch, plus their sum.

    batch sums are always computed from the per-example arrays with
    numpy's fixed reduction order, so the sum identity is reproducible
    bit-for-bit between runs.
    """

    per_example_weights: list  # per layer, (m, fan_out, fan_in)
    per_example_biases: list  # per layer, (m, fan_out)
    batch_examples: np.ndarray

    def __post_init__(self):
        self.batch_weight_sums = [g.sum(axis=0) for g in self.per_example_weights]
        self.batch_bias_sums = [g.sum(axis=0) for g in self.per_example_biases]

    @property
    def minibatch_size(self) -> int:
        return self.per_example_weights[0].shape[0]

    def per_example_flat(self) -> np.ndarray:
        """(m, P) matrix, columns ordered per layer: W row-major then b."""
        m = self.minibatch_size
        parts = []
        for gw, gb in zip(self.per_example_weights, self.per_example_biases):
            parts.append(gw.reshape(m, -1))
            parts.append(gb)
        return np.concatenate(parts, axis=1)

    def batch_flat(self) -> np.ndarray:
        parts = []
        for gw, gb in zip(self.batch_weight_sums, self.batch_bias_sums):
            parts.append(gw.ravel())
            parts.append(gb)
        return np.concatenate(parts)


def per_example_gradients(
    params: MlpParams, x: np.ndarray, labels: np.ndarray, batch_examples=None
) -> GradientBuffer:
    """Materialized per-example gradients; memory scales with m * #params."""
    return backprop(params, x, labels, batch_examples).per_example_gradients()


def accuracy(params: MlpParams, x: np.ndarray, labels: np.ndarray, chunk: int = 4096):
    """(fraction correct, per-example correctness mask) under argmax.

    np.argmax resolves ties toward the lowest class index.
    """
    labels = np.asarray(labels)
    correct = np.empty(len(labels), dtype=bool)
    for start in range(0, len(labels), chunk):
        stop = min(start + chunk, len(labels))
        h = np.asarray(x[start:stop], dtype=params.dtype)
        with np.errstate(over="ignore", invalid="ignore"):
            for w, b in zip(params.weights[:-1], params.biases[:-1]):
                h = np.maximum(h @ w.T + b, 0.0)
            logits = h @ params.weights[-1].T + params.biases[-1]
        correct[start:stop] = logits.argmax(axis=1) == labels[start:stop]
    if len(labels) == 0:
        return 0.0, correct
    return float(correct.mean()), correct


def dataset_loss(params: MlpParams, x: np.ndarray, labels: np.ndarray, chunk: int = 4096) -> float:
    """Mean cross-entropy over a dataset, evaluated in chunks."""
    labels = np.asarray(labels)
    total = 0.0
    for start in range(0, len(labels), chunk):
        stop = min(start + chunk, len(labels))
        fwd = forward(params, x[start:stop], labels[start:stop])
        total += float(fwd.per_example_loss.sum())
    return total / max(len(labels), 1)
