"""Shared fixtures and independent oracle helpers.

Oracle code here deliberately avoids the production implementations: the
reference PRNG is a from-scratch SplitMix64, gradients come from central
finite differences, and sums are plain Python loops.
"""

import numpy as np
import pytest

from gradlab import synth
from gradlab.net import MlpParams, forward, xavier_init

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def reference_mix64(z: int) -> int:
    """Independent SplitMix64 finalizer, plain Python ints."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def reference_stream(key: int, start: int, n: int):
    """Raw u64 draws start+1 .. start+n of the stream with this key."""
    return [reference_mix64((key + ((start + i) * GOLDEN)) & MASK64) for i in range(1, n + 1)]


def finite_difference_per_example(params: MlpParams, x, labels, step=1e-5) -> np.ndarray:
    """(m, P) central-difference gradients in GradientBuffer column order."""
    m = x.shape[0]
    out = np.zeros((m, params.num_params))
    pos = 0
    for ell in range(params.num_layers):
        for arr in (params.weights[ell], params.biases[ell]):
            flat = arr.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                up = forward(params, x, labels).per_example_loss
                flat[i] = orig - step
                down = forward(params, x, labels).per_example_loss
                flat[i] = orig
                out[:, pos] = (up - down) / (2.0 * step)
                pos += 1
    return out


def tiny_fixture(seed=11, m=5, arch=(2, 4, 3)):
    """Small double-precision net plus a random batch."""
    params = xavier_init(list(arch), seed=seed)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(m, arch[0]))
    labels = rng.integers(0, arch[-1], size=m)
    return params, x, labels


@pytest.fixture(scope="session")
def small_data(tmp_path_factory):
    """A small synthetic IDX dataset for harness-level tests."""
    out = tmp_path_factory.mktemp("smalldata")
    return synth.generate(out, n_train=600, n_test=200, seed=42)
