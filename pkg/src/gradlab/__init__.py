"""Training lab for per-example gradient dynamics in small ReLU networks.

Trains fully-connected classifiers with per-example gradient
instrumentation: label-noise injection with pristine/corrupt bookkeeping,
pristine/corrupt coherence statistics with null-world significance
baselines, and c-winsorized SGD that clips per-coordinate gradient
outliers before summing.
"""

from .dataset import NoisyDataset, RawDataset, inject_label_noise, load_idx, proper_accuracy
from .harness import Preset, TrainConfig, noise_grid, run_experiment, winsor_grid
from .kernels import USING_COMPILED
from .net import GradientBuffer, MlpParams, accuracy, backprop, forward, per_example_gradients, xavier_init
from .optim import WinsorConfig, sgd_step, winsorize, winsorized_sgd_step
from .prng import Rng

__version__ = "0.1.0"

__all__ = [
    "GradientBuffer",
    "MlpParams",
    "NoisyDataset",
    "Preset",
    "RawDataset",
    "Rng",
    "TrainConfig",
    "USING_COMPILED",
    "WinsorConfig",
    "accuracy",
    "backprop",
    "forward",
    "inject_label_noise",
    "load_idx",
    "noise_grid",
    "per_example_gradients",
    "proper_accuracy",
    "run_experiment",
    "sgd_step",
    "winsor_grid",
    "winsorize",
    "winsorized_sgd_step",
    "xavier_init",
]
