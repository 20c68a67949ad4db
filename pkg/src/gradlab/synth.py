"""Deterministic synthetic digit-style datasets in IDX files.

Real MNIST files work anywhere in the harness, but tests and the preset
desk runs also need data in environments where no files are shipped.  This
generator draws, per class, a fixed prototype of random Gaussian bumps on
a 28x28 grid, then renders each example as a shifted, rescaled, noisy copy
of its class prototype.  Classes are well separated (a small network fits
clean labels quickly) while per-example pixel noise keeps examples far
apart, so random labels remain memorizable.  Output is bit-reproducible
from (n_train, n_test, seed).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import idx
from .prng import Rng

SIDE = 28
NUM_CLASSES = 10
BUMPS_PER_CLASS = 6
MAX_SHIFT = 2
# Pixel noise is an example's memorization signature: distinctive examples
# can take an arbitrary label, so most examples carry a strong signature
# drawn from SIGNATURE_RANGE.  A PLAIN_FRACTION of examples are rendered
# as their bare class prototype (no noise, no shift, unit brightness);
# identical inputs can never be fit beyond their label plurality, which
# bounds achievable training accuracy under heavy label noise and keeps
# time-to-fit ordered by noise level on small step budgets.
SIGNATURE_RANGE = (0.16, 0.24)
PLAIN_FRACTION = 0.15
BRIGHTNESS_RANGE = (0.65, 1.0)


def class_prototypes(seed: int) -> np.ndarray:
    """(K, 28, 28) prototype images in [0, 1], peak-normalized."""
    rng = Rng(seed).child("prototypes")
    yy, xx = np.mgrid[0:SIDE, 0:SIDE].astype(np.float64)
    protos = np.zeros((NUM_CLASSES, SIDE, SIDE))
    for k in range(NUM_CLASSES):
        r = rng.child(k)
        cx = r.uniform_range(5.0, SIDE - 5.0, BUMPS_PER_CLASS)
        cy = r.uniform_range(5.0, SIDE - 5.0, BUMPS_PER_CLASS)
        sigma = r.uniform_range(1.5, 3.5, BUMPS_PER_CLASS)
        amp = r.uniform_range(0.5, 1.0, BUMPS_PER_CLASS)
        img = np.zeros((SIDE, SIDE))
        for b in range(BUMPS_PER_CLASS):
            img += amp[b] * np.exp(
                -((xx - cx[b]) ** 2 + (yy - cy[b]) ** 2) / (2.0 * sigma[b] ** 2)
            )
        protos[k] = img / img.max()
    return protos


def render_split(n: int, rng: Rng, protos: np.ndarray):
    """(images uint8 (n,28,28), labels uint8 (n,)) for one split."""
    labels = rng.child("labels").integers(NUM_CLASSES, n).astype(np.uint8)
    shifts_x = rng.child("shift_x").integers(2 * MAX_SHIFT + 1, n) - MAX_SHIFT
    shifts_y = rng.child("shift_y").integers(2 * MAX_SHIFT + 1, n) - MAX_SHIFT
    brightness = rng.child("brightness").uniform_range(*BRIGHTNESS_RANGE, n)
    amplitude = rng.child("amplitude").uniform_range(*SIGNATURE_RANGE, n)
    plain = rng.child("plain").uniform(n) < PLAIN_FRACTION
    noise = rng.child("noise").standard_normal(n * SIDE * SIDE).reshape(n, SIDE, SIDE)
    images = np.empty((n, SIDE, SIDE), dtype=np.uint8)
    for i in range(n):
        if plain[i]:
            img = protos[labels[i]]
        else:
            img = np.roll(protos[labels[i]], (shifts_y[i], shifts_x[i]), axis=(0, 1))
            img = img * brightness[i] + amplitude[i] * noise[i]
        images[i] = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    return images, labels


def generate(out_dir, n_train: int, n_test: int, seed: int) -> dict:
    """Write train/test IDX pairs under out_dir; returns the four paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    protos = class_prototypes(seed)
    paths = {
        "train_images": out_dir / "train-images-idx3-ubyte",
        "train_labels": out_dir / "train-labels-idx1-ubyte",
        "test_images": out_dir / "t10k-images-idx3-ubyte",
        "test_labels": out_dir / "t10k-labels-idx1-ubyte",
    }
    root = Rng(seed)
    for split, n in (("train", n_train), ("test", n_test)):
        images, labels = render_split(n, root.child(split), protos)
        idx.write_images(paths[f"{split}_images"], images)
        idx.write_labels(paths[f"{split}_labels"], labels)
    return {k: str(v) for k, v in paths.items()}
