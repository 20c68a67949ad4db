"""Datasets with controlled label noise.

A RawDataset holds clean images/labels; inject_label_noise produces a
NoisyDataset where a seeded fraction of training examples had their labels
permuted among themselves.  Examples whose label survived are "pristine",
the rest "corrupt".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import idx
from .prng import Rng


@dataclass(frozen=True)
class RawDataset:
    images: np.ndarray  # (N, D) float64 in [0, 1]
    labels: np.ndarray  # (N,) int64 in [0, K)
    num_classes: int

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"{self.images.shape[0]} images vs {self.labels.shape[0]} labels"
            )
        if len(self.labels) and self.labels.max() >= self.num_classes:
            raise ValueError("label out of range")

    @property
    def count(self) -> int:
        return self.images.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.images.shape[1]

    def subset(self, n: int) -> "RawDataset":
        """First n examples; num_classes is kept from the parent."""
        return RawDataset(self.images[:n], self.labels[:n], self.num_classes)


@dataclass(frozen=True)
class NoisyDataset:
    base: RawDataset
    assigned_labels: np.ndarray
    pristine_mask: np.ndarray
    noise_fraction: float
    seed: int

    def __post_init__(self):
        expected = self.assigned_labels == self.base.labels
        if not np.array_equal(self.pristine_mask, expected):
            raise ValueError("pristine_mask inconsistent with assigned labels")

    @property
    def pristine_count(self) -> int:
        return int(self.pristine_mask.sum())

    @property
    def corrupt_count(self) -> int:
        return int((~self.pristine_mask).sum())


def load_idx(images_path, labels_path, num_classes: int | None = None) -> RawDataset:
    """Load an IDX image/label pair; pixels are scaled by 1/255.

    num_classes defaults to max(labels)+1 (10 for any full MNIST split).
    """
    images = idx.read_images(images_path)
    labels = idx.read_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise idx.CountMismatchError(
            f"{images.shape[0]} images in {images_path} but "
            f"{labels.shape[0]} labels in {labels_path}"
        )
    flat = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    k = int(labels.max()) + 1 if num_classes is None else num_classes
    return RawDataset(flat, labels.astype(np.int64), k)


def inject_label_noise(
    base: RawDataset, fraction: float, seed: int, mode: str = "permute"
) -> NoisyDataset:
    """Corrupt round(fraction*N) labels, chosen and permuted by `seed`.

    mode "permute" (default): the selected examples' labels are permuted
    among themselves, so the overall label histogram is unchanged.
    mode "resample": each selected example gets an independent uniform
    label instead.  Selection is the first round(fraction*N) entries of a
    seeded permutation of range(N); round() is round-half-to-even.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"noise fraction must be in [0, 1], got {fraction}")
    if mode not in ("permute", "resample"):
        raise ValueError(f"unknown noise mode {mode!r}")
    n = base.count
    n_selected = round(fraction * n)
    rng = Rng(seed)
    selected = np.sort(rng.child("select").choice_no_replace(n, n_selected))
    assigned = base.labels.copy()
    if n_selected:
        if mode == "permute":
            perm = rng.child("permute").permutation(n_selected)
            assigned[selected] = base.labels[selected][perm]
        else:
            assigned[selected] = rng.child("resample").integers(
                base.num_classes, n_selected
            )
    return NoisyDataset(
        base=base,
        assigned_labels=assigned,
        pristine_mask=assigned == base.labels,
        noise_fraction=fraction,
        seed=seed,
    )


def proper_accuracy(fraction: float, num_classes: int) -> float:
    """Expected share of correctly-labelled examples after noise injection."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"noise fraction must be in [0, 1], got {fraction}")
    if num_classes < 2:
        raise ValueError("need at least 2 classes")
    return (1.0 - fraction) + fraction / num_classes
