"""Gradient-coherence statistics over pristine/corrupt example groups.

At a training step with overall gradient g and group sums g_p (pristine)
and g_c (corrupt), the fractions of first-order loss reduction are

    f_p = <g, g_p> / <g, g>      f_c = <g, g_c> / <g, g>

which always sum to 1 because g = g_p + g_c; cross terms are thereby
attributed equally to both groups.  Cumulative per-example contributions
i_p, i_c are running sums of the group inner products scaled by 1/|p| and
1/|c|.  Significance is judged against "null worlds" where the
pristine/corrupt designations are randomly permuted among the examples.

Statistics can be restricted to a fixed sample of coordinates and, in
exact mode, a fixed sample of examples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .net import BackpropState
from .prng import Rng

# |g|^2 below this is treated as an undefined statistic, not a zero
ZERO_NORM_FLOOR = 1e-30


@dataclass(frozen=True)
class CoordinateSample:
    """A fixed set of sampled weight coordinates, chosen once per experiment.

    rows[i]/cols[i] index into the weight matrix of layer layers[i].  The
    per-layer quota splits the total evenly (remainder to earlier layers),
    capped by layer size; biases are never sampled.
    """

    layers: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    seed: int

    @property
    def count(self) -> int:
        return len(self.layers)

    def per_layer_counts(self, num_layers: int) -> list:
        return [int((self.layers == ell).sum()) for ell in range(num_layers)]


def sample_coordinates(architecture, total: int, seed: int) -> CoordinateSample:
    """Draw `total` weight coordinates without replacement, evenly per layer."""
    num_layers = len(architecture) - 1
    if total < 1:
        raise ValueError("need at least one sampled coordinate")
    quotas = [total // num_layers] * num_layers
    for ell in range(total % num_layers):
        quotas[ell] += 1
    rng = Rng(seed)
    layers, rows, cols = [], [], []
    for ell, (fan_in, fan_out) in enumerate(zip(architecture[:-1], architecture[1:])):
        size = fan_in * fan_out
        q = min(quotas[ell], size)
        flat = np.sort(rng.child("coords", ell).choice_no_replace(size, q))
        r, c = np.divmod(flat, fan_in)
        layers.append(np.full(q, ell, dtype=np.int64))
        rows.append(r)
        cols.append(c)
    return CoordinateSample(
        np.concatenate(layers), np.concatenate(rows), np.concatenate(cols), seed
    )


def sampled_per_example_grads(state: BackpropState, sample: CoordinateSample) -> np.ndarray:
    """(m, Q) per-example gradients at the sampled coordinates.

    The per-example gradient of weight (i, j) in layer l is
    delta_l[e, i] * activations_l[e, j], so a gather suffices; nothing is
    materialized beyond the sampled columns.
    """
    parts = []
    for ell, (delta, acts) in enumerate(zip(state.deltas, state.activations)):
        in_layer = sample.layers == ell
        if not in_layer.any():
            continue
        d = delta[:, sample.rows[in_layer]].astype(np.float64, copy=False)
        a = acts[:, sample.cols[in_layer]].astype(np.float64, copy=False)
        parts.append(d * a)
    return np.concatenate(parts, axis=1)


def split_gradient(per_example: np.ndarray, pristine_mask: np.ndarray):
    """Group sums (g_p, g_c) of per-example gradient rows."""
    per_example = np.asarray(per_example)
    if per_example.shape[0] == 0:
        raise ValueError("empty example set")
    mask = np.asarray(pristine_mask, dtype=bool)
    if mask.shape[0] != per_example.shape[0]:
        raise ValueError("designation count does not match example count")
    g_p = per_example[mask].sum(axis=0)
    g_c = per_example[~mask].sum(axis=0)
    return g_p, g_c


def fraction_stats(g: np.ndarray, g_p: np.ndarray, g_c: np.ndarray):
    """(f_p, f_c); (nan, nan) when |g|^2 is below the zero floor."""
    gg = float(np.dot(g, g))
    if gg < ZERO_NORM_FLOOR:
        return float("nan"), float("nan")
    return float(np.dot(g, g_p) / gg), float(np.dot(g, g_c) / gg)


def cumulative_means(ip_history, ic_history, pristine_count: int, corrupt_count: int):
    """Prefix sums of the group inner products, scaled per example."""
    if pristine_count <= 0 or corrupt_count <= 0:
        raise ValueError("cumulative means need non-empty pristine and corrupt groups")
    i_p = np.cumsum(np.asarray(ip_history, dtype=np.float64)) / pristine_count
    i_c = np.cumsum(np.asarray(ic_history, dtype=np.float64)) / corrupt_count
    return i_p, i_c


def null_worlds(pristine_mask: np.ndarray, replicas: int, seed: int) -> list:
    """Permuted designation masks; group sizes are preserved exactly."""
    if replicas < 1:
        raise ValueError("need at least one replica")
    mask = np.asarray(pristine_mask, dtype=bool)
    rng = Rng(seed)
    return [mask[rng.child("null", r).permutation(len(mask))] for r in range(replicas)]


@dataclass
class TwoExampleDecomposition:
    combined: np.ndarray
    shared_coefficient: float
    specific_coefficients: tuple


def two_example_oracle(g_a1, g_ab, g_b1, tol: float = 1e-9) -> TwoExampleDecomposition:
    """Combine two per-example gradients sharing one orthogonal direction.

    With g_a = g_a1 + g_ab and g_b = g_b1 + g_ab pairwise orthogonal, the
    overall gradient is g_a1 + 2*g_ab + g_b1: the shared direction enters
    with twice the coefficient of the example-specific ones.
    """
    g_a1, g_ab, g_b1 = (np.asarray(v, dtype=np.float64) for v in (g_a1, g_ab, g_b1))
    for name, (u, v) in {
        "g_a1/g_b1": (g_a1, g_b1),
        "g_a1/g_ab": (g_a1, g_ab),
        "g_b1/g_ab": (g_b1, g_ab),
    }.items():
        bound = tol * max(np.linalg.norm(u) * np.linalg.norm(v), 1.0)
        if abs(float(np.dot(u, v))) > bound:
            raise ValueError(f"inputs {name} are not orthogonal")
    combined = g_a1 + 2.0 * g_ab + g_b1

    def coeff(direction):
        nn = float(np.dot(direction, direction))
        return float(np.dot(combined, direction) / nn) if nn > 0 else 0.0

    return TwoExampleDecomposition(
        combined=combined,
        shared_coefficient=coeff(g_ab),
        specific_coefficients=(coeff(g_a1), coeff(g_b1)),
    )


@dataclass
class WorldSeries:
    """One designation's statistic series across the logged steps."""

    name: str
    pristine_mask: np.ndarray  # over the statistic's example universe
    steps: list = field(default_factory=list)
    f_p: list = field(default_factory=list)
    f_c: list = field(default_factory=list)
    ip_terms: list = field(default_factory=list)
    ic_terms: list = field(default_factory=list)

    @property
    def pristine_count(self) -> int:
        return int(self.pristine_mask.sum())

    @property
    def corrupt_count(self) -> int:
        return int((~self.pristine_mask).sum())


class CoherenceTracker:
    """Accumulates f/i series for the real designation and its null worlds.

    `universe_mask` spans the example universe the statistics run over
    (the full training set in minibatch mode, the sampled example set in
    exact mode); `record` receives per-example gradients for a subset of
    that universe together with their universe indices.
    """

    def __init__(self, universe_mask: np.ndarray, replicas: int, seed: int):
        universe_mask = np.asarray(universe_mask, dtype=bool)
        self.worlds = [WorldSeries("real", universe_mask)]
        for r, mask in enumerate(null_worlds(universe_mask, replicas, seed)):
            self.worlds.append(WorldSeries(f"null_{r}", mask))

    def record(self, step: int, per_example: np.ndarray, universe_indices: np.ndarray):
        g = per_example.sum(axis=0)
        for world in self.worlds:
            designations = world.pristine_mask[universe_indices]
            g_p, g_c = split_gradient(per_example, designations)
            f_p, f_c = fraction_stats(g, g_p, g_c)
            world.steps.append(step)
            world.f_p.append(f_p)
            world.f_c.append(f_c)
            world.ip_terms.append(float(np.dot(g, g_p)))
            world.ic_terms.append(float(np.dot(g, g_c)))

    def rows(self):
        """CSV rows (step, world, f_p, f_c, i_p, i_c) ordered by step."""
        def side(terms, count):
            if count > 0:
                return np.cumsum(np.asarray(terms, dtype=np.float64)) / count
            return np.full(len(terms), np.nan)

        out = []
        for world in self.worlds:
            i_p = side(world.ip_terms, world.pristine_count)
            i_c = side(world.ic_terms, world.corrupt_count)
            for idx, step in enumerate(world.steps):
                out.append(
                    (step, world.name, world.f_p[idx], world.f_c[idx], float(i_p[idx]), float(i_c[idx]))
                )
        out.sort(key=lambda r: (r[0], r[1] != "real", r[1]))
        return out
