"""Self-checks behind the `verify` CLI subcommand.

Each check recomputes something the training stack relies on through an
independent route (finite differences, brute-force sums) and reports one
PASS/FAIL line.  Returns True when everything passed.
"""

from __future__ import annotations

import numpy as np

from . import optim
from .coherence import fraction_stats, null_worlds, split_gradient
from .net import backprop, forward, per_example_gradients, xavier_init
from .prng import Rng


def _finite_difference_grads(params, x, labels, step=1e-5):
    """Central-difference per-example gradients, flattened like GradientBuffer."""
    m = x.shape[0]
    grads = np.zeros((m, params.num_params))
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
                grads[:, pos] = (up - down) / (2.0 * step)
                pos += 1
    return grads


def check_gradients(report) -> bool:
    rng = Rng(2024)
    params = xavier_init([2, 4, 3], seed=7)
    x = rng.child("x").uniform_range(-1.0, 1.0, 10).reshape(5, 2)
    labels = rng.child("y").integers(3, 5)
    analytic = per_example_gradients(params, x, labels).per_example_flat()
    numeric = _finite_difference_grads(params, x, labels)
    err = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-8)
    ok = bool(err.max() < 1e-5)
    report(f"per-example gradients vs central finite differences (max rel {err.max():.2e})", ok)
    return ok


def check_sum_identity(report) -> bool:
    ok = True
    for trial in range(10):
        rng = Rng(100 + trial)
        params = xavier_init([3, 6, 4], seed=trial)
        x = rng.child("x").uniform_range(-1.0, 1.0, 24).reshape(8, 3)
        labels = rng.child("y").integers(4, 8)
        buf = per_example_gradients(params, x, labels)
        batch = buf.batch_flat()
        per = buf.per_example_flat()
        summed = per.sum(axis=0)
        rel = np.abs(batch - summed) / np.maximum(np.abs(summed), 1e-12)
        ok &= bool(rel.max() < 1e-10)
        # |g|^2 against the norm/cross-term decomposition
        g = per.sum(axis=0)
        direct = float(g @ g)
        gram = per @ per.T
        decomposed = float(np.trace(gram)) + float(gram.sum() - np.trace(gram))
        ok &= bool(abs(direct - decomposed) <= 1e-8 * max(abs(direct), 1e-12))
    report("batch gradient equals per-example sum; squared-norm decomposition", ok)
    return ok


def check_winsorize(report) -> bool:
    rng = Rng(5)
    values = rng.uniform_range(-3.0, 3.0, 100)
    k = optim.clip_count(2, 100)
    s = np.sort(values)
    expected = float(np.clip(values, s[k], s[99 - k]).sum())
    got = optim.winsorize(values, 2)
    ok = bool(abs(got - expected) < 1e-9)
    ok &= optim.winsorize([-10.0, 1.0, 2.0, 3.0, 100.0], 20) == 10.0
    ok &= optim.winsorize(values, 0) == float(np.sum(np.sort(values)))
    report("winsorize matches sort-clip-sum and worked examples", ok)
    return ok


def check_partition_identity(report) -> bool:
    rng = Rng(99)
    per = rng.standard_normal(40 * 6).reshape(40, 6)
    mask = rng.uniform(40) < 0.6
    g = per.sum(axis=0)
    g_p, g_c = split_gradient(per, mask)
    f_p, f_c = fraction_stats(g, g_p, g_c)
    ok = bool(abs(f_p + f_c - 1.0) < 1e-9)
    for rep in null_worlds(mask, 3, seed=1):
        ok &= int(rep.sum()) == int(mask.sum())
    report("partition identity f_p+f_c=1 and null group sizes", ok)
    return ok


def run_all(out=print) -> bool:
    results = []

    def report(name, ok):
        results.append(ok)
        out(f"{'PASS' if ok else 'FAIL'}  {name}")

    check_gradients(report)
    check_sum_identity(report)
    check_winsorize(report)
    check_partition_identity(report)
    return all(results)
