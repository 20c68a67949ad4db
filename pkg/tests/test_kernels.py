"""The compiled winsorize core and the numpy fallback must agree."""

import numpy as np
import pytest

from gradlab import _kernels_py, kernels
from gradlab.optim import winsorize

compiled = pytest.importorskip("gradlab._kernels")


def random_case(seed, m=100, fo=8, fi=13):
    rng = np.random.default_rng(seed)
    delta = rng.standard_normal((m, fo))
    acts = rng.standard_normal((m, fi))
    return (
        np.ascontiguousarray(delta.T),
        np.ascontiguousarray(acts.T),
        delta,
        acts,
    )


@pytest.mark.parametrize("k", [0, 1, 2, 4, 8, 33])
def test_compiled_matches_fallback(k):
    deltaT, actsT, _, _ = random_case(k + 1)
    got = compiled.winsorized_outer_sum(deltaT, actsT, k, threads=2)
    ref = _kernels_py.winsorized_outer_sum(deltaT, actsT, k)
    rel = np.abs(got - ref) / np.maximum(np.abs(ref), 1e-12)
    assert rel.max() < 1e-9


@pytest.mark.parametrize("k", [1, 4])
def test_compiled_matches_oracle_op(k):
    # element-by-element: each output coordinate equals the 1-D winsorize op
    deltaT, actsT, delta, acts = random_case(77 + k, m=50, fo=3, fi=4)
    c = 100.0 * k / 50
    got = compiled.winsorized_outer_sum(deltaT, actsT, k, threads=1)
    for i in range(3):
        for j in range(4):
            values = delta[:, i] * acts[:, j]
            assert got[i, j] == pytest.approx(winsorize(values, c), rel=1e-10)


def test_column_sum_variants_agree():
    rng = np.random.default_rng(5)
    valuesT = np.ascontiguousarray(rng.standard_normal((7, 60)))
    for k in (0, 3, 9):
        got = compiled.winsorized_column_sum(valuesT, k, threads=2)
        ref = _kernels_py.winsorized_column_sum(valuesT, k)
        assert np.allclose(got, ref, rtol=1e-10, atol=1e-12)


def test_thread_count_does_not_change_bits():
    deltaT, actsT, _, _ = random_case(9)
    one = compiled.winsorized_outer_sum(deltaT, actsT, 4, threads=1)
    two = compiled.winsorized_outer_sum(deltaT, actsT, 4, threads=2)
    assert np.array_equal(one, two)


def test_k0_is_plain_sum():
    deltaT, actsT, delta, acts = random_case(11, m=32, fo=2, fi=3)
    got = compiled.winsorized_outer_sum(deltaT, actsT, 0, threads=1)
    expected = np.einsum("mi,mj->ij", delta, acts)
    assert np.allclose(got, expected, rtol=1e-12)


def test_compiled_validation():
    deltaT, actsT, _, _ = random_case(3, m=10)
    with pytest.raises(ValueError):
        compiled.winsorized_outer_sum(deltaT, actsT, 200)
    with pytest.raises(ValueError):
        compiled.winsorized_outer_sum(deltaT, np.ascontiguousarray(np.zeros((4, 11))), 1)
    with pytest.raises(ValueError):
        compiled.winsorized_column_sum(deltaT, 10)  # k+1 > m


def test_fallback_validation():
    with pytest.raises(ValueError):
        _kernels_py.winsorized_outer_sum(np.zeros((2, 10)), np.zeros((3, 10)), 10)
    with pytest.raises(ValueError):
        _kernels_py.winsorized_outer_sum(np.zeros((2, 10)), np.zeros((3, 9)), 1)


def test_selector_exposes_active_implementation():
    assert kernels.HAVE_COMPILED
    assert kernels.supports_k(0)
    if kernels.TRACKER_LIMIT is not None:
        assert not kernels.supports_k(kernels.TRACKER_LIMIT + 1)
    assert kernels.default_threads() >= 1


def test_denormal_products_flush_to_zero():
    # subnormal products are flushed inside the kernel (speed); sums come
    # back as exact zeros rather than crawling through microcode assists
    rng = np.random.default_rng(21)
    deltaT = np.ascontiguousarray(rng.standard_normal((4, 50)) * 1e-160)
    actsT = np.ascontiguousarray(rng.standard_normal((6, 50)) * 1e-160)
    out = compiled.winsorized_outer_sum(deltaT, actsT, 3, threads=2)
    assert np.abs(out).max() == 0.0
    # normal-range values are untouched by the flush mode
    deltaT2 = np.ascontiguousarray(rng.standard_normal((4, 50)))
    actsT2 = np.ascontiguousarray(rng.standard_normal((6, 50)))
    ref = _kernels_py.winsorized_outer_sum(deltaT2, actsT2, 3)
    got = compiled.winsorized_outer_sum(deltaT2, actsT2, 3, threads=2)
    assert np.allclose(got, ref, rtol=1e-10)


def test_ties_handled_identically():
    # heavy ties stress the order-statistic semantics on both paths
    rng = np.random.default_rng(13)
    delta = rng.integers(-2, 3, size=(40, 5)).astype(np.float64)
    acts = rng.integers(-1, 2, size=(40, 6)).astype(np.float64)
    deltaT = np.ascontiguousarray(delta.T)
    actsT = np.ascontiguousarray(acts.T)
    for k in (1, 5, 15):
        got = compiled.winsorized_outer_sum(deltaT, actsT, k, threads=1)
        ref = _kernels_py.winsorized_outer_sum(deltaT, actsT, k)
        assert np.allclose(got, ref, rtol=1e-12, atol=1e-12)
