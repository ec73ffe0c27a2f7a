import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgpu import KernelSpec, default_kernel, gram_matrix, kernel_eval

finite_floats = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


def test_rbf_same_point_is_one():
    spec = KernelSpec("rbf", 1.0)
    assert kernel_eval(spec, [0.3, -0.7], [0.3, -0.7]) == 1.0


def test_linear_dot_product():
    assert kernel_eval(KernelSpec("linear"), [1.0, 2.0], [3.0, 4.0]) == 11.0


def test_rbf_hand_computed():
    # exp(-0.5 * ||(0,0)-(2,0)||^2) = exp(-2)
    got = kernel_eval(KernelSpec("rbf", 0.5), [0.0, 0.0], [2.0, 0.0])
    assert got == pytest.approx(math.exp(-2.0), abs=1e-12)
    assert got == pytest.approx(0.1353352832366127, abs=1e-12)


def test_dimension_mismatch_raises():
    with pytest.raises(ValueError):
        kernel_eval(KernelSpec("rbf", 1.0), [1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        gram_matrix(KernelSpec("linear"), np.ones((3, 2)), np.ones((3, 4)))


def test_rbf_requires_positive_gamma():
    with pytest.raises(ValueError):
        KernelSpec("rbf", 0.0)
    with pytest.raises(ValueError):
        KernelSpec("rbf", -1.0)
    with pytest.raises(ValueError):
        KernelSpec("sigmoid", 1.0)


def test_default_kernel_is_inverse_dimension():
    spec = default_kernel(4)
    assert spec.kind == "rbf"
    assert spec.gamma == pytest.approx(0.25)


@given(st.lists(finite_floats, min_size=1, max_size=6), st.data())
@settings(max_examples=60, deadline=None)
def test_kernel_eval_symmetric(xs, data):
    zs = data.draw(st.lists(finite_floats, min_size=len(xs), max_size=len(xs)))
    for spec in (KernelSpec("linear"), KernelSpec("rbf", 0.7)):
        assert kernel_eval(spec, xs, zs) == kernel_eval(spec, zs, xs)


def test_gram_identical_points_all_ones():
    X = np.tile([0.4, -1.2], (2, 1))
    G = gram_matrix(KernelSpec("rbf", 2.0), X, X)
    assert np.array_equal(G, np.ones((2, 2)))


def test_gram_symmetric_for_random_sample():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(7, 3))
    for spec in (KernelSpec("linear"), KernelSpec("rbf", 0.5)):
        G = gram_matrix(spec, X, X)
        assert np.array_equal(G, G.T)


def test_gram_cross_matches_kernel_eval():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(4, 2))
    Z = rng.normal(size=(3, 2))
    G = gram_matrix(KernelSpec("rbf", 0.8), X, Z)
    for i in range(4):
        for j in range(3):
            assert G[i, j] == pytest.approx(kernel_eval(KernelSpec("rbf", 0.8), X[i], Z[j]), abs=1e-12)


def test_gram_psd_five_points():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(5, 2))
    G = gram_matrix(KernelSpec("rbf", 1.0), X, X)
    assert np.linalg.eigvalsh(G).min() >= -1e-9


@given(st.integers(min_value=1, max_value=20), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_gram_psd_up_to_twenty_points(n, seed):
    X = np.random.default_rng(seed).uniform(-3, 3, size=(n, 2))
    for spec in (KernelSpec("linear"), KernelSpec("rbf", 0.9)):
        G = gram_matrix(spec, X, X)
        assert np.linalg.eigvalsh(G).min() >= -1e-8


def test_gram_rejects_empty():
    with pytest.raises(ValueError):
        gram_matrix(KernelSpec("linear"), np.empty((0, 2)), np.ones((2, 2)))
