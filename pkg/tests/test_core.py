import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from prefk.core import as_distribution, log_softmax, make_rng, softmax_distribution, solve_spd, sym_spd_eigvals
from prefk.errors import InvalidInput, SingularMatrix


def test_softmax_examples():
    np.testing.assert_allclose(softmax_distribution([0.0, 0.0]), [0.5, 0.5])
    np.testing.assert_allclose(softmax_distribution([math.log(2), 0.0]), [2 / 3, 1 / 3], rtol=1e-12)
    p = softmax_distribution([1000.0, 0.0])
    assert np.all(np.isfinite(p))
    assert p[0] == pytest.approx(1.0) and p[1] == pytest.approx(0.0, abs=1e-300)


@pytest.mark.parametrize("bad", [[], [1.0, math.nan], [math.inf, 0.0]])
def test_softmax_rejects_bad_input(bad):
    with pytest.raises(InvalidInput):
        softmax_distribution(bad)


@given(arrays(np.float64, st.integers(2, 10), elements=st.floats(-50, 50)))
def test_softmax_is_a_distribution(scores):
    p = softmax_distribution(scores)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(np.log(p[p > 1e-300]), log_softmax(scores)[p > 1e-300], atol=1e-9)


@given(arrays(np.float64, 5, elements=st.floats(-20, 20)), st.floats(-100, 100))
def test_softmax_shift_invariant(scores, c):
    np.testing.assert_allclose(softmax_distribution(scores + c), softmax_distribution(scores), atol=1e-12)


def test_eigvals_examples():
    np.testing.assert_allclose(sym_spd_eigvals(np.eye(3)), [1, 1, 1])
    np.testing.assert_allclose(sym_spd_eigvals(np.diag([4.0, 1.0])), [4, 1])
    np.testing.assert_allclose(sym_spd_eigvals([[2.0, 1.0], [1.0, 2.0]]), [3, 1])


@pytest.mark.parametrize("m", [np.ones((2, 3)), [[1.0, 2.0], [0.0, 1.0]]])
def test_eigvals_rejects_nonsymmetric(m):
    with pytest.raises(InvalidInput):
        sym_spd_eigvals(m)


def test_solve_spd_examples():
    np.testing.assert_allclose(solve_spd(np.eye(2), [1.0, 2.0]), [1, 2])
    np.testing.assert_allclose(solve_spd(np.diag([2.0, 4.0]), [2.0, 4.0]), [1, 1])
    with pytest.raises(SingularMatrix):
        solve_spd([[1.0, 1.0], [1.0, 1.0]], [1.0, 0.0])


@given(arrays(np.float64, (3, 3), elements=st.floats(-3, 3)), arrays(np.float64, 3, elements=st.floats(-3, 3)))
def test_solve_spd_solves(a, v):
    sigma = a @ a.T + np.eye(3)
    np.testing.assert_allclose(sigma @ solve_spd(sigma, v), v, atol=1e-9)


def test_as_distribution_checks_mass():
    with pytest.raises(InvalidInput):
        as_distribution([0.5, 0.6])
    with pytest.raises(InvalidInput):
        as_distribution([1.5, -0.5])


def test_rng_is_seeded():
    assert make_rng(3).normal() == make_rng(3).normal()
