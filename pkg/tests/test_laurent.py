import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xxz_sov import DomainError
from xxz_sov.errors import ConditioningError
from xxz_sov.laurent import (
    LaurentPoly,
    Parity,
    laurent_derivative,
    laurent_eval,
    laurent_interpolate,
    transfer_exponents,
)


def test_single_node_constant():
    p = laurent_interpolate([1.0], [7.0], [0])
    assert p.coeffs == {0: 7}


def test_two_node_example():
    p = laurent_interpolate([1.0, 2.0], [2.5, 4.25], [-1, 1])
    assert p.coeffs[1] == pytest.approx(2.0)
    assert p.coeffs[-1] == pytest.approx(0.5)
    assert p(1.0) == pytest.approx(2.5) and p(2.0) == pytest.approx(4.25)
    assert p.parity is Parity.ODD


def test_eval_and_derivative_examples():
    assert laurent_eval(LaurentPoly({1: 1, -1: -1}), 2.0) == pytest.approx(1.5)
    assert laurent_derivative(LaurentPoly({2: 1})).coeffs == {1: 2}


def test_eval_at_zero():
    with pytest.raises(DomainError):
        laurent_eval(LaurentPoly({-1: 1}), 0)
    assert laurent_eval(LaurentPoly({2: 1}), 0) == 0


def test_parity_enforced():
    with pytest.raises(ValueError):
        LaurentPoly({1: 1.0, 2: 1.0}, Parity.EVEN)
    assert LaurentPoly({1: 1.0}, "odd").derivative().parity is Parity.EVEN


def test_singular_system():
    with pytest.raises((ConditioningError, ValueError)):
        laurent_interpolate([1.0, -1.0], [1.0, 1.0], [0, 2])


def test_array_evaluation():
    p = LaurentPoly({-1: 2.0, 1: 1j})
    pts = np.array([1.0, 2.0, 1j])
    assert np.allclose(p(pts), [p(z) for z in pts])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    exps = transfer_exponents(n)
    coeffs = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    p = LaurentPoly(dict(zip(exps.tolist(), coeffs)))
    nodes = np.exp(1j * np.pi * np.arange(n) / n) * rng.uniform(0.8, 1.2)
    fit = laurent_interpolate(nodes, p(nodes), exps)
    assert fit.max_abs_diff(p) < 1e-12 * max(1.0, np.abs(coeffs).max())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_derivative_finite_difference(seed):
    rng = np.random.default_rng(seed)
    p = LaurentPoly({k: complex(*rng.standard_normal(2)) for k in range(-3, 4)})
    lam = complex(rng.uniform(0.7, 1.4), rng.uniform(-0.5, 0.5))
    h = 1e-5
    fd = (p(lam + h) - p(lam - h)) / (2 * h)
    assert abs(fd - p.derivative()(lam)) < 1e-6 * max(1.0, abs(fd))
