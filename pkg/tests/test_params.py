import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xxz_sov import DomainError
from xxz_sov.params import (
    A_SIGN,
    ModelParams,
    Regime,
    calibrate_a_sign,
    complex_from_json,
    complex_to_json,
    eval_a,
    eval_d,
    validate_sov_condition,
)


def test_sov_condition_single_site():
    assert validate_sov_condition(ModelParams(1, 2.0, [0.7])) == (True, [])


def test_sov_condition_constructed_violation():
    ok, violations = validate_sov_condition(ModelParams(2, 2.0, [1.0, 2.0]))
    assert not ok
    # eta_1 = q^-1 eta_2
    assert violations == [(1, 2, -1)]


def test_sov_condition_three_sites():
    ok, violations = validate_sov_condition(ModelParams(3, np.exp(1j * np.pi / 5), [1.0, 1.7, 2.9]))
    assert ok and violations == []


def test_sov_condition_equal_nodes():
    ok, violations = validate_sov_condition(ModelParams(3, 1.5, [1.0, 2.0, 1.0]))
    assert (1, 3, 0) in violations and not ok


def test_eval_d_examples():
    assert eval_d(ModelParams(2, 2.0, [2.0, 3.0]), 1.0) == pytest.approx(4.0)
    assert eval_d(ModelParams(1, 2.0, [1.0]), 1j) == pytest.approx(2j)
    assert eval_d(ModelParams(2, 2.0, [2.0, 3.0]), 3.0) == 0


def test_eval_a_examples():
    assert A_SIGN == -1
    assert eval_a(ModelParams(1, 2.0, [1.0]), 1.0) == pytest.approx(A_SIGN * 1.5)
    assert eval_a(ModelParams(2, 2.0, [1.0, 2.0]), 2.0) == pytest.approx(A_SIGN * 5.625)
    params = ModelParams.random(3, "generic", 5)
    assert abs(eval_a(params, params.eta[0] / params.q)) < 1e-14


def test_zero_spectral_parameter():
    params = ModelParams(1, 2.0, [1.0])
    with pytest.raises(DomainError):
        eval_a(params, 0)
    with pytest.raises(DomainError):
        eval_d(params, 0)


@pytest.mark.parametrize("regime", list(Regime))
def test_zeros_at_nodes(regime):
    params = ModelParams.random(4, regime, 17)
    for e in params.eta:
        assert abs(eval_d(params, e)) < 1e-13
        assert abs(eval_a(params, e / params.q)) < 1e-13


def test_calibrated_sign_matches_constant():
    assert calibrate_a_sign(ModelParams.random(3, "generic", 2), rng=0) == A_SIGN


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_sites=0, q=2.0, inhomogeneities=[]),
        dict(n_sites=2, q=2.0, inhomogeneities=[1.0]),
        dict(n_sites=1, q=1.0, inhomogeneities=[1.0]),
        dict(n_sites=1, q=-1.0, inhomogeneities=[1.0]),
        dict(n_sites=1, q=2.0, inhomogeneities=[0.0]),
        dict(n_sites=1, q=2.0, inhomogeneities=[1.0], regime="massless"),
        dict(n_sites=1, q=np.exp(0.3j), inhomogeneities=[1j], regime="massless"),
        dict(n_sites=1, q=np.exp(0.3j), inhomogeneities=[1.0], regime="massive"),
        dict(n_sites=1, q=1.3, inhomogeneities=[2.0], regime="massive"),
    ],
)
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        ModelParams(**kwargs)


@pytest.mark.parametrize("regime", list(Regime))
def test_random_params_satisfy_hypotheses(regime):
    params = ModelParams.random(5, regime, 3)
    assert params.regime is regime
    assert validate_sov_condition(params)[0]


def test_homogeneous():
    params = ModelParams.homogeneous(3, 1.5)
    assert params.is_homogeneous and params.dim == 8 and params.parity_flag == 0
    assert not validate_sov_condition(params)[0]


def test_json_round_trip(tmp_path):
    params = ModelParams.random(3, "massless", 9)
    doc = json.loads(params.to_json())
    assert set(doc) == {"n_sites", "q", "inhomogeneities", "regime"}
    assert set(doc["q"]) == {"re", "im"}
    assert ModelParams.from_json(params.to_json()) == params
    path = tmp_path / "cfg.json"
    path.write_text(params.to_json())
    assert ModelParams.load(path) == params


@settings(max_examples=50, deadline=None)
@given(st.complex_numbers(allow_nan=False, allow_infinity=False, max_magnitude=1e6))
def test_complex_json_round_trip(z):
    assert complex_from_json(json.loads(json.dumps(complex_to_json(z)))) == z
