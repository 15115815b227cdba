import numpy as np
import pytest

from conftest import random_points
from xxz_sov import operators as op
from xxz_sov import oracle
from xxz_sov import sov
from xxz_sov.errors import SovConditionError
from xxz_sov.params import ModelParams, eval_a, eval_d


def test_kappa_examples():
    assert sov.kappa((0, 0, 0)) == 1
    assert sov.kappa((1, 0, 0)) == 2
    for j in range(1, 17):
        assert sov.kappa(sov.kappa_inv(j, 4)) == j
    with pytest.raises(ValueError):
        sov.kappa((2, 0))


def test_all_h_order():
    hs = sov.all_h(3)
    assert [sov.kappa(h) for h in hs] == list(range(1, 9))


def test_reference_states(params3):
    for side in ("left", "right"):
        basis = sov.build_sov_basis(params3, side, "D")
        expected = np.zeros(params3.dim, dtype=complex)
        expected[0] = 1 / basis.norm_constant
        assert np.allclose(basis.state((0, 0, 0)), expected)


def test_single_site_right_basis():
    params = ModelParams(1, 1.7, [1.2])
    states = sov.build_sov_basis(params, "right", "D").states
    assert np.allclose(states[0], [1, 0])
    expected = op.monodromy(params, 1.2).b[:, 0] / eval_a(params, 1.2)
    assert np.allclose(states[1], expected) and states[1][0] == 0 and states[1][1] != 0


@pytest.mark.parametrize("variable", ["D", "A"])
def test_bases_diagonalize(params3, variable, rng):
    left = sov.build_sov_basis(params3, "left", variable).states
    right = sov.build_sov_basis(params3, "right", variable).states
    for lam in random_points(rng, 5):
        m = op.monodromy(params3, lam)
        fam = m.d if variable == "D" else m.a
        ev = np.array([sov.eigenvalue_at(params3, variable, h, lam) for h in sov.all_h(3)])
        assert np.abs(right @ fam.T - ev[:, None] * right).max() < 1e-10 * np.abs(fam).max()
        assert np.abs(left @ fam - ev[:, None] * left).max() < 1e-10 * np.abs(fam).max()


def test_eigenvalue_examples(params3):
    lam = 0.9 + 0.3j
    assert sov.eigenvalue_at(params3, "D", (0, 0, 0), lam) == pytest.approx(eval_d(params3, lam))
    assert sov.eigenvalue_at(params3, "A", (0, 0, 0), lam) == pytest.approx(-eval_a(params3, lam))
    assert abs(sov.eigenvalue_at(params3, "D", (1, 1, 1), params3.eta[0] / params3.q)) < 1e-14


def test_actions_match_dense(params3, rng):
    lam = random_points(rng, 1)[0]
    m = op.monodromy(params3, lam)
    for variable in ("D", "A"):
        left = sov.build_sov_basis(params3, "left", variable).states
        right = sov.build_sov_basis(params3, "right", variable).states
        psi = rng.standard_normal(params3.dim) + 1j * rng.standard_normal(params3.dim)
        for gen, g in (("B", m.b), ("C", m.c)):
            out = sov.sov_action(params3, variable, "right", gen, psi, lam)
            assert np.allclose(out @ right, g @ (psi @ right), atol=1e-9 * np.abs(g).max() * np.abs(psi).max())
            out = sov.sov_action(params3, variable, "left", gen, psi, lam)
            assert np.allclose(out @ left, (psi @ left) @ g, atol=1e-9 * np.abs(g).max() * np.abs(psi).max())


def test_action_examples():
    params = ModelParams.random(3, "generic", 8)
    eta1 = params.eta[0]
    delta0 = np.zeros(params.dim)
    delta0[0] = 1
    out = sov.sov_action(params, "D", "left", "C", delta0, eta1)
    left = sov.build_sov_basis(params, "left", "D").states
    assert np.allclose(out @ left, left[0] @ op.monodromy(params, eta1).c)
    expected = np.zeros(params.dim, dtype=complex)
    expected[1] = eval_d(params, eta1 / params.q)
    assert np.allclose(out, expected)
    top = np.zeros(params.dim)
    top[-1] = 1
    assert np.allclose(sov.sov_action(params, "D", "right", "B", top, 0.8 + 0.1j), 0)


def test_coupling_examples():
    assert np.allclose(sov.coupling_data(ModelParams(1, 1.5, [1.0])).m_diag, [1, 1])
    params = ModelParams(2, 1.5j, [1.0, 2.0])
    assert sov.coupling_diagonal(params, (0, 0)) == pytest.approx(2 / 3)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_coupling_dense(n, rng):
    params = ModelParams.random(n, "generic", rng)
    dense = sov.dense_coupling(params)
    closed = sov.coupling_data(params).m_diag
    assert np.abs((np.diag(dense) - closed) / closed).max() < 1e-10
    off = dense - np.diag(np.diag(dense))
    assert np.abs(off).max() < 1e-11 * np.abs(closed).max()


@pytest.mark.parametrize("n", [2, 3, 4])
def test_flip_ratio(n, rng):
    params = ModelParams.random(n, "massive", rng)
    m = sov.coupling_data(params).m_diag
    for j, h in enumerate(sov.all_h(n)):
        for a in range(n):
            if h[a] == 0:
                ratio = m[j ^ (1 << a)] / m[j]
                assert ratio == pytest.approx(sov.coupling_flip_ratio(params, h, a), rel=1e-10)


@pytest.mark.parametrize("n,regime,bound", [(1, "generic", 1e-13), (2, "generic", 1e-11), (4, "massless", 1e-10)])
def test_identity_decomposition(n, regime, bound):
    assert sov.check_identity_decomposition(ModelParams.random(n, regime, 4)) < bound


def test_wrong_gauge_sign_fails():
    assert sov.check_identity_decomposition(ModelParams.random(3, "generic", 4), gauge_sign=+1) > 1e-3


def test_branch_signs_change_only_normalization():
    params = ModelParams.random(3, "generic", 12)
    base = sov.build_sov_basis(params, "right", "D")
    flipped = sov.build_sov_basis(params, "right", "D", branch_signs=(1, -1, -1))
    assert flipped.norm_constant == pytest.approx(base.norm_constant)
    flipped = sov.build_sov_basis(params, "right", "D", branch_signs=(-1, 1, 1))
    assert np.allclose(flipped.states, -base.states)


def test_change_of_basis_invertible(params3):
    for side in ("left", "right"):
        u = sov.build_sov_basis(params3, side, "D").change_of_basis()
        assert np.isfinite(oracle.cond_estimate(u))


def test_sov_violation_raises():
    with pytest.raises(SovConditionError) as exc:
        sov.build_sov_basis(ModelParams(2, 2.0, [1.0, 2.0]), "left", "D")
    assert exc.value.violations == [(1, 2, -1)]


def test_sov_coordinates_delta():
    params = ModelParams.random(2, "generic", 3)
    table = np.zeros((2, 2))
    table[0, 1] = table[1, 0] = 1
    coords = sov.sov_coordinates(params, table)
    assert np.count_nonzero(coords) == 1 and coords[1] != 0
