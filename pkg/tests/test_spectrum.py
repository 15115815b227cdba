import numpy as np
import pytest

from conftest import random_points
from xxz_sov import operators as op
from xxz_sov import oracle
from xxz_sov import spectrum as sp
from xxz_sov.errors import SovConditionError, UnsupportedError
from xxz_sov.params import ModelParams, eval_a, eval_d


@pytest.fixture(scope="module")
def massless4():
    params = ModelParams.random(4, "massless", 21)
    values = sp.compute_spectrum(params, 0)
    return params, values


def test_single_site_spectrum():
    q = 1.8
    params = ModelParams(1, q, [1.0])
    values = sp.solve_spectrum_oracle(params, 0)
    coeffs = sorted(v.coeffs[0].real for v in values)
    assert coeffs == pytest.approx([-(q - 1 / q), q - 1 / q])
    assert all(v.residual < 1e-14 for v in values)
    # a(eta) d(eta/q) equals (q - 1/q)^2 with the negative sign of a
    assert eval_a(params, 1.0) * eval_d(params, 1 / q) == pytest.approx((q - 1 / q) ** 2)


def test_random_coefficients_are_not_eigenvalues(rng):
    params = ModelParams.random(3, "generic", rng)
    t = sp.TransferEigenvalue.from_coeffs(params, rng.standard_normal(3) + 1j * rng.standard_normal(3))
    assert t.residual > 1e-3


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_completeness(n):
    params = ModelParams.random(n, "massless", 40 + n)
    values = sp.solve_spectrum_oracle(params, 1)
    assert len(values) == 2**n
    assert sp._min_distance(values) > 1e-6
    assert max(v.residual for v in values) < 1e-9
    refined = [sp.refine_newton(params, v) for v in values]
    assert max(v.residual for v in refined) < 1e-12


def test_oracle_against_numpy_eigenvalues(massless4):
    params, values = massless4
    lam = 0.8 + 0.5j
    ref = np.linalg.eigvals(op.transfer_antiperiodic(params, lam))
    mine = np.array([t(lam) for t in values])
    for z in ref:
        assert np.min(np.abs(mine - z)) < 1e-9 * max(1.0, abs(z))


def test_spectrum_is_sorted_and_deterministic():
    params = ModelParams.random(3, "generic", 5)
    a = sp.compute_spectrum(params, 1)
    b = sp.compute_spectrum(params, 99)
    assert [t.fingerprint() for t in a] == sorted(t.fingerprint() for t in a)
    assert all(np.abs(x.coeffs - y.coeffs).max() < 1e-10 for x, y in zip(a, b))


def test_newton_fixed_point_and_reconvergence(massless4, rng):
    params, values = massless4
    t = values[3]
    assert np.array_equal(sp.refine_newton(params, t).coeffs, t.coeffs)
    kicked = sp.TransferEigenvalue.from_coeffs(params, t.coeffs + 1e-3 * rng.standard_normal(4))
    back = sp.refine_newton(params, kicked)
    dist = [np.abs(back.coeffs - v.coeffs).max() for v in values]
    assert int(np.argmin(dist)) == 3 and min(dist) < 1e-10


def test_newton_jacobian_finite_difference(rng):
    params = ModelParams.random(3, "generic", rng)
    c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    jac = sp.newton_jacobian(params, c)
    h = 1e-6
    for b in range(3):
        e = np.zeros(3)
        e[b] = h
        f1 = sp.discrete_system_residual(params, sp.TransferEigenvalue.from_coeffs(params, c + e))
        f0 = sp.discrete_system_residual(params, sp.TransferEigenvalue.from_coeffs(params, c - e))
        fd = (f1 - f0) / (2 * h)
        assert np.abs(fd - jac[:, b]).max() < 1e-6 * np.abs(jac).max()


def test_newton_multistart_finds_true_eigenvalues():
    params = ModelParams.random(2, "generic", 3)
    found = sp.newton_multistart(params, 100, 0)
    exact = sp.compute_spectrum(params, 0)
    assert found
    for t in found:
        assert min(np.abs(t.coeffs - s.coeffs).max() for s in exact) < 1e-8


def test_q_ratio_examples():
    q = 1.6
    params = ModelParams(1, q, [1.0])
    plus = sp.TransferEigenvalue.from_coeffs(params, [q - 1 / q])
    minus = sp.TransferEigenvalue.from_coeffs(params, [-(q - 1 / q)])
    r = sp.q_ratios(params, plus)
    assert r.q_table[0, 1] == pytest.approx(-1.0)
    assert sp.q_ratios(params, minus).q_table[0, 1] == pytest.approx(1.0)
    vec = sp.build_eigenstate(params, plus, "right")
    # eigenvector of (q - 1/q) sigma^x with eigenvalue +(q - 1/q)
    assert abs(vec[0] - vec[1]) < 1e-14 and abs(vec[0]) > 0
    vec = sp.build_eigenstate(params, minus, "right")
    assert abs(vec[0] + vec[1]) < 1e-14


def test_ratios_span_homogeneous_kernel(massless4):
    params, values = massless4
    t = values[0]
    r = sp.q_ratios(params, t)
    for a, e in enumerate(params.eta):
        mat = np.array([[t(e), -eval_d(params, e / params.q)], [-eval_a(params, e), t(e / params.q)]])
        vec = np.array([r.q_table[a, 0], r.q_table[a, 1]])
        assert np.abs(mat @ vec).max() < 1e-10 * np.abs(mat).max()
        assert r.qbar_table[a, 1] == pytest.approx(t(e) / eval_a(params, e))


@pytest.mark.parametrize("regime", ["massless", "massive", "generic"])
def test_eigenstates_verify(regime):
    params = ModelParams.random(3, regime, 6)
    for t in sp.compute_spectrum(params, 0):
        pair = sp.eigen_pair(params, t, 1)
        assert pair.verify_residual < 1e-9 and not pair.flagged


def test_left_wavefunction_recursion(massless4):
    from xxz_sov import sov

    params, values = massless4
    t = values[5]
    psi = sp.build_eigenstate(params, t, "left") @ sov.build_sov_basis(params, "right", "D").states.T
    m = sov.coupling_data(params).m_diag
    coords = psi / m
    for a, e in enumerate(params.eta):
        j = 0
        ratio = coords[j | (1 << a)] / coords[j]
        vw = [sov.vandermonde_weight(params, h) for h in sov.all_h(4)]
        om = [np.prod(sov.omega(params, sov.shifted_nodes(params, h))) for h in sov.all_h(4)]
        weight = (vw[1 << a] / om[1 << a]) / (vw[0] / om[0])
        assert ratio / weight == pytest.approx(t(e) / eval_a(params, e), rel=1e-9)


@pytest.mark.parametrize("side", ["left", "right"])
def test_baxter_wavefunction(massless4, side):
    params, values = massless4
    assert max(sp.baxter_wavefunction_residual(params, t, side) for t in values) < 1e-10


def test_normal_regime_reality():
    params = ModelParams.random(3, "massive", 2)
    lam = op.selfadjoint_locus_point(params, 0.6)
    factor = op.check_normality(params, lam).family_factor
    for t in sp.compute_spectrum(params, 0):
        assert abs((factor * t(lam)).imag) < 1e-9 * max(1.0, abs(t(lam)))


def test_tq_relation(massless4):
    params, values = massless4
    for t in values:
        rep = sp.tq_polynomial_check(params, t, 0)
        assert rep.nullity == 1 and not rep.degenerate
        assert rep.tq_residual < 1e-8
        finite = rep.bethe_residuals[np.isfinite(rep.bethe_residuals)]
        assert finite.size == 0 or finite.max() < 1e-6


def test_tq_negative_control(massless4):
    params, values = massless4
    rep = sp.tq_polynomial_check(params, sp.perturbed(params, values[0], 0.1), 0)
    assert rep.nullity == 0


def test_tq_odd_n_unsupported():
    params = ModelParams.random(3, "generic", 1)
    with pytest.raises(UnsupportedError):
        sp.tq_polynomial_check(params, sp.compute_spectrum(params, 0)[0])


def test_root_of_unity(rng):
    params = ModelParams.random(2, "generic", rng, q=np.exp(2j * np.pi / 3))
    assert sp.root_of_unity_order(params.q) == (3, 1)
    samples = random_points(rng, 10) ** 3
    for t in sp.compute_spectrum(params, 0):
        rep = sp.root_of_unity_check(params, t, samples)
        assert rep.max_rel_det < 1e-8 and rep.shift_invariance < 1e-8
        bad = sp.root_of_unity_check(params, sp.perturbed(params, t), samples)
        assert bad.max_rel_det > 1e4 * max(rep.max_rel_det, 1e-300)


def test_root_of_unity_requires_root():
    params = ModelParams.random(2, "generic", 1)
    assert sp.root_of_unity_order(params.q) is None
    with pytest.raises(UnsupportedError):
        sp.root_of_unity_check(params, sp.compute_spectrum(params, 0)[0], [1.0])


def test_spectrum_requires_sov():
    with pytest.raises(SovConditionError):
        sp.solve_spectrum_oracle(ModelParams(2, 2.0, [1.0, 2.0]))


def test_eigenvalue_serialization(massless4):
    _, values = massless4
    doc = values[0].to_dict()
    assert set(doc) == {"coeffs", "node_values", "residual"}
    assert len(doc["coeffs"]) == 4 and set(doc["node_values"][0]) == {"t_eta", "t_eta_over_q"}
    assert values[0].poly()(0.7 + 0.2j) == pytest.approx(values[0](0.7 + 0.2j))


def test_oracle_eigenvectors_are_eigenstates(massless4):
    params, values = massless4
    mat = op.transfer_antiperiodic(params, 1.1 - 0.3j)
    dec = oracle.eig(mat, 0)
    assert dec.backward_error < 1e-10
