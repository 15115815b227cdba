import numpy as np
import pytest

from xxz_sov import oracle
from xxz_sov.errors import SingularMatrixError


def _random(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def test_lu_identity_and_diagonal():
    assert oracle.lu_det(np.eye(4)) == pytest.approx(1.0)
    b = np.arange(4.0)
    assert np.allclose(oracle.lu_solve(np.eye(4), b), b)
    assert oracle.lu_det(np.diag([2.0, 3j])) == pytest.approx(6j)


def test_lu_factorization_and_solve(rng):
    a = _random(rng, 50)
    lu = oracle.lu_factor(a)
    pa = a[lu.pivots] if lu.pivots.ndim == 1 else lu.pivots @ a
    assert np.abs(pa - lu.lower @ lu.upper).max() < 1e-12 * np.abs(a).max()
    b = _random(rng, 50)[:, :3]
    x = oracle.lu_solve(a, b)
    assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) < 1e-11


def test_lu_det_against_numpy(rng):
    a, b = _random(rng, 12), _random(rng, 12)
    assert abs(oracle.lu_det(a) / np.linalg.det(a) - 1) < 1e-10
    assert abs(oracle.lu_det(a @ b) / (oracle.lu_det(a) * oracle.lu_det(b)) - 1) < 1e-9


def test_singular_solve_raises():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    assert oracle.lu_det(a) == pytest.approx(0.0)
    with pytest.raises(SingularMatrixError) as exc:
        oracle.lu_solve(a, np.ones(2))
    assert exc.value.index is not None


def test_eig_small_examples():
    dec = oracle.eig(np.diag([1.0, 2.0, 3.0]))
    assert np.allclose(np.sort(dec.eigenvalues.real), [1, 2, 3])
    dec = oracle.eig(np.array([[0, 1], [1, 0]], dtype=complex))
    assert np.allclose(np.sort(dec.eigenvalues.real), [-1, 1])
    for k in range(2):
        v = dec.eigenvectors[:, k]
        assert abs(abs(v[0]) - abs(v[1])) < 1e-12


@pytest.mark.parametrize("n", [5, 64])
def test_eig_random(rng, n):
    a = _random(rng, n)
    dec = oracle.eig(a, rng)
    assert dec.converged and dec.backward_error < 1e-10
    assert abs(dec.eigenvalues.sum() - np.trace(a)) < 1e-9 * np.abs(a).sum()
    ref = np.linalg.eigvals(a)
    for lam in dec.eigenvalues:
        assert np.min(np.abs(ref - lam)) < 1e-8 * max(1.0, abs(lam))
    if n <= 8:
        assert abs(np.prod(dec.eigenvalues) / oracle.lu_det(a) - 1) < 1e-8


def test_eig_normal_matrix_orthogonal(rng):
    h = _random(rng, 10)
    h = h + h.conj().T
    dec = oracle.eig(h, rng)
    v = dec.eigenvectors / np.linalg.norm(dec.eigenvectors, axis=0)
    assert np.abs(v.conj().T @ v - np.eye(10)).max() < 1e-8


def test_polynomial_roots():
    roots = oracle.polynomial_roots([-6.0, 11.0, -6.0, 1.0])
    assert np.allclose(np.sort(roots.real), [1, 2, 3]) and np.abs(roots.imag).max() < 1e-10


def test_null_space(rng):
    a = _random(rng, 6)[:, :4]
    v = rng.standard_normal(4)
    a[:, 3] = a[:, :3] @ v[:3]
    ns = oracle.null_space(a)
    assert ns.nullity == 1
    assert np.abs(a @ ns.vector).max() < 1e-12 * np.abs(a).max()
    assert oracle.null_space(_random(rng, 6)[:, :4]).nullity == 0


def test_pairings():
    e = np.eye(3)
    for i in range(3):
        for j in range(3):
            assert oracle.pairing(e[i], e[j]) == (i == j)
    v = np.array([1j, 0])
    assert oracle.pairing(v, v) == -1
    assert oracle.hermitian_pairing(v, v) == 1
    rng = np.random.default_rng(3)
    bra, ket = _random(rng, 4)[0], _random(rng, 4)[1]
    assert oracle.matrix_element(bra, np.eye(4), ket) == pytest.approx(oracle.pairing(bra, ket))
