"""Self-contained dense complex linear algebra.

Everything here is written against plain numpy array arithmetic so that it can
serve as an independent reference for the closed formulas elsewhere in the
package.  ``numpy.linalg`` is deliberately not used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, SingularMatrixError

EPS = np.finfo(float).eps


def _as_square(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


# ---------------------------------------------------------------------------
# LU with partial pivoting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LUFactorization:
    """P A = L U with unit-diagonal L packed below U."""

    factors: np.ndarray
    pivots: np.ndarray  # row permutation: row i of PA is row pivots[i] of A
    sign: int
    scale: float  # max-abs entry of A, used for the pivot threshold

    @property
    def n(self) -> int:
        return self.factors.shape[0]

    @property
    def lower(self) -> np.ndarray:
        return np.tril(self.factors, -1) + np.eye(self.n)

    @property
    def upper(self) -> np.ndarray:
        return np.triu(self.factors)

    def det(self) -> complex:
        return self.sign * complex(np.prod(np.diag(self.factors)))

    def min_pivot(self):
        d = np.abs(np.diag(self.factors))
        i = int(np.argmin(d)) if d.size else 0
        return i, (float(d[i]) if d.size else np.inf)

    def solve(self, b, rtol: float = 1e2 * EPS) -> np.ndarray:
        b = np.array(b, dtype=complex)
        vector = b.ndim == 1
        x = b.reshape(self.n, -1)[self.pivots].copy()
        i, piv = self.min_pivot()
        threshold = rtol * self.scale * max(self.n, 1)
        if piv <= threshold:
            raise SingularMatrixError(i, piv, threshold)
        lu = self.factors
        for k in range(self.n):
            x[k + 1 :] -= np.outer(lu[k + 1 :, k], x[k])
        for k in range(self.n - 1, -1, -1):
            x[k] /= lu[k, k]
            x[:k] -= np.outer(lu[:k, k], x[k])
        return x[:, 0] if vector else x


def lu_factor(a) -> LUFactorization:
    lu = _as_square(a).copy()
    n = lu.shape[0]
    piv = np.arange(n)
    sign = 1
    scale = float(np.abs(lu).max()) if n else 0.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            piv[[k, p]] = piv[[p, k]]
            sign = -sign
        if lu[k, k] == 0:
            continue  # exactly singular column; det is 0, solve will refuse
        lu[k + 1 :, k] /= lu[k, k]
        lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return LUFactorization(lu, piv, sign, scale)


def lu_det(a) -> complex:
    return lu_factor(a).det()


def lu_solve(a, b, rtol: float = 1e2 * EPS) -> np.ndarray:
    return lu_factor(a).solve(b, rtol)


def cond_estimate(a) -> float:
    """1-norm condition number, computed from an explicit LU inverse (small n)."""
    a = _as_square(a)
    try:
        inv = lu_solve(a, np.eye(a.shape[0]))
    except SingularMatrixError:
        return np.inf
    return float(np.abs(a).sum(axis=0).max() * np.abs(inv).sum(axis=0).max())


# ---------------------------------------------------------------------------
# Eigenvalues: Householder Hessenberg reduction + shifted complex QR
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, unit 2-norm
    backward_error: float
    converged: bool = True


def hessenberg(a):
    """Return (H, Q) with A = Q H Q^H, Q unitary."""
    h = _as_square(a).copy()
    n = h.shape[0]
    qmat = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = h[k + 1 :, k]
        alpha = np.sqrt(np.vdot(x, x).real)
        if alpha == 0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.sqrt(np.vdot(v, v).real)
        h[k + 1 :, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1 :, k:])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v.conj())
        qmat[:, k + 1 :] -= 2.0 * np.outer(qmat[:, k + 1 :] @ v, v.conj())
        h[k + 2 :, k] = 0
    return h, qmat


def _wilkinson_shift(a, b, c, d):
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    m1, m2 = 0.5 * (a + d) + disc, 0.5 * (a + d) - disc
    return m1 if abs(m1 - d) < abs(m2 - d) else m2


def _qr_step(w, mu):
    """One explicit shifted QR step on the (square, Hessenberg) view w, in place."""
    m = w.shape[0]
    idx = np.arange(m)
    w[idx, idx] -= mu
    rots = []
    for k in range(m - 1):
        a, b = w[k, k], w[k + 1, k]
        r = np.hypot(abs(a), abs(b))
        if r == 0:
            c, s = 1.0 + 0j, 0j
        else:
            c, s = a / r, b / r
        g = np.array([[np.conj(c), np.conj(s)], [-s, c]])
        w[k : k + 2, k:] = g @ w[k : k + 2, k:]
        rots.append(g)
    for k, g in enumerate(rots):
        w[: k + 2, k : k + 2] = w[: k + 2, k : k + 2] @ g.conj().T
    w[idx, idx] += mu


def hessenberg_eigenvalues(h, max_sweeps_per_eig: int = 60):
    """Eigenvalues of an upper Hessenberg matrix.  Returns (values, converged)."""
    h = np.array(h, dtype=complex)
    n = h.shape[0]
    hi = n - 1
    its = 0
    total_cap = max_sweeps_per_eig * max(n, 1)
    sweeps = 0
    while hi > 0:
        lo = hi
        while lo > 0:
            sub = abs(h[lo, lo - 1])
            if sub <= EPS * (abs(h[lo, lo]) + abs(h[lo - 1, lo - 1])) or sub < 1e-300:
                h[lo, lo - 1] = 0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            its = 0
            continue
        if sweeps >= total_cap:
            return np.diag(h).copy(), False
        its += 1
        sweeps += 1
        if its % 11 == 0:
            # exceptional shift to break cycles
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1]) * np.exp(0.7j * its)
        else:
            mu = _wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        _qr_step(h[lo : hi + 1, lo : hi + 1], mu)
    return np.diag(h).copy(), True


def _hessenberg_shifted_solve(h, mu, rhs):
    """Solve (H - mu I) y = rhs for upper Hessenberg H in O(n^2)."""
    n = h.shape[0]
    u = h.copy()
    u[np.arange(n), np.arange(n)] -= mu
    y = rhs.astype(complex).copy()
    floor = EPS * max(np.abs(h).max(), 1e-300)
    for k in range(n - 1):
        if abs(u[k + 1, k]) > abs(u[k, k]):
            u[[k, k + 1], k:] = u[[k + 1, k], k:]
            y[[k, k + 1]] = y[[k + 1, k]]
        if u[k, k] == 0:
            u[k, k] = floor
        f = u[k + 1, k] / u[k, k]
        u[k + 1, k:] -= f * u[k, k:]
        y[k + 1] -= f * y[k]
    if u[n - 1, n - 1] == 0:
        u[n - 1, n - 1] = floor
    for k in range(n - 1, -1, -1):
        y[k] = (y[k] - u[k, k + 1 :] @ y[k + 1 :]) / u[k, k]
    return y


def eig(a, rng=0) -> EigenDecomposition:
    """Eigen-decomposition of a dense complex matrix.

    Eigenvalues from shifted QR on the Hessenberg form, eigenvectors from
    inverse iteration on the same Hessenberg matrix, back-transformed.
    """
    a = _as_square(a)
    n = a.shape[0]
    if n == 0:
        return EigenDecomposition(np.zeros(0, complex), np.zeros((0, 0), complex), 0.0)
    h, qmat = hessenberg(a)
    values, converged = hessenberg_eigenvalues(h)
    norm_h = max(np.abs(h).max(), 1e-300)
    gen = np.random.default_rng(rng)
    vecs = np.zeros((n, n), dtype=complex)
    for i, lam in enumerate(values):
        mu = lam + 64 * EPS * norm_h * (1 + 1j)
        y = gen.standard_normal(n) + 1j * gen.standard_normal(n)
        for _ in range(4):
            y = _hessenberg_shifted_solve(h, mu, y)
            y /= np.sqrt(np.vdot(y, y).real)
            if np.abs(h @ y - lam * y).max() <= 1e3 * EPS * norm_h:
                break
        vecs[:, i] = qmat @ y
    resid = np.abs(a @ vecs - vecs * values[None, :]).max(axis=0)
    scale = max(np.abs(a).max(), 1e-300)
    return EigenDecomposition(values, vecs, float(resid.max() / scale), converged)


def polynomial_roots(coeffs_low_to_high) -> np.ndarray:
    """Roots of sum_k c_k x^k from the eigenvalues of the companion matrix."""
    c = np.trim_zeros(np.asarray(coeffs_low_to_high, dtype=complex), "b")
    deg = c.size - 1
    if deg < 1:
        return np.zeros(0, complex)
    comp = np.zeros((deg, deg), dtype=complex)
    comp[1:, :-1] = np.eye(deg - 1)
    comp[:, -1] = -c[:-1] / c[-1]
    values, ok = hessenberg_eigenvalues(comp)
    if not ok:
        raise ConvergenceError("companion eigenvalues did not converge")
    return values


# ---------------------------------------------------------------------------
# Null space by column-pivoted Householder QR
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NullSpace:
    vector: np.ndarray  # best null vector, unit 2-norm
    rdiag: np.ndarray  # |R_kk| in pivot order, relative to |R_00|
    nullity: int


def null_space(a, rtol: float = 1e-9) -> NullSpace:
    """Numerical null space of a matrix via Householder QR with column pivoting."""
    a = np.array(a, dtype=complex)
    m, n = a.shape
    r = np.zeros((max(m, n), n), dtype=complex)
    r[:m] = a
    perm = np.arange(n)
    for k in range(n):
        norms = np.sum(np.abs(r[k:, k:]) ** 2, axis=0)
        p = k + int(np.argmax(norms))
        if p != k:
            r[:, [k, p]] = r[:, [p, k]]
            perm[[k, p]] = perm[[p, k]]
        x = r[k:, k]
        alpha = np.sqrt(np.vdot(x, x).real)
        if alpha == 0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.sqrt(np.vdot(v, v).real)
        r[k:, k:] -= 2.0 * np.outer(v, v.conj() @ r[k:, k:])
    diag = np.abs(np.diag(r[:n]))
    rel = diag / diag[0] if diag[0] > 0 else diag
    nullity = int(np.count_nonzero(rel <= rtol))
    # null vector attached to the last pivot column: R11 x1 = -r12
    x = np.zeros(n, dtype=complex)
    x[n - 1] = 1.0
    for i in range(n - 2, -1, -1):
        x[i] = (-r[i, n - 1] - r[i, i + 1 : n - 1] @ x[i + 1 : n - 1]) / r[i, i]
    out = np.zeros(n, dtype=complex)
    out[perm] = x
    out /= np.sqrt(np.vdot(out, out).real)
    return NullSpace(out, rel, nullity)


# ---------------------------------------------------------------------------
# Pairings
# ---------------------------------------------------------------------------


def _check_dims(*shapes):
    if len(set(shapes)) != 1:
        raise ValueError(f"dimension mismatch: {shapes}")


def pairing(bra, ket) -> complex:
    """Bilinear pairing <bra|ket> without complex conjugation."""
    bra, ket = np.asarray(bra), np.asarray(ket)
    _check_dims(bra.shape[-1], ket.shape[0])
    return complex(bra @ ket)


def hermitian_pairing(u, v) -> complex:
    """Sesquilinear form conj(u) . v."""
    u, v = np.asarray(u), np.asarray(v)
    _check_dims(u.shape[0], v.shape[0])
    return complex(np.vdot(u, v))


def matrix_element(bra, op, ket) -> complex:
    bra, op, ket = np.asarray(bra), np.asarray(op), np.asarray(ket)
    _check_dims(bra.shape[-1], op.shape[0])
    _check_dims(op.shape[1], ket.shape[0])
    return complex(bra @ (op @ ket))
