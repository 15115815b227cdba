"""Spectrum of the antiperiodic transfer matrix from the discrete quadratic system.

An eigenvalue is t(lam) = sum_b c_b lam^(-N-1+2b), b = 1..N, and it is fixed by
t(eta_a) t(eta_a/q) = a(eta_a) d(eta_a/q) for a = 1..N.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import oracle, sov
from .errors import ConvergenceError, SingularMatrixError, UnsupportedError
from .laurent import LaurentPoly, fit_coefficients, transfer_exponents
from .operators import transfer_antiperiodic
from .params import ModelParams, eval_a, eval_d

log = logging.getLogger(__name__)


def _node_products(params: ModelParams) -> np.ndarray:
    """a(eta_a) d(eta_a/q) for each node."""
    return np.array([eval_a(params, e) * eval_d(params, e / params.q) for e in params.eta])


def _residual_scale(params: ModelParams) -> float:
    return max(1.0, float(np.abs(_node_products(params)).max()))


@dataclass(frozen=True)
class TransferEigenvalue:
    coeffs: np.ndarray
    node_values: np.ndarray  # shape (N, 2): t(eta_a), t(eta_a/q)
    residual: float  # max_a |t t - a d| / max(1, max_a |a d|)

    @classmethod
    def from_coeffs(cls, params: ModelParams, coeffs) -> "TransferEigenvalue":
        coeffs = np.asarray(coeffs, dtype=complex).copy()
        if coeffs.shape != (params.n_sites,):
            raise ValueError(f"expected {params.n_sites} coefficients")
        exps = transfer_exponents(params.n_sites)
        nodes = np.stack([params.eta, params.eta / params.q], axis=1)
        vals = (nodes[..., None] ** exps * coeffs).sum(axis=-1)
        res = vals[:, 0] * vals[:, 1] - _node_products(params)
        coeffs.flags.writeable = False
        vals.flags.writeable = False
        return cls(coeffs, vals, float(np.abs(res).max() / _residual_scale(params)))

    @property
    def n_sites(self) -> int:
        return self.coeffs.size

    def __call__(self, lam):
        exps = transfer_exponents(self.n_sites)
        lam = np.asarray(lam, dtype=complex)
        out = (lam[..., None] ** exps * self.coeffs).sum(axis=-1)
        return complex(out) if out.ndim == 0 else out

    def derivative(self, lam) -> complex:
        exps = transfer_exponents(self.n_sites)
        return complex(np.sum(exps * self.coeffs * lam ** (exps - 1.0)))

    def poly(self) -> LaurentPoly:
        exps = transfer_exponents(self.n_sites)
        parity = "odd" if self.n_sites % 2 == 0 else "even"
        return LaurentPoly(dict(zip(exps.tolist(), self.coeffs)), parity)

    def fingerprint(self, digits: int = 9) -> tuple:
        """Sort key: node values t(eta_a), lexicographic on (re, im)."""
        v = self.node_values[:, 0]
        return tuple(x for z in v for x in (round(z.real, digits), round(z.imag, digits)))

    def label(self) -> str:
        return "t[" + ",".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in self.node_values[:, 0]) + "]"

    def to_dict(self) -> dict:
        from .params import complex_to_json

        return {
            "coeffs": [complex_to_json(c) for c in self.coeffs],
            "node_values": [
                {"t_eta": complex_to_json(a), "t_eta_over_q": complex_to_json(b)} for a, b in self.node_values
            ],
            "residual": self.residual,
        }


def discrete_system_residual(params: ModelParams, t: TransferEigenvalue) -> np.ndarray:
    """residual_a = t(eta_a) t(eta_a/q) - a(eta_a) d(eta_a/q) (unscaled)."""
    return t.node_values[:, 0] * t.node_values[:, 1] - _node_products(params)


def sort_spectrum(values) -> list:
    return sorted(values, key=lambda t: t.fingerprint())


def _random_lambda0(params: ModelParams, rng) -> complex:
    bad = np.concatenate([params.eta, params.eta / params.q])
    while True:
        lam = rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        if np.all(np.abs(lam - bad) > 1e-2 * np.abs(bad)):
            return complex(lam)


def solve_spectrum_oracle(params: ModelParams, rng=None, retries: int = 6) -> list:
    """All 2^N eigenvalues from one dense eigendecomposition of Tbar(lam0)."""
    sov._require_sov(params)
    rng = np.random.default_rng(rng)
    exps = transfer_exponents(params.n_sites)
    nodes_t = [transfer_antiperiodic(params, e) for e in params.eta]
    nodes_tq = [transfer_antiperiodic(params, e / params.q) for e in params.eta]
    last_reason = ""
    for attempt in range(retries):
        lam0 = _random_lambda0(params, rng)
        dec = oracle.eig(transfer_antiperiodic(params, lam0), rng=rng.integers(2**31))
        if not dec.converged or dec.backward_error > 1e-9:
            last_reason = f"eigensolver backward error {dec.backward_error:.2e}"
            continue
        ev = dec.eigenvalues
        gaps = np.abs(ev[:, None] - ev[None, :])
        np.fill_diagonal(gaps, np.inf)
        if ev.size > 1 and gaps.min() < 1e-8 * max(1.0, np.abs(ev).max()):
            last_reason = "degenerate spectrum at lam0"
            continue
        vecs = dec.eigenvectors
        norms = np.einsum("ij,ij->j", vecs.conj(), vecs)

        def rayleigh(mats):
            return np.array([np.einsum("ij,ij->j", vecs.conj(), m @ vecs) / norms for m in mats]).T

        t_eta, t_eta_q = rayleigh(nodes_t), rayleigh(nodes_tq)
        coeffs = fit_coefficients(params.eta, t_eta.T, exps).T
        values = [TransferEigenvalue.from_coeffs(params, c) for c in coeffs]
        if _min_distance(values) < 1e-6:
            last_reason = "coincident coefficient vectors"
            continue
        # consistency of the second node set with the fitted polynomial
        drift = max(np.abs(v.node_values[:, 1] - tq).max() for v, tq in zip(values, t_eta_q))
        if drift > 1e-7 * _residual_scale(params):
            last_reason = f"inconsistent node values ({drift:.2e})"
            continue
        log.debug("oracle spectrum found on attempt %d at lam0=%s", attempt + 1, lam0)
        return sort_spectrum(values)
    raise ConvergenceError(f"oracle spectrum failed after {retries} attempts: {last_reason}")


def _min_distance(values) -> float:
    if len(values) < 2:
        return np.inf
    c = np.array([v.coeffs for v in values])
    d = np.sqrt((np.abs(c[:, None, :] - c[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    return float(d.min())


def newton_jacobian(params: ModelParams, coeffs) -> np.ndarray:
    """dF_a/dc_b = eta_a^e_b t(eta_a/q) + (eta_a/q)^e_b t(eta_a)."""
    t = TransferEigenvalue.from_coeffs(params, coeffs)
    exps = transfer_exponents(params.n_sites)
    eta, q = params.eta, params.q
    return eta[:, None] ** exps * t.node_values[:, 1:2] + (eta / q)[:, None] ** exps * t.node_values[:, 0:1]


def refine_newton(params: ModelParams, t0: TransferEigenvalue, tol: float = 1e-12, max_iter: int = 50):
    """Newton iteration on the discrete system, starting from t0."""
    c = np.array(t0.coeffs, dtype=complex)
    t = TransferEigenvalue.from_coeffs(params, c)
    scale = _residual_scale(params)
    for _ in range(max_iter):
        if t.residual < tol:
            return t
        f = discrete_system_residual(params, t)
        try:
            step = oracle.lu_solve(newton_jacobian(params, c), f)
        except SingularMatrixError as exc:
            raise ConvergenceError("singular Jacobian in Newton refinement") from exc
        c = c - step
        t_new = TransferEigenvalue.from_coeffs(params, c)
        if not np.isfinite(t_new.residual) or t_new.residual > 1e12 * scale:
            raise ConvergenceError("Newton refinement diverged")
        if np.abs(step).max() < 1e-15 * max(1.0, np.abs(c).max()):
            return t_new
        t = t_new
    if t.residual < 10 * tol:
        return t
    raise ConvergenceError(f"Newton refinement stalled at residual {t.residual:.2e}")


def newton_multistart(params: ModelParams, n_starts: int = 200, rng=None) -> list:
    """Demonstration solver: Newton from random starts, distinct solutions kept.

    No completeness claim is attached to this path.
    """
    rng = np.random.default_rng(rng)
    found = []
    scale = np.sqrt(_residual_scale(params))
    for _ in range(n_starts):
        c0 = scale * (rng.standard_normal(params.n_sites) + 1j * rng.standard_normal(params.n_sites))
        try:
            t = refine_newton(params, TransferEigenvalue.from_coeffs(params, c0), max_iter=80)
        except ConvergenceError:
            continue
        if all(np.abs(t.coeffs - s.coeffs).max() > 1e-6 for s in found):
            found.append(t)
        if len(found) == params.dim:
            break
    return sort_spectrum(found)


def compute_spectrum(params: ModelParams, rng=None, tol: float = 1e-12) -> list:
    """Oracle spectrum with every eigenvalue polished by Newton."""
    return sort_spectrum(refine_newton(params, t, tol) for t in solve_spectrum_oracle(params, rng))


# ---------------------------------------------------------------------------
# Q-ratios and eigenstates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QRatios:
    """Tables indexed [a, h] holding Q(eta_a q^-h) and Qbar(eta_a q^-h)."""

    q_table: np.ndarray
    qbar_table: np.ndarray

    def rescaled(self, rho=None, rhobar=None) -> "QRatios":
        """Multiply node a of Q (Qbar) by rho_a (rhobar_a); ratios are unchanged."""
        qt, qb = self.q_table, self.qbar_table
        if rho is not None:
            qt = qt * np.asarray(rho)[:, None]
        if rhobar is not None:
            qb = qb * np.asarray(rhobar)[:, None]
        return QRatios(qt, qb)


def q_ratios(params: ModelParams, t: TransferEigenvalue) -> QRatios:
    eta, q = params.eta, params.q
    d_nodes = np.array([eval_d(params, e / q) for e in eta])
    a_nodes = np.array([eval_a(params, e) for e in eta])
    assert np.all(d_nodes != 0) and np.all(a_nodes != 0)
    ones = np.ones(params.n_sites, dtype=complex)
    qt = np.stack([ones, t.node_values[:, 0] / d_nodes], axis=1)
    qb = np.stack([ones, t.node_values[:, 0] / a_nodes], axis=1)
    return QRatios(qt, qb)


def build_eigenstate(params: ModelParams, t: TransferEigenvalue, side="right", ratios: QRatios = None):
    """Right eigenvector (from Q and right D-states) or left covector (Qbar, left D-states)."""
    ratios = ratios or q_ratios(params, t)
    side = sov.Side(side)
    basis = sov.build_sov_basis(params, side, "D")
    table = ratios.q_table if side is sov.Side.RIGHT else ratios.qbar_table
    return sov.sov_coordinates(params, table) @ basis.states


def _norm(v) -> float:
    return float(np.sqrt(np.sum(np.abs(v) ** 2)))


@dataclass(frozen=True)
class EigenPair:
    value: TransferEigenvalue
    right_state: np.ndarray
    left_state: np.ndarray
    verify_residual: float
    ratios: QRatios = field(repr=False, default=None)

    @property
    def flagged(self) -> bool:
        return not self.verify_residual < 1e-9


def eigen_pair(params: ModelParams, t: TransferEigenvalue, rng=None, n_samples: int = 5, ratios=None) -> EigenPair:
    """Assemble both eigenstates and verify them densely at random lam."""
    rng = np.random.default_rng(rng)
    ratios = ratios or q_ratios(params, t)
    right = build_eigenstate(params, t, "right", ratios)
    left = build_eigenstate(params, t, "left", ratios)
    resid = 0.0
    for _ in range(n_samples):
        lam = rng.uniform(0.6, 1.6) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        tb = transfer_antiperiodic(params, lam)
        tl = t(lam)
        resid = max(
            resid,
            _norm(tb @ right - tl * right) / _norm(right),
            _norm(left @ tb - tl * left) / _norm(left),
        )
    return EigenPair(t, right, left, resid, ratios)


def baxter_wavefunction_residual(params: ModelParams, t: TransferEigenvalue, side="left") -> float:
    """Check t(x) Psi(h) = c+(x) Psi(h + e_n) + c-(x) Psi(h - e_n), x = eta_n q^-h_n.

    Psi is the dense pairing of the eigenstate with the opposite SOV basis;
    (c+(x), c-(x)) = (a(x), d(x)) for the left wavefunction <t|h> and
    (d(x/q), a(q x)) for the right wavefunction <h|t>.
    """
    side = sov.Side(side)
    n, q, eta = params.n_sites, params.q, params.eta
    if side is sov.Side.LEFT:
        psi = build_eigenstate(params, t, "left") @ sov.build_sov_basis(params, "right", "D").states.T
        plus, minus = eval_a, eval_d
    else:
        psi = sov.build_sov_basis(params, "left", "D").states @ build_eigenstate(params, t, "right")
        def plus(p, x):
            return eval_d(p, x / p.q)

        def minus(p, x):
            return eval_a(p, x * p.q)

    scale = np.abs(psi).max() * max(1.0, np.abs(t.node_values).max(), np.sqrt(_residual_scale(params)))
    worst = 0.0
    for j, h in enumerate(sov.all_h(n)):
        for a in range(n):
            x = eta[a] * q ** (-h[a])
            rhs = 0j
            if h[a] == 0:
                rhs += plus(params, x) * psi[j | (1 << a)]
            else:
                rhs += minus(params, x) * psi[j & ~(1 << a)]
            worst = max(worst, abs(t(x) * psi[j] - rhs))
    return worst / scale


# ---------------------------------------------------------------------------
# TQ relation and Bethe equations (even N)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TQReport:
    q_poly: LaurentPoly
    nullity: int
    rdiag: np.ndarray
    tq_residual: float
    roots: np.ndarray
    bethe_residuals: np.ndarray  # NaN where a root collides with a pole
    degenerate: bool


def _sample_points(rng, count):
    return rng.uniform(0.6, 1.6, count) * np.exp(1j * rng.uniform(0, 2 * np.pi, count))


def tq_polynomial_check(params: ModelParams, t: TransferEigenvalue, rng=None, null_rtol: float = 1e-9) -> TQReport:
    """Solve t(l) Q(l) = a(l) Q(l/q) + d(l) Q(l q) for Q(l) = l^(-N/2) sum_k p_k l^k."""
    n = params.n_sites
    if n % 2:
        raise UnsupportedError("the polynomial TQ check is only defined for even N")
    rng = np.random.default_rng(rng)
    q = params.q
    exps = np.arange(n + 1) - n // 2

    def rows(points):
        out = []
        for lam in points:
            r = t(lam) * lam**exps - eval_a(params, lam) * (lam / q) ** exps - eval_d(params, lam) * (lam * q) ** exps
            out.append(r)
        return np.array(out)

    sys_mat = rows(_sample_points(rng, 2 * n + 2))
    sys_mat /= np.abs(sys_mat).max(axis=1, keepdims=True)
    ns = oracle.null_space(sys_mat, null_rtol)
    p = ns.vector
    poly = LaurentPoly(dict(zip(exps.tolist(), p)))

    fresh = _sample_points(rng, 2 * n + 2)
    worst = 0.0
    for lam in fresh:
        terms = (t(lam) * poly(lam), eval_a(params, lam) * poly(lam / q), eval_d(params, lam) * poly(lam * q))
        worst = max(worst, abs(terms[0] - terms[1] - terms[2]) / sum(abs(x) for x in terms))

    roots = oracle.polynomial_roots(p)
    bethe = np.full(roots.size, np.nan)
    eta = params.eta
    for k, lk in enumerate(roots):
        others = np.delete(roots, k)
        if (
            np.min(np.abs(lk**2 - eta**2)) < 1e-6
            or np.min(np.abs(lk / q - roots)) < 1e-6
            or (others.size and np.min(np.abs(others - lk)) < 1e-6)
        ):
            continue
        lhs = np.prod((q**2 * lk**2 - eta**2) / (lk**2 - eta**2))
        rhs = np.prod((q * lk - roots) / (lk / q - roots))
        bethe[k] = abs(lhs - rhs) / max(1.0, abs(lhs))
    return TQReport(poly, ns.nullity, ns.rdiag, float(worst), roots, bethe, ns.nullity != 1)


# ---------------------------------------------------------------------------
# Root of unity
# ---------------------------------------------------------------------------


def root_of_unity_order(q, max_p: int = 64):
    """(p, p') with q = exp(2 pi i p'/p), gcd(p, p') = 1, or None."""
    for p in range(2, max_p + 1):
        if abs(q**p - 1) < 1e-12:
            pp = int(round(np.angle(q) * p / (2 * np.pi))) % p
            return p, pp
    return None


def functional_matrix(params: ModelParams, t, lam, p: int, p_prime: int) -> np.ndarray:
    """Cyclic p x p matrix with t(q^i lam) on the diagonal.

    Row i has -d(q^i lam) at column i+1 and -a(q^i lam) at column i-1; the two
    wrap-around entries carry (-1)^(p' N) from the monodromy of lam^(-N/2).
    """
    q = params.q
    twist = (-1) ** ((p_prime * params.n_sites) % 2)
    mat = np.zeros((p, p), dtype=complex)
    for i in range(p):
        x = q**i * lam
        mat[i, i] += t(x)
        mat[i, (i + 1) % p] += -eval_d(params, x) * (twist if i == p - 1 else 1)
        mat[i, (i - 1) % p] += -eval_a(params, x) * (twist if i == 0 else 1)
    return mat


@dataclass(frozen=True)
class RootOfUnityReport:
    p: int
    p_prime: int
    max_abs_det: float
    max_rel_det: float  # |det| / Hadamard bound
    shift_invariance: float


def root_of_unity_check(params: ModelParams, t, samples) -> RootOfUnityReport:
    order = root_of_unity_order(params.q)
    if order is None:
        raise UnsupportedError("q is not a root of unity of order <= 64")
    p, pp = order
    if p < 2:
        raise ValueError("root-of-unity order must be at least 2")
    max_abs = max_rel = shift = 0.0
    for big in samples:
        lam = complex(big) ** (1.0 / p)
        m = functional_matrix(params, t, lam, p, pp)
        hadamard = float(np.prod(np.sqrt(np.sum(np.abs(m) ** 2, axis=1))))
        det = oracle.lu_det(m)
        det_shift = oracle.lu_det(functional_matrix(params, t, params.q * lam, p, pp))
        max_abs = max(max_abs, abs(det))
        max_rel = max(max_rel, abs(det) / hadamard)
        shift = max(shift, abs(det - det_shift) / hadamard)
    return RootOfUnityReport(p, pp, max_abs, max_rel, shift)


def perturbed(params: ModelParams, t: TransferEigenvalue, delta: complex = 1e-2) -> TransferEigenvalue:
    """Negative control: every coefficient shifted by delta."""
    return TransferEigenvalue.from_coeffs(params, t.coeffs + delta)


def with_coeffs(t: TransferEigenvalue, coeffs) -> TransferEigenvalue:
    return replace(t, coeffs=np.asarray(coeffs, dtype=complex))
