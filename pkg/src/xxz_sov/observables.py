"""Separate states, scalar products, form factors and local-operator reconstruction."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import oracle, sov
from .errors import SingularMatrixError
from .operators import (
    SIGMA,
    embed_site,
    monodromy,
    site_matrix,
    transfer_antiperiodic,
    transfer_periodic,
)
from .params import ModelParams, eval_a, eval_d
from .spectrum import QRatios, TransferEigenvalue, build_eigenstate, q_ratios


@dataclass(frozen=True)
class SeparateState:
    """Per-node values alpha_a(eta_a q^-h), stored as an (N, 2) table."""

    side: sov.Side
    coeff_table: np.ndarray

    def __post_init__(self):
        table = np.array(self.coeff_table, dtype=complex)
        if table.ndim != 2 or table.shape[1] != 2:
            raise ValueError("coefficient table must have shape (N, 2)")
        if not np.all(np.isfinite(table)):
            raise ValueError("coefficient table must be finite")
        table.flags.writeable = False
        object.__setattr__(self, "side", sov.Side(self.side))
        object.__setattr__(self, "coeff_table", table)

    @classmethod
    def random(cls, params: ModelParams, side, rng) -> "SeparateState":
        shape = (params.n_sites, 2)
        return cls(side, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    @classmethod
    def delta(cls, params: ModelParams, side, h) -> "SeparateState":
        table = np.zeros((params.n_sites, 2), dtype=complex)
        table[np.arange(params.n_sites), np.asarray(h)] = 1.0
        return cls(side, table)

    @classmethod
    def eigenstate(cls, side, ratios: QRatios) -> "SeparateState":
        side = sov.Side(side)
        return cls(side, ratios.q_table if side is sov.Side.RIGHT else ratios.qbar_table)

    def assemble(self, params: ModelParams) -> np.ndarray:
        basis = sov.build_sov_basis(params, self.side, "D")
        return sov.sov_coordinates(params, self.coeff_table) @ basis.states


def scalar_product_matrix(params: ModelParams, alpha: SeparateState, beta: SeparateState) -> np.ndarray:
    """M_ab = eta_a^(2(b-1)) sum_h alpha_a beta_a q^(-2(b-1)h) / omega(eta_a q^-h)."""
    if alpha.coeff_table.shape != (params.n_sites, 2) or beta.coeff_table.shape != alpha.coeff_table.shape:
        raise ValueError("separate states do not match the parameters")
    return _phi(params, alpha.coeff_table, beta.coeff_table, 0.0, params.n_sites)


def scalar_product(params: ModelParams, alpha: SeparateState, beta: SeparateState) -> complex:
    """<alpha|beta> as an N x N determinant."""
    return oracle.lu_det(scalar_product_matrix(params, alpha, beta))


def dense_pairing(params: ModelParams, alpha: SeparateState, beta: SeparateState) -> complex:
    return oracle.pairing(alpha.assemble(params), beta.assemble(params))


def _phi(params: ModelParams, left_table, right_table, shift: float, n_cols: int) -> np.ndarray:
    eta, q = params.eta, params.q
    e = 2 * np.arange(n_cols) + 2 * shift  # 2(b-1) + 2 shift
    out = np.zeros((params.n_sites, n_cols), dtype=complex)
    for h in (0, 1):
        x = eta * q ** (-h)
        w = left_table[:, h] * right_table[:, h] / sov.omega(params, x)
        out += w[:, None] * (eta[:, None] ** e) * q ** (-e * h)
    return out


def phi_matrix(params: ModelParams, ratios_t: QRatios, ratios_tp: QRatios, shift: float = 0.0, n_cols=None):
    """Phi_{a, b+shift} built from Qbar of t (left) and Q of t' (right)."""
    if shift not in (0, 0.5, -0.5):
        raise ValueError("shift must be 0 or +-1/2")
    n_cols = params.n_sites if n_cols is None else n_cols
    return _phi(params, ratios_t.qbar_table, ratios_tp.q_table, shift, n_cols)


def _prefactor(params: ModelParams, t: TransferEigenvalue, tp: TransferEigenvalue, n: int) -> complex:
    """prod_{h<n} t(eta_h) prod_{h<=n} t'(eta_h/q) / prod_{h<=n} a(eta_h) d(eta_h/q)."""
    eta, q = params.eta, params.q
    num = np.prod([t(eta[h]) for h in range(n - 1)]) * np.prod([tp(eta[h] / q) for h in range(n)])
    den = np.prod([eval_a(params, eta[h]) * eval_d(params, eta[h] / q) for h in range(n)])
    if den == 0:
        raise ArithmeticError("prefactor pole; the SOV condition must be violated")
    return complex(num / den)


def _check_site(params: ModelParams, n: int):
    if not 1 <= n <= params.n_sites:
        raise ValueError(f"site {n} outside 1..{params.n_sites}")


def sigma_minus_matrix(params, t, tp, n, ratios_t=None, ratios_tp=None) -> np.ndarray:
    """(N+1) x (N+1) matrix: Phi rows with column exponent 2(b-1)-1, last row eta_n^(2(b-1)-N)."""
    _check_site(params, n)
    ratios_t = ratios_t or q_ratios(params, t)
    ratios_tp = ratios_tp or q_ratios(params, tp)
    nn = params.n_sites
    s = np.zeros((nn + 1, nn + 1), dtype=complex)
    s[:nn] = phi_matrix(params, ratios_t, ratios_tp, -0.5, nn + 1)
    s[nn] = params.eta[n - 1] ** (2 * np.arange(nn + 1) - nn)
    return s


def form_factor_sigma_minus(params, t, tp, n, ratios_t=None, ratios_tp=None) -> complex:
    """<t| sigma^-_n |t'> as prefactor times an (N+1) x (N+1) determinant."""
    s = sigma_minus_matrix(params, t, tp, n, ratios_t, ratios_tp)
    return _prefactor(params, t, tp, n) * oracle.lu_det(s)


def sigma_z_matrix(params, t, tp, n, ratios_t=None, ratios_tp=None) -> np.ndarray:
    """Bordered matrix: Phi block, last row eta_n^(2b-1-N), border column, corner t(eta_n)/2."""
    _check_site(params, n)
    ratios_t = ratios_t or q_ratios(params, t)
    ratios_tp = ratios_tp or q_ratios(params, tp)
    nn, eta, q = params.n_sites, params.eta, params.q
    s = np.zeros((nn + 1, nn + 1), dtype=complex)
    s[:nn, :nn] = phi_matrix(params, ratios_t, ratios_tp, 0.0, nn)
    s[nn, :nn] = eta[n - 1] ** (2 * np.arange(nn) + 1 - nn)
    x = eta / q
    d_x = np.array([eval_d(params, v) for v in x])
    s[:nn, nn] = ratios_tp.q_table[:, 1] * ratios_t.qbar_table[:, 0] * x ** (nn - 1) * d_x / sov.omega(params, x)
    s[nn, nn] = t(eta[n - 1]) / 2
    return s


def form_factor_sigma_z(params, t, tp, n, ratios_t=None, ratios_tp=None) -> complex:
    """<t| sigma^z_n |t'> as -2 times prefactor times a bordered determinant."""
    s = sigma_z_matrix(params, t, tp, n, ratios_t, ratios_tp)
    return -2 * _prefactor(params, t, tp, n) * oracle.lu_det(s)


FORM_FACTORS = {"sigma_minus": form_factor_sigma_minus, "sigma_z": form_factor_sigma_z}
DENSE_KIND = {"sigma_minus": "minus", "sigma_z": "z"}


def form_factor(params, kind: str, t, tp, n, ratios_t=None, ratios_tp=None) -> complex:
    if kind not in FORM_FACTORS:
        raise ValueError(f"no closed form-factor formula for {kind!r}")
    return FORM_FACTORS[kind](params, t, tp, n, ratios_t, ratios_tp)


def dense_form_factor(params, kind: str, t, tp, n, ratios_t=None, ratios_tp=None):
    """Return (value, scale): the dense <t|O_n|t'> and ||<t||| * |||t'>||."""
    left = build_eigenstate(params, t, "left", ratios_t)
    right = build_eigenstate(params, tp, "right", ratios_tp)
    op = embed_site(DENSE_KIND.get(kind, kind), n, params.n_sites)
    scale = float(np.sqrt(np.sum(np.abs(left) ** 2) * np.sum(np.abs(right) ** 2)))
    return oracle.matrix_element(left, op, right), scale


# ---------------------------------------------------------------------------
# Reconstruction of local operators
# ---------------------------------------------------------------------------


class Flavor(str, Enum):
    ANTIPERIODIC_1 = "antiperiodic_1"
    ANTIPERIODIC_2 = "antiperiodic_2"
    PERIODIC_1 = "periodic_1"
    PERIODIC_2 = "periodic_2"


def _solve_node(params, lhs, rhs, b):
    try:
        return oracle.lu_solve(lhs, rhs)
    except SingularMatrixError as exc:
        raise SingularMatrixError(b + 1, exc.pivot, exc.threshold) from exc


def _antiperiodic_det(params, lam):
    return transfer_antiperiodic(params, lam) @ transfer_antiperiodic(params, lam / params.q)


def _periodic_det(params, lam) -> complex:
    return -eval_a(params, lam) * eval_d(params, lam / params.q)


def reconstruct_local_operator(params: ModelParams, x, n: int, flavor="antiperiodic_1") -> np.ndarray:
    """Express X_n through transfer matrices and monodromy entries at the nodes."""
    _check_site(params, n)
    x = site_matrix(x)
    flavor = Flavor(flavor)
    eta, q = params.eta, params.q
    out = np.eye(params.dim, dtype=complex)
    sx, sy, sz = SIGMA["x"], SIGMA["y"], SIGMA["z"]

    if flavor in (Flavor.ANTIPERIODIC_1, Flavor.ANTIPERIODIC_2):
        n_left = n - 1 if flavor is Flavor.ANTIPERIODIC_1 else n
        n_right = n if flavor is Flavor.ANTIPERIODIC_1 else n - 1
        for b in range(n_left):
            out = out @ transfer_antiperiodic(params, eta[b])
        if flavor is Flavor.ANTIPERIODIC_1:
            mid = monodromy(params, eta[n - 1]).aux_trace(x @ sx)
        else:
            mt = monodromy(params, eta[n - 1] / q).transpose().sandwich(sz, sz)
            mid = mt.aux_trace(x @ sx) / _periodic_det(params, eta[n - 1])
        out = out @ mid
        for b in range(n_right):
            out = out @ _solve_node(params, _antiperiodic_det(params, eta[b]), transfer_antiperiodic(params, eta[b] / q), b)
        return out

    n_left = n - 1 if flavor is Flavor.PERIODIC_1 else n
    n_right = n if flavor is Flavor.PERIODIC_1 else n - 1
    for b in range(n_left):
        out = out @ transfer_periodic(params, eta[b])
    if flavor is Flavor.PERIODIC_1:
        mid = monodromy(params, eta[n - 1]).aux_trace(x)
    else:
        mt = monodromy(params, eta[n - 1] / q).transpose().sandwich(sy, sy)
        mid = mt.aux_trace(x) / _periodic_det(params, eta[n - 1])
    out = out @ mid
    for b in range(n_right):
        out = out @ (transfer_periodic(params, eta[b] / q) / _periodic_det(params, eta[b]))
    return out


def sigma_x_string(params: ModelParams, m: int):
    """Return (prod_{b<=m} sigma^x_b, first transfer form, second transfer form)."""
    if not 1 <= m <= params.n_sites:
        raise ValueError(f"string length {m} outside 1..{params.n_sites}")
    eta, q, dim = params.eta, params.q, params.dim
    direct = np.eye(dim, dtype=complex)
    for b in range(1, m + 1):
        direct = direct @ embed_site("x", b, params.n_sites)
    first = np.eye(dim, dtype=complex)
    for b in range(m):
        first = first @ transfer_antiperiodic(params, eta[b])
    for b in range(m):
        first = first @ transfer_periodic(params, eta[b] / q) / _periodic_det(params, eta[b])
    second = np.eye(dim, dtype=complex)
    for b in range(m):
        second = second @ _solve_node(params, _antiperiodic_det(params, eta[b]), transfer_periodic(params, eta[b]), b)
    for b in range(m):
        second = second @ transfer_antiperiodic(params, eta[b] / q)
    return direct, first, second


# ---------------------------------------------------------------------------
# Norms and spectral sums
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormReport:
    bracket: complex
    dense_bracket: complex
    hilbert_norm_sq: float
    alpha: complex
    covector_residual: float  # min_c ||<t| - c (|t>)^dagger|| / ||<t|||


def eigenstate_bracket(params: ModelParams, t: TransferEigenvalue, ratios: QRatios = None) -> complex:
    ratios = ratios or q_ratios(params, t)
    return scalar_product(params, SeparateState.eigenstate("left", ratios), SeparateState.eigenstate("right", ratios))


def eigenstate_norm_and_alpha(params: ModelParams, t: TransferEigenvalue, ratios: QRatios = None) -> NormReport:
    ratios = ratios or q_ratios(params, t)
    bracket = eigenstate_bracket(params, t, ratios)
    if abs(bracket) == 0:
        raise ArithmeticError("vanishing bracket <t|t>")
    left = build_eigenstate(params, t, "left", ratios)
    right = build_eigenstate(params, t, "right", ratios)
    norm_sq = oracle.hermitian_pairing(right, right).real
    target = right.conj()
    c = np.vdot(target, left) / np.vdot(target, target)
    cov = float(np.sqrt(np.sum(np.abs(left - c * target) ** 2) / np.sum(np.abs(left) ** 2)))
    return NormReport(bracket, oracle.pairing(left, right), float(norm_sq), norm_sq / bracket, cov)


@dataclass(frozen=True)
class SpectralData:
    """Everything a spectral sum needs: eigenvalues, Q tables and brackets."""

    values: tuple
    ratios: tuple
    brackets: np.ndarray

    @classmethod
    def build(cls, params: ModelParams, spectrum) -> "SpectralData":
        values = tuple(spectrum)
        ratios = tuple(q_ratios(params, t) for t in values)
        brackets = np.array([eigenstate_bracket(params, t, r) for t, r in zip(values, ratios)])
        return cls(values, ratios, brackets)


def m_point_function(params: ModelParams, index: int, ops, data: SpectralData) -> complex:
    """<t|O_1 ... O_m|t>/<t|t> by inserting sum_t' |t'><t'|/<t'|t'> between factors.

    `index` picks t in `data.values`; ops are (kind, site) with kind in
    {"sigma_minus", "sigma_z"}.
    """
    if data is None or not data.values:
        raise ValueError("a computed spectrum is required")
    ops = list(ops)
    if not ops:
        return 1.0 + 0j
    k = len(data.values)
    # ff[s][i, j] = <t_i| O_s |t_j>
    ff = []
    for kind, site in ops:
        mat = np.empty((k, k), dtype=complex)
        for i in range(k):
            for j in range(k):
                mat[i, j] = form_factor(
                    params, kind, data.values[i], data.values[j], site, data.ratios[i], data.ratios[j]
                )
        ff.append(mat)
    row = ff[0][index]
    for mat in ff[1:]:
        row = (row / data.brackets) @ mat
    return complex(row[index] / data.brackets[index])


def dense_m_point(params: ModelParams, t: TransferEigenvalue, ops, ratios: QRatios = None):
    """Return (value, scale) with scale = ||<t|| * ||O_1...O_m |t>|| / |<t|t>|."""
    ratios = ratios or q_ratios(params, t)
    left = build_eigenstate(params, t, "left", ratios)
    right = build_eigenstate(params, t, "right", ratios)
    vec = right
    for kind, site in reversed(list(ops)):
        vec = embed_site(DENSE_KIND.get(kind, kind), site, params.n_sites) @ vec
    bracket = oracle.pairing(left, right)
    scale = float(np.sqrt(np.sum(np.abs(left) ** 2) * np.sum(np.abs(vec) ** 2)) / abs(bracket))
    return oracle.pairing(left, vec) / bracket, scale


def identity_from_eigenstates(params: ModelParams, data: SpectralData) -> np.ndarray:
    """sum_t |t><t| / <t|t> assembled densely."""
    out = np.zeros((params.dim, params.dim), dtype=complex)
    for t, r, br in zip(data.values, data.ratios, data.brackets):
        out += np.outer(build_eigenstate(params, t, "right", r), build_eigenstate(params, t, "left", r)) / br
    return out
