"""Sklyanin SOV bases: D- and A-eigenbases, coupling norms and the measure.

States are indexed by h in {0,1}^N with h_a stored as bit a-1 of j-1, so the
SOV index and the computational-basis index share one binary convention.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import DomainError, SovConditionError
from .operators import monodromy
from .params import ModelParams, _sov_margin, eval_a, eval_d, validate_sov_condition

# omega(eta_b q^{GAUGE_SIGN h_b}) enters the identity decomposition; the
# decomposition only closes for the negative exponent.
GAUGE_SIGN = -1


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class Variable(str, Enum):
    D = "D"
    A = "A"


def kappa(h) -> int:
    """1-based SOV index j = 1 + sum_a 2^(a-1) h_a."""
    if any(b not in (0, 1) for b in h):
        raise ValueError(f"h must be a bit tuple, got {h!r}")
    return 1 + sum(int(b) << a for a, b in enumerate(h))


def kappa_inv(j: int, n_sites: int) -> tuple:
    if not 1 <= j <= 2**n_sites:
        raise ValueError(f"index {j} outside 1..{2**n_sites}")
    return tuple(((j - 1) >> a) & 1 for a in range(n_sites))


def all_h(n_sites: int) -> np.ndarray:
    """(2^N, N) array of bit tuples in index order."""
    j = np.arange(2**n_sites)
    return (j[:, None] >> np.arange(n_sites)[None, :]) & 1


def omega(params: ModelParams, x):
    """Gauge function omega(x) = x^(N-1)."""
    return np.asarray(x, dtype=complex) ** (params.n_sites - 1)


def shifted_nodes(params: ModelParams, h) -> np.ndarray:
    """x_a = eta_a q^(-h_a)."""
    return params.eta * params.q ** (-np.asarray(h))


def vandermonde_weight(params: ModelParams, h) -> complex:
    """prod_{b<a} (x_a^2 - x_b^2) with x = eta q^(-h)."""
    x2 = shifted_nodes(params, h) ** 2
    diff = x2[:, None] - x2[None, :]
    return complex(np.prod(diff[np.tril_indices(params.n_sites, -1)]))


def norm_constant(params: ModelParams, branch_signs=None) -> complex:
    """n = prod_{b<a} sqrt(eta_a/eta_b - eta_b/eta_a), principal branch per factor."""
    eta = params.eta
    factors = [np.sqrt(eta[a] / eta[b] - eta[b] / eta[a]) for a in range(params.n_sites) for b in range(a)]
    if branch_signs is not None:
        if len(branch_signs) != len(factors):
            raise ValueError(f"expected {len(factors)} branch signs")
        factors = [s * f for s, f in zip(branch_signs, factors)]
    return complex(np.prod(factors)) if factors else 1.0 + 0j


def _require_sov(params: ModelParams):
    ok, violations = validate_sov_condition(params)
    if not ok:
        raise SovConditionError(violations)
    if params.n_sites > 1 and _sov_margin(params) < 1e-6:
        warnings.warn("inhomogeneities nearly violate the SOV condition", stacklevel=3)


@dataclass(frozen=True)
class SovBasis:
    """Row j-1 of `states` holds the state with index j (covector or vector)."""

    side: Side
    variable: Variable
    states: np.ndarray
    norm_constant: complex
    params: ModelParams

    @property
    def h(self) -> np.ndarray:
        return all_h(self.params.n_sites)

    def state(self, h) -> np.ndarray:
        return self.states[kappa(h) - 1]

    def change_of_basis(self) -> np.ndarray:
        """Columns are the states (right) or rows are the covectors (left)."""
        return self.states.T if self.side is Side.RIGHT else self.states


def build_sov_basis(params: ModelParams, side="left", variable="D", branch_signs=None) -> SovBasis:
    """Construct SOV states by repeated dense application of C or B at the nodes."""
    _require_sov(params)
    side, variable = Side(side), Variable(variable)
    signs = None if branch_signs is None else tuple(int(s) for s in branch_signs)
    return _build_cached(params, side, variable, signs)


@lru_cache(maxsize=64)
def _build_cached(params, side, variable, branch_signs):
    n, dim, q, eta = params.n_sites, params.dim, params.q, params.eta
    shift = 1.0 if variable is Variable.D else 1.0 / q
    states = np.zeros((dim, dim), dtype=complex)
    states[0, 0] = 1.0
    for a in range(n):
        m = monodromy(params, eta[a] * shift)
        lo, hi = 1 << a, 1 << (a + 1)
        if side is Side.LEFT:
            gen = m.c / eval_d(params, eta[a] / q)
            states[lo:hi] = states[:lo] @ gen
        else:
            gen = m.b / eval_a(params, eta[a])
            states[lo:hi] = states[:lo] @ gen.T
    nc = norm_constant(params, branch_signs)
    states /= nc
    states.flags.writeable = False
    return SovBasis(side, variable, states, nc, params)


def eigenvalue_at(params: ModelParams, variable, h, lam) -> complex:
    """d_h(lam) for the D-variable, a_h(lam) for the A-variable."""
    if lam == 0:
        raise DomainError("spectral parameter must be nonzero")
    h = np.asarray(h)
    power = h if Variable(variable) is Variable.D else 1 - h
    x = lam * params.q**power
    return complex(np.prod(x / params.eta - params.eta / x))


def _bracket(x, y):
    return x / y - y / x


def action_matrix(params: ModelParams, variable, side, generator: str, lam) -> np.ndarray:
    """Matrix K of the B/C action in SOV coordinates.

    Right side: G |h> = sum_h' K[h', h] |h'>.
    Left side:  <h| G = sum_h' K[h, h'] <h'|.
    """
    if lam == 0:
        raise DomainError("spectral parameter must be nonzero")
    variable, side = Variable(variable), Side(side)
    if generator not in ("B", "C"):
        raise ValueError("generator must be 'B' or 'C'")
    n, q, eta = params.n_sites, params.q, params.eta
    hs = all_h(n)
    a_node = np.array([eval_a(params, e) for e in eta])
    d_node = np.array([eval_d(params, e / q) for e in eta])
    out = np.zeros((params.dim, params.dim), dtype=complex)
    for j, h in enumerate(hs):
        for a in range(n):
            others = [b for b in range(n) if b != a]
            if variable is Variable.D:
                num = np.prod([_bracket(lam * q ** h[b], eta[b]) for b in others])
                den = np.prod([_bracket(eta[a] * q ** (h[b] - h[a]), eta[b]) for b in others])
            else:
                num = np.prod([_bracket(lam * q ** (1 - h[b]), eta[b]) for b in others])
                den = np.prod([_bracket(eta[a] * q ** (h[a] - h[b]), eta[b]) for b in others])
            coef = num / den
            flip = j ^ (1 << a)
            if side is Side.RIGHT:
                if generator == "C" and h[a] == 1:
                    out[flip, j] += coef * d_node[a]
                elif generator == "B" and h[a] == 0:
                    out[flip, j] += coef * a_node[a]
            else:
                if generator == "C" and h[a] == 0:
                    out[j, flip] += coef * d_node[a]
                elif generator == "B" and h[a] == 1:
                    out[j, flip] += coef * a_node[a]
    return out


def sov_action(params: ModelParams, variable, side, generator: str, state_coeffs, lam) -> np.ndarray:
    """Apply B(lam) or C(lam) to a state given by its SOV coordinates."""
    k = action_matrix(params, variable, side, generator, lam)
    psi = np.asarray(state_coeffs, dtype=complex)
    return k @ psi if Side(side) is Side.RIGHT else k.T @ psi


@dataclass(frozen=True)
class CouplingData:
    m_diag: np.ndarray
    measure: np.ndarray

    @staticmethod
    def gauge(params: ModelParams, x):
        return omega(params, x)


def coupling_diagonal(params: ModelParams, h) -> complex:
    """M_jj = prod_{b<a} 1 / (eta_a q^(h_b-h_a)/eta_b - eta_b/(q^(h_b-h_a) eta_a))."""
    eta, q = params.eta, params.q
    out = 1.0 + 0j
    for a in range(params.n_sites):
        for b in range(a):
            out /= _bracket(eta[a] * q ** (h[b] - h[a]), eta[b])
    return out


def coupling_data(params: ModelParams) -> CouplingData:
    _require_sov(params)
    m = np.array([coupling_diagonal(params, h) for h in all_h(params.n_sites)])
    return CouplingData(m, 1.0 / m)


def dense_coupling(params: ModelParams, variable="D", branch_signs=None) -> np.ndarray:
    """Full matrix of bilinear pairings <h|h'> between left and right states."""
    left = build_sov_basis(params, "left", variable, branch_signs)
    right = build_sov_basis(params, "right", variable, branch_signs)
    return left.states @ right.states.T


def coupling_flip_ratio(params: ModelParams, h, a: int) -> complex:
    """Predicted <h'|h'>/<h|h> when h_a goes 0 -> 1 (a is 0-based)."""
    eta, q = params.eta, params.q
    out = 1.0 + 0j
    for b in range(params.n_sites):
        if b == a:
            continue
        out *= _bracket(eta[a] * q ** h[b], eta[b]) / _bracket(eta[a] * q ** (h[b] - 1), eta[b])
    return out


def identity_decomposition(params: ModelParams, gauge_sign: int = GAUGE_SIGN) -> np.ndarray:
    """sum_h V(x^2) |h><h| / prod_b omega(eta_b q^(s h_b))."""
    _require_sov(params)
    left = build_sov_basis(params, "left", "D")
    right = build_sov_basis(params, "right", "D")
    hs = all_h(params.n_sites)
    weights = np.array(
        [
            vandermonde_weight(params, h) / np.prod(omega(params, params.eta * params.q ** (gauge_sign * h)))
            for h in hs
        ]
    )
    return (right.states.T * weights[None, :]) @ left.states


def check_identity_decomposition(params: ModelParams, gauge_sign: int = GAUGE_SIGN) -> float:
    assembled = identity_decomposition(params, gauge_sign)
    return float(np.abs(assembled - np.eye(params.dim)).max())


def sov_coordinates(params: ModelParams, table) -> np.ndarray:
    """Coordinates over h of the separate state with per-node values table[a, h_a].

    Entry h is prod_a table[a, h_a] / omega(eta_a q^-h_a) times V(x^2).
    """
    table = np.asarray(table, dtype=complex)
    hs = all_h(params.n_sites)
    rows = np.arange(params.n_sites)
    out = np.empty(len(hs), dtype=complex)
    for j, h in enumerate(hs):
        x = shifted_nodes(params, h)
        out[j] = np.prod(table[rows, h] / omega(params, x)) * vandermonde_weight(params, h)
    return out
