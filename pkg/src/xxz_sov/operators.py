"""Dense operators on the 2^N-dimensional chain space.

Basis convention: product states of sigma^z, site 1 is the least significant
bit, spin up is bit value 0.  Index 0 is therefore the all-up reference state.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import oracle
from .errors import ConditioningError, DomainError, SingularMatrixError, UnsupportedError
from .laurent import fit_coefficients, transfer_exponents
from .params import ModelParams, Regime, eval_a, eval_d

SIGMA = {
    "id": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "plus": np.array([[0, 1], [0, 0]], dtype=complex),
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),
}
SIGMA_ALIASES = {"+": "plus", "-": "minus", "identity": "id", "I": "id"}


def site_matrix(kind) -> np.ndarray:
    """2x2 matrix for a Pauli/ladder name, or pass a 2x2 array through."""
    if isinstance(kind, str):
        key = SIGMA_ALIASES.get(kind, kind)
        if key not in SIGMA:
            raise ValueError(f"unknown site operator {kind!r}")
        return SIGMA[key].copy()
    m = np.asarray(kind, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"site operator must be 2x2, got {m.shape}")
    return m


def _frozen(m: np.ndarray) -> np.ndarray:
    m.flags.writeable = False
    return m


def _check_lambda(lam):
    if lam == 0:
        raise DomainError("spectral parameter must be nonzero")


def _check_site(site: int, n_sites: int):
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} outside 1..{n_sites}")


def embed_site(local, site: int, n_sites: int) -> np.ndarray:
    """Embed a 2x2 operator at `site` by index arithmetic (no Kronecker chain)."""
    _check_site(site, n_sites)
    local = site_matrix(local)
    dim = 2**n_sites
    shift = site - 1
    cols = np.arange(dim)
    bit = (cols >> shift) & 1
    base = cols & ~(1 << shift)
    out = np.zeros((dim, dim), dtype=complex)
    for row_bit in (0, 1):
        out[base | (row_bit << shift), cols] = local[row_bit, bit]
    return out


def apply_site_left(local: np.ndarray, mat: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """(local at `site`) @ mat in O(dim^2)."""
    dim = 2**n_sites
    view = mat.reshape(dim >> site, 2, 1 << (site - 1), mat.shape[1])
    return np.einsum("ij,ajbk->aibk", local, view).reshape(mat.shape)


def pauli(kind: str, site: int, params: ModelParams) -> np.ndarray:
    return embed_site(kind, site, params.n_sites)


# ---------------------------------------------------------------------------
# Lax operator, R-matrix, monodromy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    """2x2 auxiliary-space block structure [[a, b], [c, d]]."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def entry(self, i: int, j: int) -> np.ndarray:
        return ((self.a, self.b), (self.c, self.d))[i][j]

    def trace(self) -> np.ndarray:
        return self.a + self.d

    def transpose(self) -> "Block":
        return Block(self.a, self.c, self.b, self.d)

    def sandwich(self, left, right) -> "Block":
        """left . M . right for scalar 2x2 matrices acting on the auxiliary space."""
        left, right = np.asarray(left), np.asarray(right)
        e = [
            [sum(left[i, k] * self.entry(k, l) * right[l, j] for k in range(2) for l in range(2)) for j in range(2)]
            for i in range(2)
        ]
        return Block(e[0][0], e[0][1], e[1][0], e[1][1])

    def aux_trace(self, x) -> np.ndarray:
        """tr_0(M_0 X_0) = sum_ij M_ij X_ji for a scalar 2x2 matrix X."""
        x = np.asarray(x)
        return sum(self.entry(i, j) * x[j, i] for i in range(2) for j in range(2))

    def as_matrix(self) -> np.ndarray:
        """Full matrix on aux (x) quantum space, aux index most significant."""
        return np.block([[self.a, self.b], [self.c, self.d]])


def x_pm(lam, q):
    xp = (lam * q - 1 / (q * lam) + lam - 1 / lam) / 2
    xm = (lam * q - 1 / (q * lam) - lam + 1 / lam) / 2
    return xp, xm


def lax_local(q, lam) -> Block:
    """Lax operator at argument lam (already divided by the site inhomogeneity).

    Blocks are 2x2 site matrices: A = x+ + x- s^z, B = (q-1/q) s^-,
    C = (q-1/q) s^+, D = x+ - x- s^z.
    """
    _check_lambda(lam)
    q = complex(q)
    xp, xm = x_pm(complex(lam), q)
    z, one = SIGMA["z"], SIGMA["id"]
    c = q - 1 / q
    return Block(xp * one + xm * z, c * SIGMA["minus"], c * SIGMA["plus"], xp * one - xm * z)


def lax(params: ModelParams, site: int, lam) -> Block:
    """Lax operator of `site`, evaluated at the site argument lam (no division by eta)."""
    _check_site(site, params.n_sites)
    return lax_local(params.q, lam)


def r_matrix(lam, q) -> np.ndarray:
    _check_lambda(lam)
    a = lam * q - 1 / (q * lam)
    b = lam - 1 / lam
    c = q - 1 / q
    return np.array([[a, 0, 0, 0], [0, b, c, 0], [0, c, b, 0], [0, 0, 0, a]], dtype=complex)


def monodromy(params: ModelParams, lam) -> Block:
    """M(lam) = L_N(lam/eta_N) ... L_1(lam/eta_1) as four dense blocks."""
    _check_lambda(lam)
    return _monodromy_cached(params, complex(lam))


@lru_cache(maxsize=96)
def _monodromy_cached(params: ModelParams, lam: complex) -> Block:
    n, dim = params.n_sites, params.dim
    eye = np.eye(dim, dtype=complex)
    zero = np.zeros((dim, dim), dtype=complex)
    m = [[eye, zero], [zero, eye.copy()]]
    for site in range(1, n + 1):
        lx = lax_local(params.q, lam / params.inhomogeneities[site - 1])
        m = [
            [
                apply_site_left(lx.entry(i, 0), m[0][j], site, n)
                + apply_site_left(lx.entry(i, 1), m[1][j], site, n)
                for j in range(2)
            ]
            for i in range(2)
        ]
    return Block(*(_frozen(m[i][j]) for i in range(2) for j in range(2)))


def _embed_aux(block: Block, slot: int) -> np.ndarray:
    """Operator on aux1 (x) aux2 (x) quantum acting as `block` on aux slot 1 or 2."""
    dq = block.a.shape[0]
    out = np.zeros((4 * dq, 4 * dq), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                r = (i * 2 + k) if slot == 1 else (k * 2 + i)
                s = (j * 2 + k) if slot == 1 else (k * 2 + j)
                out[r * dq : (r + 1) * dq, s * dq : (s + 1) * dq] = block.entry(i, j)
    return out


def ybe_residual_local(q, lam, mu) -> float:
    """max |R12(lam/mu) L1(lam) L2(mu) - L2(mu) L1(lam) R12(lam/mu)| (8x8)."""
    l1, l2 = _embed_aux(lax_local(q, lam), 1), _embed_aux(lax_local(q, mu), 2)
    r12 = np.kron(r_matrix(lam / mu, q), np.eye(2))
    return float(np.abs(r12 @ l1 @ l2 - l2 @ l1 @ r12).max())


def ybe_residual_global(params: ModelParams, lam, mu) -> float:
    """Same relation for the monodromy matrix, on a 4 * 2^N space, relative to |M1 M2|."""
    m1, m2 = _embed_aux(monodromy(params, lam), 1), _embed_aux(monodromy(params, mu), 2)
    r12 = np.kron(r_matrix(lam / mu, params.q), np.eye(params.dim))
    lhs, rhs = r12 @ m1 @ m2, m2 @ m1 @ r12
    return float(np.abs(lhs - rhs).max() / max(np.abs(lhs).max(), 1e-300))


# ---------------------------------------------------------------------------
# Transfer matrices and quantum determinants
# ---------------------------------------------------------------------------


def twist_matrix(alpha: complex, b: int) -> np.ndarray:
    if b not in (0, 1):
        raise ValueError("twist index b must be 0 or 1")
    diag = np.diag([np.exp(alpha), np.exp(-alpha)]).astype(complex)
    return SIGMA["x"] @ diag if b else diag


def transfer_general(params: ModelParams, lam, alpha: complex = 0.0, b: int = 1) -> np.ndarray:
    """tr_0[Sigma_0 M_0(lam)] with Sigma = (sigma^x)^b diag(e^alpha, e^-alpha)."""
    m = monodromy(params, lam)
    s = twist_matrix(alpha, b)
    return sum(s[i, j] * m.entry(j, i) for i in range(2) for j in range(2))


def transfer_antiperiodic(params: ModelParams, lam) -> np.ndarray:
    m = monodromy(params, lam)
    return m.b + m.c


def transfer_periodic(params: ModelParams, lam) -> np.ndarray:
    return monodromy(params, lam).trace()


def quantum_determinant(params: ModelParams, lam):
    """Return (A(lam)D(lam/q) - B(lam)C(lam/q), -a(lam) d(lam/q))."""
    m1, m2 = monodromy(params, lam), monodromy(params, lam / params.q)
    op = m1.a @ m2.d - m1.b @ m2.c
    return op, -eval_a(params, lam) * eval_d(params, lam / params.q)


def local_quantum_determinant(q, lam) -> complex:
    """Scalar A_n(lam)D_n(lam/q) - B_n(lam)C_n(lam/q) of one Lax operator."""
    l1, l2 = lax_local(q, lam), lax_local(q, lam / q)
    op = l1.a @ l2.d - l1.b @ l2.c
    return complex(op[0, 0])


def antiperiodic_quantum_determinant(params: ModelParams, lam):
    """Return (Tbar(lam) Tbar(lam/q), B(lam)C(lam/q) - A(lam)D(lam/q)).

    The two coincide at the nodes lam = eta_n only.
    """
    if not np.any(np.isclose(params.eta, lam, rtol=1e-12, atol=0)):
        import warnings

        warnings.warn("identity is only established at the inhomogeneities", stacklevel=2)
    lhs = transfer_antiperiodic(params, lam) @ transfer_antiperiodic(params, lam / params.q)
    m1, m2 = monodromy(params, lam), monodromy(params, lam / params.q)
    return lhs, m1.b @ m2.c - m1.a @ m2.d


@dataclass(frozen=True)
class NormalityReport:
    normality_residual: float
    selfadjoint_residual: float
    family_factor: complex


def selfadjoint_locus_point(params: ModelParams, s: float) -> complex:
    """A point of the self-adjoint locus: lam q^(1/2) = s (massless) or e^(i s) (massive)."""
    root = np.sqrt(params.q)
    if params.regime is Regime.MASSLESS:
        return complex(s / root)
    if params.regime is Regime.MASSIVE:
        return complex(np.exp(1j * s) / root)
    raise UnsupportedError("the self-adjoint locus is only defined for massless/massive regimes")


def check_normality(params: ModelParams, lam) -> NormalityReport:
    """Normality of Tbar(lam) and self-adjointness of i Tbar / i^{e_N} Tbar."""
    if params.regime is Regime.MASSLESS:
        factor = 1j
    elif params.regime is Regime.MASSIVE:
        factor = 1j**params.parity_flag
    else:
        raise UnsupportedError("normality is only asserted in the massless and massive regimes")
    t = transfer_antiperiodic(params, lam)
    th = t.conj().T
    fro = np.sqrt(np.sum(np.abs(t) ** 2))
    x = factor * t
    normality = np.sqrt(np.sum(np.abs(t @ th - th @ t) ** 2)) / fro**2
    selfadj = np.sqrt(np.sum(np.abs(x - x.conj().T) ** 2)) / fro
    return NormalityReport(float(normality), float(selfadj), complex(factor))


# ---------------------------------------------------------------------------
# Hamiltonian
# ---------------------------------------------------------------------------


def _require_homogeneous(params: ModelParams):
    if not params.is_homogeneous:
        raise UnsupportedError("the Hamiltonian is only available in the homogeneous limit")


def hamiltonian_direct(params: ModelParams) -> np.ndarray:
    """Sum of XXZ bonds with the site N -> 1 bond twisted by sigma^x."""
    if params.n_sites < 2:
        raise UnsupportedError("the Hamiltonian needs N >= 2")
    n = params.n_sites
    delta = (params.q + 1 / params.q) / 2
    ham = np.zeros((params.dim, params.dim), dtype=complex)
    for site in range(1, n + 1):
        nxt = site % n + 1
        sign = {"x": 1, "y": 1, "z": 1} if site < n else {"x": 1, "y": -1, "z": -1}
        for kind, weight in (("x", 1), ("y", 1), ("z", delta)):
            ham += sign[kind] * weight * (pauli(kind, site, params) @ pauli(kind, nxt, params))
    return ham


def transfer_derivative_at(params: ModelParams, lam0=1.0):
    """Tbar(lam0) and its exact lam-derivative from interpolated Laurent coefficients."""
    n = params.n_sites
    exps = transfer_exponents(n)
    nodes = lam0 * np.exp(1j * np.pi * np.arange(n) / n)
    samples = np.array([transfer_antiperiodic(params, z) for z in nodes])
    coeffs = fit_coefficients(nodes, samples, exps)
    value = np.tensordot(lam0 ** exps.astype(float), coeffs, axes=1)
    deriv = np.tensordot(exps * lam0 ** (exps - 1.0), coeffs, axes=1)
    return value, deriv


def hamiltonian_from_transfer(params: ModelParams) -> np.ndarray:
    """(q - 1/q) Tbar(1)^-1 Tbar'(1) - N (q + 1/q)/2."""
    _require_homogeneous(params)
    if params.n_sites < 2:
        raise UnsupportedError("the Hamiltonian needs N >= 2")
    q = params.q
    t1, dt1 = transfer_derivative_at(params, 1.0)
    lu = oracle.lu_factor(t1)
    try:
        logd = lu.solve(dt1)
    except SingularMatrixError as exc:
        raise ConditioningError("Tbar(1) is singular", oracle.cond_estimate(t1)) from exc
    return (q - 1 / q) * logd - params.n_sites * (q + 1 / q) / 2 * np.eye(params.dim)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def operator_to_json(mat: np.ndarray, n_sites: int, label: str = "") -> dict:
    """Row-major flat array with re/im interleaved, plus a header."""
    mat = np.asarray(mat, dtype=complex)
    flat = np.empty(2 * mat.size)
    flat[0::2] = mat.real.ravel()
    flat[1::2] = mat.imag.ravel()
    return {
        "label": label,
        "dim": int(mat.shape[0]),
        "n_sites": n_sites,
        "basis": "site-1 least significant bit; spin up = 0; row-major; re/im interleaved",
        "data": flat.tolist(),
    }


def operator_from_json(doc: dict) -> np.ndarray:
    flat = np.asarray(doc["data"], dtype=float)
    dim = int(doc["dim"])
    return (flat[0::2] + 1j * flat[1::2]).reshape(dim, dim)
