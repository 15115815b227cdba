"""Complex Laurent polynomials with an optional parity constraint."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType

import numpy as np

from . import oracle
from .errors import ConditioningError, DomainError, SingularMatrixError


class Parity(str, Enum):
    EVEN = "even"
    ODD = "odd"
    NONE = "none"


def _parity_ok(k: int, parity: Parity) -> bool:
    if parity is Parity.EVEN:
        return k % 2 == 0
    if parity is Parity.ODD:
        return k % 2 != 0
    return True


@dataclass(frozen=True)
class LaurentPoly:
    """sum_k c_k lam^k over a finite set of integer exponents k."""

    coeffs: MappingProxyType = field(default_factory=dict)
    parity: Parity = Parity.NONE

    def __post_init__(self):
        parity = Parity(self.parity)
        clean = {}
        for k, c in dict(self.coeffs).items():
            if int(k) != k:
                raise ValueError(f"exponent {k!r} is not an integer")
            k = int(k)
            if not _parity_ok(k, parity):
                raise ValueError(f"exponent {k} violates parity {parity.value}")
            clean[k] = clean.get(k, 0j) + complex(c)
        object.__setattr__(self, "parity", parity)
        object.__setattr__(self, "coeffs", MappingProxyType(dict(sorted(clean.items()))))

    @property
    def min_exp(self):
        return min(self.coeffs) if self.coeffs else None

    @property
    def max_exp(self):
        return max(self.coeffs) if self.coeffs else None

    @property
    def exponents(self) -> np.ndarray:
        return np.array(list(self.coeffs), dtype=int)

    @property
    def values(self) -> np.ndarray:
        return np.array(list(self.coeffs.values()), dtype=complex)

    def __call__(self, lam):
        return laurent_eval(self, lam)

    def derivative(self) -> "LaurentPoly":
        return laurent_derivative(self)

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0j) + c
        parity = self.parity if self.parity == other.parity else Parity.NONE
        return LaurentPoly(out, parity)

    def scale(self, s: complex) -> "LaurentPoly":
        return LaurentPoly({k: s * c for k, c in self.coeffs.items()}, self.parity)

    def max_abs_diff(self, other: "LaurentPoly") -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.coeffs.get(k, 0) - other.coeffs.get(k, 0)) for k in keys), default=0.0)


def laurent_eval(p: LaurentPoly, lam):
    """Evaluate p at a scalar or an array of points."""
    lam = np.asarray(lam, dtype=complex)
    if not p.coeffs:
        return complex(0) if lam.ndim == 0 else np.zeros(lam.shape, complex)
    if np.any(lam == 0) and p.min_exp < 0:
        raise DomainError("cannot evaluate negative powers at lam = 0")
    out = np.zeros(lam.shape, dtype=complex)
    for k, c in p.coeffs.items():
        out = out + c * lam**k
    return complex(out) if out.ndim == 0 else out


def laurent_derivative(p: LaurentPoly) -> LaurentPoly:
    out = {k - 1: k * c for k, c in p.coeffs.items() if k != 0}
    flipped = {Parity.EVEN: Parity.ODD, Parity.ODD: Parity.EVEN}.get(p.parity, Parity.NONE)
    return LaurentPoly(out, flipped)


def _parity_of(exponents) -> Parity:
    mods = {int(k) % 2 for k in exponents}
    if mods == {0}:
        return Parity.EVEN
    if mods == {1}:
        return Parity.ODD
    return Parity.NONE


def vandermonde(nodes, exponents) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=complex)
    return nodes[:, None] ** np.asarray(exponents)[None, :]


def fit_coefficients(nodes, values, exponents, max_cond: float = 1e13) -> np.ndarray:
    """Solve the generalized Vandermonde system for a batch of value columns.

    ``values`` may have trailing dimensions; the fit acts on axis 0.
    """
    nodes = np.asarray(nodes, dtype=complex)
    values = np.asarray(values, dtype=complex)
    exponents = np.asarray(exponents, dtype=int)
    if not (len(nodes) == len(values) == len(exponents)):
        raise ValueError("nodes, values and exponents must have equal length")
    if np.any(nodes == 0):
        raise DomainError("interpolation nodes must be nonzero")
    if len(set(np.round(nodes, 14))) != len(nodes):
        raise ValueError("interpolation nodes must be distinct")
    vmat = vandermonde(nodes, exponents)
    lu = oracle.lu_factor(vmat)
    try:
        coeffs = lu.solve(values.reshape(len(nodes), -1))
    except SingularMatrixError as exc:
        raise ConditioningError("singular interpolation system", np.inf) from exc
    cond = oracle.cond_estimate(vmat)
    if cond > max_cond:
        raise ConditioningError("interpolation system is ill-conditioned", cond)
    return coeffs.reshape(values.shape)


def laurent_interpolate(nodes, values, exponents, parity=None) -> LaurentPoly:
    """Laurent polynomial supported on `exponents` through (nodes, values)."""
    coeffs = fit_coefficients(nodes, values, exponents)
    parity = _parity_of(exponents) if parity is None else Parity(parity)
    return LaurentPoly(dict(zip((int(k) for k in exponents), coeffs)), parity)


def transfer_exponents(n_sites: int) -> np.ndarray:
    """Exponent set {-N+1, -N+3, ..., N-1} of t(lam) = sum_b c_b lam^(-N-1+2b)."""
    return np.arange(-n_sites + 1, n_sites, 2)


def diagonal_exponents(n_sites: int) -> np.ndarray:
    """Exponent set {-N, -N+2, ..., N} of the A and D monodromy entries."""
    return np.arange(-n_sites, n_sites + 1, 2)
