"""Model parameters, the SOV existence condition and the scalar functions a, d.

The chain is fixed by its length N, the anisotropy q = e^eta and the
inhomogeneities eta_1..eta_N.  Every other module receives a `ModelParams`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DomainError

# a(lam) = A_SIGN * prod_n (lam q / eta_n - eta_n / (lam q)).  With this sign
# det M(lam) = -a(lam) d(lam/q) and the discrete system reads
# t(eta_a) t(eta_a/q) = a(eta_a) d(eta_a/q).  The all-up state is then an
# A-eigenvector with eigenvalue -a(lam).  `calibrate_a_sign` re-derives it.
A_SIGN = -1


class Regime(str, Enum):
    MASSLESS = "massless"
    MASSIVE = "massive"
    GENERIC = "generic"


@dataclass(frozen=True)
class Tolerances:
    """Default numerical tolerances; override per call or from the CLI."""

    operator: float = 1e-10
    determinant: float = 1e-8
    regime: float = 1e-12
    sov_condition: float = 1e-10


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class ModelParams:
    n_sites: int
    q: complex
    inhomogeneities: tuple
    regime: Regime = Regime.GENERIC
    regime_tol: float = field(default=1e-12, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "q", complex(self.q))
        object.__setattr__(self, "inhomogeneities", tuple(complex(e) for e in self.inhomogeneities))
        object.__setattr__(self, "regime", Regime(self.regime))
        if not isinstance(self.n_sites, (int, np.integer)) or self.n_sites < 1:
            raise ValueError(f"n_sites must be a positive integer, got {self.n_sites!r}")
        if len(self.inhomogeneities) != self.n_sites:
            raise ValueError(
                f"expected {self.n_sites} inhomogeneities, got {len(self.inhomogeneities)}"
            )
        q = self.q
        if abs(q) < 1e-300 or abs(q - 1) < 1e-14 or abs(q + 1) < 1e-14:
            raise ValueError(f"q must avoid 0, 1 and -1, got {q}")
        if any(abs(e) == 0 for e in self.inhomogeneities):
            raise ValueError("inhomogeneities must be nonzero")
        tol = self.regime_tol
        if self.regime is Regime.MASSLESS:
            if abs(abs(q) - 1) > tol:
                raise ValueError(f"massless regime needs |q| = 1, got |q| = {abs(q)}")
            if any(abs(e.imag) > tol * max(1.0, abs(e)) for e in self.inhomogeneities):
                raise ValueError("massless regime needs real inhomogeneities")
        elif self.regime is Regime.MASSIVE:
            if abs(q.imag) > tol or q.real <= 0:
                raise ValueError(f"massive regime needs real positive q, got {q}")
            if any(abs(abs(e) - 1) > tol for e in self.inhomogeneities):
                raise ValueError("massive regime needs unimodular inhomogeneities")

    @property
    def eta(self) -> np.ndarray:
        return np.array(self.inhomogeneities, dtype=complex)

    @property
    def dim(self) -> int:
        return 2**self.n_sites

    @property
    def parity_flag(self) -> int:
        """e_N: 1 for even N, 0 for odd N."""
        return 1 if self.n_sites % 2 == 0 else 0

    @property
    def is_homogeneous(self) -> bool:
        return all(abs(e - 1) < 1e-14 for e in self.inhomogeneities)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def homogeneous(cls, n_sites: int, q: complex, regime=Regime.GENERIC) -> "ModelParams":
        return cls(n_sites, q, (1.0,) * n_sites, regime)

    @classmethod
    def random(cls, n_sites: int, regime="generic", rng=None, q=None) -> "ModelParams":
        """Draw parameters satisfying the regime hypotheses and the SOV condition."""
        rng = np.random.default_rng(rng)
        regime = Regime(regime)
        for _ in range(1000):
            if regime is Regime.MASSLESS:
                qq = q if q is not None else np.exp(1j * np.pi * rng.uniform(0.08, 0.42))
                eta = rng.uniform(0.5, 2.0, n_sites)
            elif regime is Regime.MASSIVE:
                qq = q if q is not None else rng.uniform(1.15, 1.9)
                eta = np.exp(1j * rng.uniform(-np.pi, np.pi, n_sites))
            else:
                qq = q if q is not None else np.exp(rng.uniform(0.1, 0.4) + 1j * rng.uniform(0.2, 1.2))
                eta = rng.uniform(0.6, 1.6, n_sites) * np.exp(1j * rng.uniform(-0.8, 0.8, n_sites))
            params = cls(n_sites, qq, tuple(eta), regime)
            if _sov_margin(params) > 0.05:
                return params
        raise RuntimeError("could not draw well-separated inhomogeneities")

    # -- serialization -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "q": complex_to_json(self.q),
            "inhomogeneities": [complex_to_json(e) for e in self.inhomogeneities],
            "regime": self.regime.value,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelParams":
        try:
            n = doc["n_sites"]
            q = complex_from_json(doc["q"])
            etas = tuple(complex_from_json(e) for e in doc["inhomogeneities"])
            regime = doc.get("regime", "generic")
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed parameter document: {exc}") from exc
        return cls(int(n), q, etas, regime)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "ModelParams":
        return cls.from_json(Path(path).read_text())


def complex_to_json(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def complex_from_json(v) -> complex:
    if isinstance(v, dict):
        return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def validate_sov_condition(params: ModelParams, rtol: float = 1e-10):
    """Check eta_a != q^j eta_b for j in {-1, 0, 1} and all a < b.

    Returns ``(ok, violations)`` with violations as 1-based ``(a, b, j)``.
    """
    eta, q = params.eta, params.q
    violations = []
    for a in range(params.n_sites):
        for b in range(a + 1, params.n_sites):
            for j in (-1, 0, 1):
                other = q**j * eta[b]
                if abs(eta[a] - other) <= rtol * max(abs(eta[a]), abs(other)):
                    violations.append((a + 1, b + 1, j))
    return (not violations, violations)


def _sov_margin(params: ModelParams) -> float:
    eta, q = params.eta, params.q
    margin = math.inf
    for a in range(params.n_sites):
        for b in range(a + 1, params.n_sites):
            for j in (-1, 0, 1):
                margin = min(margin, abs(eta[a] - q**j * eta[b]) / abs(eta[a]))
    return margin


def _check_nonzero(lam):
    if lam == 0:
        raise DomainError("spectral parameter must be nonzero")


def eval_d(params: ModelParams, lam) -> complex:
    """d(lam) = prod_n (lam/eta_n - eta_n/lam)."""
    _check_nonzero(lam)
    eta = params.eta
    return complex(np.prod(lam / eta - eta / lam))


def eval_a(params: ModelParams, lam) -> complex:
    """a(lam) = A_SIGN * prod_n (lam q/eta_n - eta_n/(lam q))."""
    _check_nonzero(lam)
    eta, x = params.eta, lam * params.q
    return A_SIGN * complex(np.prod(x / eta - eta / x))


def calibrate_a_sign(params: ModelParams, rng=None, n_samples: int = 3) -> int:
    """Recover the global sign of a(lam) from the quantum-determinant identity.

    Requires ``det M(lam) = -s prod(...) d(lam/q)`` on the all-up state for
    random lam and returns the sign s that makes it hold.
    """
    from .operators import monodromy

    rng = np.random.default_rng(rng)
    votes = []
    for _ in range(n_samples):
        lam = complex(rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(0, 2 * np.pi)))
        m1, m2 = monodromy(params, lam), monodromy(params, lam / params.q)
        qdet = (m1.a @ m2.d - m1.b @ m2.c)[0, 0]
        x = lam * params.q
        bare = complex(np.prod(x / params.eta - params.eta / x)) * eval_d(params, lam / params.q)
        votes.append(1 if abs(qdet + bare) < abs(qdet - bare) else -1)
    if len(set(votes)) != 1:
        raise ArithmeticError("inconsistent sign votes; parameters too degenerate")
    return votes[0]
