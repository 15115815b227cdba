"""Identity suite: every closed formula compared with its dense counterpart.

Each check returns a `Check` with a dimensionless residual and a threshold.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import observables as ob
from . import operators as op
from . import sov
from . import spectrum as sp
from .params import ModelParams, Regime, Tolerances, validate_sov_condition


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    threshold: float
    skipped: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.skipped) or bool(self.residual < self.threshold)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        if not np.isfinite(out["residual"]):
            out["residual"] = None
        return out


@dataclass
class VerifyReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check):
        self.checks.append(check)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _max_abs(x) -> float:
    return float(np.abs(x).max()) if np.size(x) else 0.0


def _rel(diff, scale) -> float:
    return _max_abs(diff) / max(float(scale), 1e-300)


def _random_points(rng, count):
    return rng.uniform(0.6, 1.6, count) * np.exp(1j * rng.uniform(0, 2 * np.pi, count))


# ---------------------------------------------------------------------------
# individual checks
# ---------------------------------------------------------------------------


def check_ybe(params: ModelParams, rng, n_pairs=10, threshold=1e-12):
    local = glob = 0.0
    for lam, mu in zip(_random_points(rng, n_pairs), _random_points(rng, n_pairs)):
        local = max(local, op.ybe_residual_local(params.q, lam, mu))
        glob = max(glob, op.ybe_residual_global(params, lam, mu))
    return [Check("ybe_local", local, threshold), Check("ybe_global", glob, threshold)]


def check_quantum_determinant(params: ModelParams, rng, n_samples=20, threshold=1e-10):
    worst = 0.0
    for lam in _random_points(rng, n_samples):
        mat, scalar = op.quantum_determinant(params, lam)
        worst = max(worst, _rel(mat - scalar * np.eye(params.dim), max(abs(scalar), _max_abs(mat))))
    return Check("quantum_determinant", worst, threshold)


def check_commuting(params: ModelParams, rng, n_pairs=5, threshold=1e-12):
    worst = 0.0
    for lam, mu in zip(_random_points(rng, n_pairs), _random_points(rng, n_pairs)):
        for fn in (op.transfer_antiperiodic, op.transfer_periodic):
            a, b = fn(params, lam), fn(params, mu)
            worst = max(worst, _rel(a @ b - b @ a, _max_abs(a) * _max_abs(b)))
    return Check("transfer_commutation", worst, threshold)


def check_normality_locus(params: ModelParams, rng, threshold=1e-12):
    if params.regime is Regime.GENERIC:
        return [Check("normality", np.nan, threshold, "generic regime")]
    norm = adj = 0.0
    for s in rng.uniform(-np.pi, np.pi, 4) if params.regime is Regime.MASSIVE else rng.uniform(0.4, 2.0, 4):
        rep = op.check_normality(params, op.selfadjoint_locus_point(params, s))
        norm, adj = max(norm, rep.normality_residual), max(adj, rep.selfadjoint_residual)
    return [Check("normality", norm, threshold), Check("selfadjoint", adj, threshold)]


def check_sov_bases(params: ModelParams, rng, n_samples=5, threshold=1e-10):
    worst = 0.0
    for variable in ("D", "A"):
        left = sov.build_sov_basis(params, "left", variable).states
        right = sov.build_sov_basis(params, "right", variable).states
        for lam in _random_points(rng, n_samples):
            m = op.monodromy(params, lam)
            fam = m.d if variable == "D" else m.a
            ev = np.array([sov.eigenvalue_at(params, variable, h, lam) for h in sov.all_h(params.n_sites)])
            scale = _max_abs(fam)
            worst = max(worst, _rel(right @ fam.T - ev[:, None] * right, scale * _max_abs(right)))
            worst = max(worst, _rel(left @ fam - ev[:, None] * left, scale * _max_abs(left)))
    return Check("sov_basis_eigen", worst, threshold)


def check_sov_actions(params: ModelParams, rng, threshold=1e-9):
    """Closed B/C action formulas versus dense action, via oracle change of basis."""
    from . import oracle

    worst = 0.0
    lam = _random_points(rng, 1)[0]
    m = op.monodromy(params, lam)
    for variable in ("D", "A"):
        left = sov.build_sov_basis(params, "left", variable).states
        right = sov.build_sov_basis(params, "right", variable).states
        for gen, g in (("B", m.b), ("C", m.c)):
            k_right = oracle.lu_solve(right.T, g @ right.T)
            k_left = oracle.lu_solve(left.T, (left @ g).T).T
            for side, dense in (("right", k_right), ("left", k_left)):
                formula = sov.action_matrix(params, variable, side, gen, lam)
                worst = max(worst, _rel(formula - dense, max(_max_abs(dense), 1.0)))
    return Check("sov_actions", worst, threshold)


def check_coupling(params: ModelParams, threshold=1e-10):
    dense = sov.dense_coupling(params)
    closed = sov.coupling_data(params).m_diag
    diag = _max_abs((np.diag(dense) - closed) / closed)
    off = _rel(dense - np.diag(np.diag(dense)), _max_abs(closed))
    return [Check("coupling_diagonal", diag, threshold), Check("coupling_offdiagonal", off, threshold)]


def check_identity_decomposition(params: ModelParams, threshold=1e-10):
    return Check("identity_decomposition", sov.check_identity_decomposition(params), threshold)


def check_spectrum(params: ModelParams, values, pairs, threshold_residual=1e-12, threshold_state=1e-9):
    out = [
        Check("spectrum_count", float(abs(len(values) - params.dim)), 0.5),
        Check("spectrum_distinct", 1e-6 / max(sp._min_distance(values), 1e-300), 1.0),
        Check("discrete_system", max(t.residual for t in values), threshold_residual),
        Check("eigenstate_verify", max(p.verify_residual for p in pairs), threshold_state),
    ]
    left = np.array([p.left_state for p in pairs])
    right = np.array([p.right_state for p in pairs])
    gram = left @ right.T
    norms = np.sqrt(np.sum(np.abs(left) ** 2, 1))[:, None] * np.sqrt(np.sum(np.abs(right) ** 2, 1))[None, :]
    off = gram / norms
    np.fill_diagonal(off, 0)
    out.append(Check("eigenstate_orthogonality", _max_abs(off), 1e-10))
    return out


def check_baxter(params: ModelParams, values, threshold=1e-10):
    worst = max(sp.baxter_wavefunction_residual(params, t, s) for t in values for s in ("left", "right"))
    return Check("baxter_wavefunction", worst, threshold)


def check_scalar_products(params: ModelParams, rng, values, ratios, n_pairs=10, threshold=1e-8):
    worst = 0.0
    for _ in range(n_pairs):
        a = ob.SeparateState.random(params, "left", rng)
        b = ob.SeparateState.random(params, "right", rng)
        dense = ob.dense_pairing(params, a, b)
        worst = max(worst, abs(ob.scalar_product(params, a, b) - dense) / abs(dense))
    kern = 0.0
    for i, t in enumerate(values):
        for j, tp in enumerate(values):
            if i == j:
                continue
            phi = ob.phi_matrix(params, ratios[i], ratios[j])
            v = tp.coeffs - t.coeffs
            # Phi itself vanishes at N = 1; the diagonal pair sets the scale
            ref = max(_max_abs(phi), _max_abs(ob.phi_matrix(params, ratios[i], ratios[i])))
            kern = max(kern, _rel(phi @ v, ref * _max_abs(v)))
    return [Check("scalar_product", worst, threshold), Check("orthogonality_kernel", kern, 1e-10)]


def check_form_factors(params: ModelParams, values, ratios, threshold=1e-8, max_pairs=None):
    out = []
    idx = range(len(values)) if max_pairs is None else range(min(len(values), max_pairs))
    for kind in ("sigma_minus", "sigma_z"):
        worst = 0.0
        for i in idx:
            for j in idx:
                for n in range(1, params.n_sites + 1):
                    f = ob.form_factor(params, kind, values[i], values[j], n, ratios[i], ratios[j])
                    d, scale = ob.dense_form_factor(params, kind, values[i], values[j], n, ratios[i], ratios[j])
                    worst = max(worst, abs(f - d) / scale)
        out.append(Check(f"form_factor_{kind}", worst, threshold))
    return out


def check_reconstruction(params: ModelParams, threshold=1e-9):
    worst = 0.0
    for flavor in ob.Flavor:
        for x in ("plus", "minus", "z", "x", "id"):
            for n in range(1, params.n_sites + 1):
                rec = ob.reconstruct_local_operator(params, x, n, flavor)
                worst = max(worst, _max_abs(rec - op.embed_site(x, n, params.n_sites)))
    string = 0.0
    for m in range(1, params.n_sites + 1):
        direct, first, second = ob.sigma_x_string(params, m)
        string = max(string, _max_abs(first - direct), _max_abs(second - direct))
    node = 0.0
    for e in params.eta:
        lhs, rhs = op.antiperiodic_quantum_determinant(params, e)
        node = max(node, _rel(lhs - rhs, _max_abs(lhs)))
    return [
        Check("reconstruction", worst, threshold),
        Check("sigma_x_string", string, threshold),
        Check("antiperiodic_quantum_determinant", node, 1e-11),
    ]


def check_hamiltonian(params: ModelParams, threshold=1e-9):
    if not params.is_homogeneous or params.n_sites < 2:
        return Check("hamiltonian", np.nan, threshold, "needs homogeneous parameters with N >= 2")
    direct = op.hamiltonian_direct(params)
    from_t = op.hamiltonian_from_transfer(params)
    return Check("hamiltonian", _rel(from_t - direct, _max_abs(direct)), threshold)


def check_root_of_unity(params: ModelParams, rng, values, threshold=1e-8):
    if sp.root_of_unity_order(params.q) is None:
        return [Check("root_of_unity", np.nan, threshold, "q is not a root of unity")]
    samples = _random_points(rng, 10)
    det = max(sp.root_of_unity_check(params, t, samples).max_rel_det for t in values)
    control = min(sp.root_of_unity_check(params, sp.perturbed(params, t), samples).max_rel_det for t in values)
    return [
        Check("root_of_unity", det, threshold),
        Check("root_of_unity_control_gap", 1e4 * det / max(control, 1e-300), 1.0),
    ]


def check_tq(params: ModelParams, rng, values, threshold=1e-8):
    if params.n_sites % 2:
        return [Check("tq_relation", np.nan, threshold, "odd N")]
    reports = [sp.tq_polynomial_check(params, t, rng) for t in values]
    bethe = [r.bethe_residuals[np.isfinite(r.bethe_residuals)] for r in reports]
    bethe_max = max((float(b.max()) for b in bethe if b.size), default=0.0)
    return [
        Check("tq_nullity", float(max(abs(r.nullity - 1) for r in reports)), 0.5),
        Check("tq_relation", max(r.tq_residual for r in reports), threshold),
        Check("bethe_equations", bethe_max, 1e-6),
    ]


def run_suite(params: ModelParams, seed: int = 0, tol: Tolerances = None, full: bool = True) -> VerifyReport:
    """Run every applicable identity at the configured size."""
    tol = tol or Tolerances()
    rng = np.random.default_rng(seed)
    report = VerifyReport()
    for c in check_ybe(params, rng):
        report.add(c)
    report.add(check_quantum_determinant(params, rng, threshold=tol.operator))
    report.add(check_commuting(params, rng))
    for c in check_normality_locus(params, rng):
        report.add(c)
    report.add(check_hamiltonian(params))

    ok, violations = validate_sov_condition(params, tol.sov_condition)
    if not ok:
        reason = f"SOV condition violated by {violations}"
        for name in ("sov_basis_eigen", "spectrum", "form_factors", "reconstruction"):
            report.add(Check(name, np.nan, 0.0, reason))
        return report

    report.add(check_sov_bases(params, rng, threshold=tol.operator))
    report.add(check_sov_actions(params, rng))
    for c in check_coupling(params, threshold=tol.operator):
        report.add(c)
    report.add(check_identity_decomposition(params, threshold=tol.operator))

    values = sp.compute_spectrum(params, rng)
    pairs = [sp.eigen_pair(params, t, rng) for t in values]
    ratios = [p.ratios for p in pairs]
    for c in check_spectrum(params, values, pairs):
        report.add(c)
    report.add(check_baxter(params, values))
    for c in check_scalar_products(params, rng, values, ratios, threshold=tol.determinant):
        report.add(c)
    if full:
        for c in check_form_factors(params, values, ratios, threshold=tol.determinant,
                                    max_pairs=None if params.n_sites <= 4 else 8):
            report.add(c)
        for c in check_reconstruction(params):
            report.add(c)
    for c in check_root_of_unity(params, rng, values, threshold=tol.determinant):
        report.add(c)
    for c in check_tq(params, rng, values, threshold=tol.determinant):
        report.add(c)
    return report
