"""Command-line entry point: ``xxz-sov <command> --config cfg.json``.

Exit codes: 0 success, 1 a check failed, 2 bad configuration or arguments,
3 SOV condition violated, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import observables as ob
from . import operators as op
from . import sov
from . import spectrum as sp
from .errors import ConditioningError, ConvergenceError, SingularMatrixError, SovConditionError, UnsupportedError
from .params import ModelParams, Tolerances, complex_to_json, validate_sov_condition
from .verify import run_suite

log = logging.getLogger("xxz_sov")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOV, EXIT_NUMERIC = 0, 1, 2, 3, 4
COMMANDS = ("spectrum", "scalar-product", "form-factor", "hamiltonian", "verify")
N_CAP = 8


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    params: ModelParams
    command: str
    tolerances: Tolerances = field(default_factory=Tolerances)
    tol: float | None = None
    output: Path | None = None
    fmt: str = "json"
    seed: int = 0
    operator: str = "sigma_z"
    sites: list | None = None
    dump_operator: complex | None = None
    dump_sov_basis: bool = False
    dump_dir: Path = Path(".")

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.command == "form-factor":
            if self.operator not in ob.FORM_FACTORS:
                raise ConfigError(f"operator must be one of {sorted(ob.FORM_FACTORS)}, got {self.operator!r}")
            sites = self.sites or list(range(1, self.params.n_sites + 1))
            bad = [s for s in sites if not 1 <= s <= self.params.n_sites]
            if bad:
                raise ConfigError(f"sites out of range: {bad}")
            self.sites = sites


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("XXZ_SOV_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _require_sov(params: ModelParams, tol: Tolerances):
    ok, violations = validate_sov_condition(params, tol.sov_condition)
    if not ok:
        raise SovConditionError(violations)


def _spectrum_with_pairs(cfg: RunConfig):
    _require_sov(cfg.params, cfg.tolerances)
    rng = np.random.default_rng(cfg.seed)
    values = sp.compute_spectrum(cfg.params, rng)
    seeds = rng.integers(2**31, size=len(values))
    pairs = _pmap(lambda ts: sp.eigen_pair(cfg.params, ts[0], int(ts[1])), zip(values, seeds))
    return values, pairs


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def run_spectrum(cfg: RunConfig):
    values, pairs = _spectrum_with_pairs(cfg)
    tol = cfg.tol if cfg.tol is not None else 1e-9
    records = []
    for t, p in zip(values, pairs):
        rec = t.to_dict()
        rec["fingerprint"] = t.label()
        rec["verify_residual"] = p.verify_residual
        records.append(rec)
    ok = len(values) == cfg.params.dim and all(t.residual < tol and p.verify_residual < tol for t, p in zip(values, pairs))
    doc = {"params": cfg.params.to_dict(), "count": len(values), "passed": ok, "eigenvalues": records}
    rows = [
        [t.label(), i, complex(c).real, complex(c).imag, t.residual, p.verify_residual]
        for t, p in zip(values, pairs)
        for i, c in enumerate(t.coeffs, start=1)
    ]
    header = ["t_fingerprint", "b", "coeff_re", "coeff_im", "residual", "verify_residual"]
    return ok, doc, (header, rows)


def run_scalar_product(cfg: RunConfig):
    values, pairs = _spectrum_with_pairs(cfg)
    tol = cfg.tol if cfg.tol is not None else cfg.tolerances.determinant
    params = cfg.params
    states = [(ob.SeparateState.eigenstate("left", p.ratios), ob.SeparateState.eigenstate("right", p.ratios)) for p in pairs]

    def one(ij):
        i, j = ij
        formula = ob.scalar_product(params, states[i][0], states[j][1])
        left, right = pairs[i].left_state, pairs[j].right_state
        dense = complex(left @ right)
        scale = float(np.sqrt(np.sum(np.abs(left) ** 2) * np.sum(np.abs(right) ** 2)))
        return values[i].label(), values[j].label(), formula, dense, abs(formula - dense) / scale

    results = _pmap(one, [(i, j) for i in range(len(values)) for j in range(len(values))])
    return _pairwise_output(cfg, results, tol, "bracket")


def run_form_factor(cfg: RunConfig):
    values, pairs = _spectrum_with_pairs(cfg)
    tol = cfg.tol if cfg.tol is not None else cfg.tolerances.determinant
    params, kind = cfg.params, cfg.operator

    def one(ijn):
        i, j, n = ijn
        ri, rj = pairs[i].ratios, pairs[j].ratios
        formula = ob.form_factor(params, kind, values[i], values[j], n, ri, rj)
        dense, scale = ob.dense_form_factor(params, kind, values[i], values[j], n, ri, rj)
        return values[i].label(), values[j].label(), kind, n, formula, dense, abs(formula - dense) / scale

    jobs = [(i, j, n) for i in range(len(values)) for j in range(len(values)) for n in cfg.sites]
    results = _pmap(one, jobs)
    header = ["t_fingerprint", "tp_fingerprint", "operator", "site", "re", "im", "dense_re", "dense_im", "rel_err"]
    rows = [[a, b, k, n, f.real, f.imag, d.real, d.imag, e] for a, b, k, n, f, d, e in results]
    ok = all(r[-1] < tol for r in rows)
    doc = {
        "params": params.to_dict(),
        "operator": kind,
        "passed": ok,
        "rows": [dict(zip(header, r)) for r in rows],
    }
    return ok, doc, (header, rows)


def _pairwise_output(cfg, results, tol, label):
    header = ["t_fingerprint", "tp_fingerprint", "re", "im", "dense_re", "dense_im", "rel_err"]
    rows = [[a, b, f.real, f.imag, d.real, d.imag, e] for a, b, f, d, e in results]
    ok = all(r[-1] < tol for r in rows)
    doc = {"params": cfg.params.to_dict(), "quantity": label, "passed": ok, "rows": [dict(zip(header, r)) for r in rows]}
    return ok, doc, (header, rows)


def run_hamiltonian(cfg: RunConfig):
    params = cfg.params
    tol = cfg.tol if cfg.tol is not None else 1e-9
    direct = op.hamiltonian_direct(params)
    from_t = op.hamiltonian_from_transfer(params)
    resid = float(np.abs(from_t - direct).max() / np.abs(direct).max())
    ok = resid < tol
    doc = {
        "params": params.to_dict(),
        "relative_difference": resid,
        "passed": ok,
        "hamiltonian": op.operator_to_json(direct, params.n_sites, "H"),
    }
    return ok, doc, (["quantity", "value"], [["relative_difference", resid]])


def run_verify(cfg: RunConfig):
    report = run_suite(cfg.params, cfg.seed, cfg.tolerances)
    doc = {"params": cfg.params.to_dict(), **report.to_dict()}
    rows = [[c.name, c.residual, c.threshold, c.passed, c.skipped] for c in report.checks]
    return report.passed, doc, (["check", "residual", "threshold", "passed", "skipped"], rows)


RUNNERS = {
    "spectrum": run_spectrum,
    "scalar-product": run_scalar_product,
    "form-factor": run_form_factor,
    "hamiltonian": run_hamiltonian,
    "verify": run_verify,
}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _json_default(obj):
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_json(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, default=_json_default, allow_nan=False) + "\n"


def _sanitize(doc):
    if isinstance(doc, dict):
        return {k: _sanitize(v) for k, v in doc.items()}
    if isinstance(doc, (list, tuple)):
        return [_sanitize(v) for v in doc]
    if isinstance(doc, float) and not np.isfinite(doc):
        return None
    return doc


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _write(text: str, path: Path | None):
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _dumps_side(cfg: RunConfig):
    if cfg.dump_operator is not None:
        mat = op.transfer_antiperiodic(cfg.params, cfg.dump_operator)
        doc = op.operator_to_json(mat, cfg.params.n_sites, f"Tbar({cfg.dump_operator})")
        (cfg.dump_dir / "tbar_operator.json").write_text(dumps(doc))
    if cfg.dump_sov_basis:
        _require_sov(cfg.params, cfg.tolerances)
        out = {"coupling": [complex_to_json(m) for m in sov.coupling_data(cfg.params).m_diag]}
        for side in ("left", "right"):
            basis = sov.build_sov_basis(cfg.params, side, "D")
            out[side] = {
                str(j): {
                    "h": list(map(int, sov.kappa_inv(j, cfg.params.n_sites))),
                    "state": [complex_to_json(z) for z in basis.states[j - 1]],
                }
                for j in range(1, cfg.params.dim + 1)
            }
            out[f"{side}_norm_constant"] = complex_to_json(basis.norm_constant)
        (cfg.dump_dir / "sov_basis.json").write_text(dumps(out))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xxz-sov", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="model parameter JSON document")
    parser.add_argument("--output", help="output path; .csv selects CSV, anything else JSON")
    parser.add_argument("--format", choices=("json", "csv"), help="override the output format")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tol", type=float, help="pass/fail tolerance for the command")
    parser.add_argument("--operator", default="sigma_z", help="form-factor operator: sigma_minus or sigma_z")
    parser.add_argument("--sites", help="comma-separated site list for form-factor (default all)")
    parser.add_argument("--dump-operator", metavar="LAMBDA", help="also write Tbar(LAMBDA) to tbar_operator.json")
    parser.add_argument("--dump-sov-basis", action="store_true", help="also write the D-bases to sov_basis.json")
    parser.add_argument("--dump-dir", default=".", help="directory for --dump-* files")
    parser.add_argument("--allow-large", action="store_true", help=f"permit N > {N_CAP}")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _load_config(args) -> RunConfig:
    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        params = ModelParams.from_dict(doc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if params.n_sites > N_CAP and not args.allow_large:
        raise ConfigError(f"N = {params.n_sites} exceeds the cap {N_CAP}; pass --allow-large")
    tol_doc = doc.get("tolerances", {})
    try:
        tolerances = Tolerances(**tol_doc)
    except TypeError as exc:
        raise ConfigError(f"bad tolerances: {exc}") from exc
    try:
        sites = [int(s) for s in args.sites.split(",")] if args.sites else None
        lam = complex(args.dump_operator.replace(" ", "")) if args.dump_operator else None
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if lam == 0:
        raise ConfigError("--dump-operator needs a nonzero spectral parameter")
    output = Path(args.output) if args.output else None
    fmt = args.format or ("csv" if output is not None and output.suffix == ".csv" else "json")
    return RunConfig(
        params=params,
        command=args.command,
        tolerances=tolerances,
        tol=args.tol,
        output=output,
        fmt=fmt,
        seed=args.seed,
        operator=args.operator,
        sites=sites,
        dump_operator=lam,
        dump_sov_basis=args.dump_sov_basis,
        dump_dir=Path(args.dump_dir),
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _load_config(args)
        ok, doc, (header, rows) = RUNNERS[cfg.command](cfg)
        _dumps_side(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SovConditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOV
    except UnsupportedError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, SingularMatrixError, ConditioningError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = to_csv(header, rows) if cfg.fmt == "csv" else dumps(_sanitize(doc))
    _write(text, cfg.output)
    if not ok:
        log.warning("one or more checks failed")
    return EXIT_OK if ok else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
