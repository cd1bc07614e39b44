"""Batch front door: ``repscat {solve,smatrix,eigenfun,audit,sweep}``.

Every subcommand reads a flat ``key = value`` configuration (grammar in
:mod:`repscat.reports`), writes JSON reports and CSV mirrors carrying a
``schema_version`` field into ``--out``, and exits with

* ``0`` on success,
* ``2`` when the configuration or tolerance overrides fail validation,
* ``3`` when a numerical flag is raised or an audit row fails.

Diagnostics go to standard error. Runs are deterministic: the only random
draws come from ``numpy.random.default_rng(seed)`` with the configured seed.
"""
from __future__ import annotations

import argparse
import pathlib
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import audit as au
from .grid import GridError
from .oracle import airy_smatrix, ode_smatrix
from .potential import PotentialSpec, SpecError, from_mapping
from .reports import (ConfigError, energies, load_config, parse_config_text, write_csv,
                      write_field, write_json)
from .resolvent import Resolvent, SpectralPoint, weighted_norm
from .scattering import (DEFAULT_PPW_SCATTERING, ScatteringError, angular, linearity_check,
                         parseval_check, scattering_grid, smatrix_sweep,
                         wave_matrix_adjoint)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
COMMANDS = ("solve", "smatrix", "eigenfun", "audit", "sweep")


class ValidationError(ValueError):
    """Configuration rejected before any computation."""


# ------------------------------------------------------------------ setup
class Run:
    """Validated configuration plus the output directory and worker count."""

    def __init__(self, cfg: dict, out: pathlib.Path, workers: int, tols: dict):
        self.cfg = cfg
        self.out = out
        self.workers = max(1, int(workers))
        self.tols = tols
        pot = cfg.get("potential", {})
        if "alpha" not in pot:
            raise ValidationError("missing required field 'potential.alpha'")
        try:
            self.spec: PotentialSpec = from_mapping(pot)
            self.spec.check()
        except (SpecError, TypeError, ValueError) as exc:
            raise ValidationError(str(exc)) from exc
        grid = cfg.get("grid", {})
        self.L = grid.get("L")
        self.ppw = float(grid.get("ppw", DEFAULT_PPW_SCATTERING))
        self.order = int(grid.get("order", 6))
        self.ell_max = int(grid.get("ell_max", 8 if self.spec.d > 1 else 0))
        self.job = cfg.get("job", {})
        self.seed = int(cfg.get("seed", {}).get("value", self.job.get("seed", 0)))
        try:
            self.lams = energies(cfg.get("spectral", {}))
        except ConfigError as exc:
            raise ValidationError(str(exc)) from exc
        eps = cfg.get("spectral", {}).get("eps", [])
        self.eps = [float(e) for e in (eps if isinstance(eps, list) else [eps])]

    def require_energies(self):
        if not self.lams:
            raise ValidationError("spectral block has an empty energy list "
                                  "(set spectral.lambdas or spectral.range)")
        if any(not (lam > 0) for lam in self.lams):
            raise ValidationError(f"energies must be positive: {self.lams}")

    def grid(self, lam_max: float, ell: int = 0, L=None):
        return scattering_grid(self.spec, lam_max, L if L is not None else self.L, ell=ell,
                               ppw=self.ppw, order=self.order,
                               lam_min=min(self.lams) if self.lams else None)

    def channels(self):
        return [0] if self.spec.d == 1 else list(range(self.ell_max + 1))

    def tol(self, key):
        return self.tols.get(key, au.DEFAULT_TOLERANCES[key])

    def provenance(self):
        return {"potential": self.spec.describe(), "seed": self.seed,
                "grid": {"L": self.L, "ppw": self.ppw, "order": self.order,
                         "ell_max": self.ell_max}}


def _load_tolerances(path) -> dict:
    if path is None:
        return {}
    raw = load_config(path)
    flat = {}
    for block, items in raw.items():
        for key, val in items.items():
            name = key if block in ("job", "tol", "tolerance") else f"{block}.{key}"
            if name not in au.DEFAULT_TOLERANCES:
                raise ValidationError(f"unknown tolerance {name!r}; known: "
                                      f"{sorted(au.DEFAULT_TOLERANCES)}")
            if not isinstance(val, (int, float)) or isinstance(val, bool) or not val >= 0:
                raise ValidationError(f"tolerance {name!r} must be a non-negative number")
            flat[name] = float(val)
    return flat


def _oracle_diff(spec: PotentialSpec, lam: float, S: np.ndarray, labels) -> float | None:
    if spec.d == 1 and spec.alpha == 1.0 and spec.is_free:
        return float(np.max(np.abs(S - airy_smatrix(lam).S)))
    if spec.d == 1:
        return float(np.max(np.abs(S - ode_smatrix(lam, spec).S)))
    ref = [np.ravel(ode_smatrix(lam, spec, ell=ell).S)[0] for ell in labels]
    return float(np.max(np.abs(np.diag(S) - np.asarray(ref))))


def _corpus_index(run: Run, n: int) -> list:
    sel = run.job.get("psi", list(range(n)))
    sel = sel if isinstance(sel, list) else [sel]
    if any(not isinstance(k, int) or not 0 <= k < n for k in sel):
        raise ValidationError(f"job.psi must list corpus indices in 0..{n - 1}")
    return sel


# --------------------------------------------------------------- commands
def cmd_solve(run: Run) -> int:
    """Limiting resolvent ``R(lambda +- i0) psi`` with Parseval and linearity diagnostics."""
    run.require_energies()
    grid = run.grid(max(run.lams))
    rv = Resolvent(grid)
    corpus = au.psi_corpus(grid)
    sel = _corpus_index(run, len(corpus))
    rows, fields = [], []
    flags = []
    for lam in run.lams:
        for k in sel:
            psi = corpus[k]
            rec = parseval_check(grid, lam, psi, rv)
            rel = max(rec["rel_error_plus"], rec["rel_error_minus"])
            row = {"lambda": lam, "psi": k, "parseval_rel_error": rel,
                   "parseval_rel_error_plus": rec["rel_error_plus"],
                   "parseval_rel_error_minus": rec["rel_error_minus"],
                   "norm_gap": rec["plus_minus_norm_gap"], "density": rec["density"][0]}
            for sign in (1, -1):
                for eps in [0.0] + run.eps:
                    u = grid.field(rv.apply(psi.values, SpectralPoint(lam, eps, sign)))
                    tag = f"R_l{lam:g}_e{eps:g}_{'p' if sign > 0 else 'm'}_psi{k}"
                    path = write_field(run.out / "fields" / f"{tag}.bin", u,
                                       extra={"lambda": lam, "eps": eps, "sign": sign, "psi": k})
                    fields.append(str(path.relative_to(run.out)))
                    if eps == 0.0:
                        row[f"weighted_norm_{'plus' if sign > 0 else 'minus'}"] = \
                            weighted_norm(u, -0.75)
            if rel > run.tol("parseval"):
                flags.append(f"parseval lambda={lam:g} psi={k}: {rel:.3e}")
            rows.append(row)
        lin = linearity_check(grid, lam, rv, seed=run.seed)
        rows[-1]["linearity"] = max(lin.values())
    report = {"command": "solve", **run.provenance(), "rows": rows, "fields": fields,
              "parseval_rel_error": max(r["parseval_rel_error"] for r in rows),
              "flags": flags, "L": grid.L, "nodes": grid.n}
    write_json(run.out / "solve.json", report)
    write_csv(run.out / "solve.csv", rows, ["lambda", "psi", "parseval_rel_error", "norm_gap",
                                           "density", "weighted_norm_plus",
                                           "weighted_norm_minus"])
    return _finish(flags)


def _smatrix_rows(run: Run, rep, oracle: bool):
    rows, flags = [], []
    for lam, S in zip(rep.lams, rep.matrices):
        diff = _oracle_diff(run.spec, float(lam), S.matrix, S.labels) if oracle else None
        row = {"lambda": float(lam), "defect": S.defect,
               "roundtrip": float(np.max(S.meta["roundtrip"])),
               "oracle_diff": "" if diff is None else diff,
               "parity_commutator": S.parity_commutator, "flags": ";".join(S.flags),
               "matrix_re": S.matrix.real.tolist(), "matrix_im": S.matrix.imag.tolist(),
               "labels": list(S.labels)}
        rows.append(row)
        if S.defect > run.tol("unitarity"):
            flags.append(f"unitarity defect {S.defect:.3e} at lambda={lam:g}")
        if row["roundtrip"] > run.tol("roundtrip"):
            flags.append(f"round trip {row['roundtrip']:.3e} at lambda={lam:g}")
        key = "airy" if run.spec.alpha == 1.0 and run.spec.is_free and run.spec.d == 1 else "ode"
        if diff is not None and diff > run.tol(key):
            flags.append(f"oracle difference {diff:.3e} at lambda={lam:g}")
    return rows, flags


def cmd_smatrix(run: Run) -> int:
    """``S(lambda)`` on the configured energies with defects and oracle differences."""
    run.require_energies()
    rep = smatrix_sweep(run.spec, run.lams, ppw=run.ppw, L=run.L, ell_max=run.ell_max,
                        workers=run.workers)
    rows, flags = _smatrix_rows(run, rep, bool(run.job.get("oracle", True)))
    write_json(run.out / "smatrix.json", {"command": "smatrix", **run.provenance(),
                                          "rows": rows, "flags": flags})
    write_csv(run.out / "smatrix.csv", rows, ["lambda", "defect", "roundtrip", "oracle_diff",
                                             "parity_commutator", "flags"])
    return _finish(flags)


def cmd_sweep(run: Run) -> int:
    """Energy sweep: continuity of ``S`` and of weighted resolvent norms."""
    run.require_energies()
    if len(run.lams) < 3:
        raise ValidationError("sweep needs at least three energies")
    rep = smatrix_sweep(run.spec, run.lams, ppw=run.ppw, L=run.L, ell_max=run.ell_max,
                        workers=run.workers)
    rows, flags = _smatrix_rows(run, rep, bool(run.job.get("oracle", False)))
    grid = run.grid(max(run.lams))
    rv = Resolvent(grid)
    psi = au.psi_corpus(grid)[0]

    def norms(lam):
        u = grid.field(rv.apply(psi.values, SpectralPoint(lam, 0.0, 1)))
        return weighted_norm(u, -0.75)

    with ThreadPoolExecutor(run.workers) as ex:
        wn = np.array(list(ex.map(norms, rep.lams)))
    for row, w, k in zip(rows, wn, range(len(rows))):
        row["weighted_resolvent_norm"] = float(w)
        row["step_to_next"] = float(rep.steps[k]) if k < rep.steps.size else ""
    spikes = [int(k) for k in range(1, wn.size - 1)
              if wn[k] > 3.0 * max(wn[k - 1], wn[k + 1])]
    if rep.outliers:
        flags.append(f"Hoelder outliers at steps {rep.outliers}")
    if spikes:
        flags.append(f"weighted resolvent norm spikes at {spikes}")
    if not (rep.holder_omega > 0):
        flags.append(f"fitted Hoelder exponent {rep.holder_omega:.3g} is not positive")
    write_json(run.out / "sweep.json", {
        "command": "sweep", **run.provenance(), "rows": rows, "flags": flags,
        "holder": {"C": rep.holder_C, "omega": rep.holder_omega, "outliers": rep.outliers},
        "weighted_norm_spikes": spikes})
    write_csv(run.out / "sweep.csv", rows, ["lambda", "defect", "step_to_next",
                                           "weighted_resolvent_norm", "flags"])
    return _finish(flags)


def _xi_minus(run: Run, nch: int):
    re = run.job.get("xi_minus_re", [0.6, -0.3][:nch])
    im = run.job.get("xi_minus_im", [0.2, 0.5][:nch])
    re = re if isinstance(re, list) else [re]
    im = im if isinstance(im, list) else [im]
    if len(re) != nch or len(im) != nch:
        raise ValidationError(f"job.xi_minus_re/im need {nch} entries")
    return np.array(re, float) + 1j * np.array(im, float)


def cmd_eigenfun(run: Run) -> int:
    """Generalized eigenfunction ``F^-(lambda)^* xi_-`` and its asymptotic data."""
    run.require_energies()
    ell = int(run.job.get("ell", 0))
    L = run.L if run.L is not None else au.eigen_length(run.spec, max(run.lams))
    grid = run.grid(max(run.lams), ell=ell, L=L)
    rv = Resolvent(grid)
    xi = _xi_minus(run, 2 if run.spec.d == 1 else 1)
    records, all_rows, manifest = [], [], []
    for lam in run.lams:
        rows = au.check_eigenfunction(grid, lam, xi, rv, tols=run.tols)
        all_rows += rows
        phi = wave_matrix_adjoint(grid, lam, -1, angular(grid, xi), rv).phi
        path = write_field(run.out / "fields" / f"phi_l{lam:g}.bin", phi,
                           extra={"lambda": lam, "xi_minus_re": xi.real, "xi_minus_im": xi.imag})
        manifest.append({"lambda": lam, "field": str(path.relative_to(run.out))})
        records.append({"lambda": lam, "rows": [r.as_dict() for r in rows]})
    write_json(run.out / "eigenfun.json", {"command": "eigenfun", **run.provenance(),
                                           "L": grid.L, "ell": ell, "records": records,
                                           "manifest": manifest})
    write_csv(run.out / "eigenfun.csv", [r.as_dict() for r in all_rows],
              ["name", "identity", "measured", "tolerance", "comparison", "passed"])
    _print_rows(all_rows)
    return EXIT_OK if all(r.passed for r in all_rows) else EXIT_NUMERICAL


def audit_rows(run: Run) -> list:
    """The identity suite for the configured potential."""
    spec = run.spec
    lams = run.lams or [1.0]
    rows = [au.check_free_eikonal_exact(tols=run.tols)]
    phase = None
    if run.job.get("broken_phase", False):
        phase = au.broken_phase_derivative(lams[0], spec.alpha)
    rows.append(au.check_eikonal_order(spec, lams[0], phase=phase, tols=run.tols,
                                       label="eikonal_order_broken" if phase else "eikonal_order"))
    if spec.d == 1:
        rows.append(au.check_factorization(spec, lams[0], tols=run.tols))
    rows.append(au.check_weights())
    lam_max = max(lams)
    grids = {ell: run.grid(lam_max, ell=ell) for ell in run.channels()}

    def per_energy(lam):
        out = []
        for ell, g in grids.items():
            out += au.check_parseval(g, lam, tols=run.tols)
        out += au.check_smatrix(spec, lam, grids=dict(grids), tols=run.tols,
                                ell_max=run.ell_max, lam_max=lam_max)
        return out

    with ThreadPoolExecutor(run.workers) as ex:
        for chunk in ex.map(per_energy, lams):
            rows += chunk
    if run.job.get("eigenfunction", True):
        L = au.eigen_length(spec, lam_max)
        g = run.grid(lam_max, L=L)
        xi = _xi_minus(run, 2 if spec.d == 1 else 1)
        rows += au.check_eigenfunction(g, lams[0], xi, tols=run.tols)
    return rows


def cmd_audit(run: Run) -> int:
    rows = audit_rows(run)
    write_json(run.out / "audit.json", {"command": "audit", **run.provenance(),
                                        "rows": [r.as_dict() for r in rows],
                                        "all_passed": all(r.passed for r in rows)})
    table = []
    for r in rows:
        d = r.as_dict()
        d["fitted"] = r.detail.get("fitted", "")
        d["predicted"] = r.detail.get("predicted", "")
        d["status"] = "PASS" if r.passed else "FAIL"
        table.append(d)
    write_csv(run.out / "audit.csv", table, ["name", "identity", "measured", "tolerance",
                                            "comparison", "status", "fitted", "predicted"])
    _print_rows(rows)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_NUMERICAL


# ---------------------------------------------------------------- helpers
def _print_rows(rows):
    for r in rows:
        print(r.line())


def _finish(flags) -> int:
    for f in flags:
        print(f"numerical flag: {f}", file=sys.stderr)
    return EXIT_NUMERICAL if flags else EXIT_OK


HANDLERS = {"solve": cmd_solve, "smatrix": cmd_smatrix, "eigenfun": cmd_eigenfun,
            "audit": cmd_audit, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="repscat", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=pathlib.Path, help="flat key = value configuration file")
    p.add_argument("--out", type=pathlib.Path, default=pathlib.Path("repscat-out"),
                   help="output directory")
    p.add_argument("--workers", type=int, default=1, help="worker threads over energies")
    p.add_argument("--tol-overrides", type=pathlib.Path, default=None,
                   help="key = value file overriding audit tolerances")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ValidationError("--workers must be at least 1")
        cfg = load_config(args.config) if args.config else parse_config_text("")
        if args.config is None and args.command == "audit":
            cfg = {"potential": {"alpha": 1.0}, "spectral": {"lambdas": [1.0]}}
        tols = _load_tolerances(args.tol_overrides)
        run = Run(cfg, args.out, args.workers, tols)
        args.out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](run)
    except (ValidationError, ConfigError, GridError) as exc:
        print(f"repscat: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ScatteringError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"repscat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
