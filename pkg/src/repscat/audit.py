"""Checks of the exact identities and decay estimates, one :class:`AuditRow` each.

The same functions back the ``audit`` subcommand and the acceptance tests.
Every row carries the measured value, the tolerance, the comparison used and
a detail record (fitted exponents next to predicted orders, convergence
tables, and so on).
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .geometry import (PhaseContext, eikonal_residual, factorization_residual,
                       free_exact_phase_derivative, predicted_eikonal_order, radius_of_f,
                       weight_inequality_sweep)
from .grid import build_grid, estimate_nodes
from .oracle import airy_smatrix, ode_smatrix
from .potential import PotentialSpec, free
from .resolvent import Resolvent
from .scattering import (DEFAULT_PPW_SCATTERING, angular, channel_smatrix, default_length, shell_rate, decomposition_check, extract_asymptotic_xi, parseval_check,
                         scattering_matrix, wave_matrix_adjoint)

DEFAULT_TOLERANCES = {
    "eikonal_exact": 1e-12,
    "eikonal_order_slack": 0.1,
    "factorization_order_slack": 0.5,
    "parseval": 1e-4,
    "norm_equality": 1e-5,
    "unitarity": 1e-5,
    "roundtrip": 1e-4,
    "airy": 1e-6,
    "ode": 1e-5,
    "xi_relation": 1e-4,
    "xi_norms": 1e-4,
    "shell_average": 1e-3,
}


@dataclasses.dataclass
class AuditRow:
    name: str
    identity: str
    measured: float
    tolerance: float
    comparison: str = "<="
    detail: dict = dataclasses.field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.measured):
            return False
        if self.comparison == "<=":
            return bool(self.measured <= self.tolerance)
        if self.comparison == ">=":
            return bool(self.measured >= self.tolerance)
        if self.comparison == "<":
            return bool(self.measured < self.tolerance)
        raise ValueError(self.comparison)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return (f"{mark}  {self.name:<34s} {self.measured:12.4e} {self.comparison} "
                f"{self.tolerance:<10.3g} [{self.identity}]")

    def as_dict(self):
        return {"name": self.name, "identity": self.identity, "measured": self.measured,
                "tolerance": self.tolerance, "comparison": self.comparison,
                "passed": self.passed, "detail": self.detail}


def _tol(tols, key):
    return (tols or {}).get(key, DEFAULT_TOLERANCES[key])


# ------------------------------------------------------------------ phase
def check_free_eikonal_exact(lams=(0.0, 0.5, 1.0), tols=None) -> AuditRow:
    """Residual of ``theta_1 = (2/3)(r + 2 lambda)^(3/2)`` for ``alpha = 1``, ``q = 0``."""
    spec = free(1.0)
    worst = 0.0
    per = {}
    for lam in lams:
        rho = np.geomspace(max(1 - 2 * lam, 0.0) + 1e-3, 1e4, 400)
        fit = eikonal_residual(lam, spec, phase=free_exact_phase_derivative(lam), rho=rho)
        scale = 0.5 * rho + abs(lam) + 0.5
        rel = float(np.max(np.abs(fit.residual) / scale))
        per[str(lam)] = rel
        worst = max(worst, rel)
    return AuditRow("eikonal_exact_free", "exact free phase for alpha = 1", worst,
                    _tol(tols, "eikonal_exact"), detail={"per_lambda": per})


def broken_phase_derivative(lam: float, alpha: float):
    """Negative control: the default phase with a wrong radial exponent."""
    return lambda rho: np.asarray(rho) ** (alpha / 2 + 0.1) + lam * np.asarray(rho) ** (-alpha / 2)


def check_eikonal_order(spec: PotentialSpec, lam: float = 1.0, phase=None, tols=None,
                        label: str = "eikonal_order") -> AuditRow:
    """Fitted decay exponent of the eikonal residual over ``f in [10, 10^3]``."""
    fit = eikonal_residual(lam, spec, phase=phase)
    predicted = predicted_eikonal_order(spec)
    slack = _tol(tols, "eikonal_order_slack")
    measured = float("inf") if fit.exact else (fit.exponent if fit.exponent is not None
                                                 else float("nan"))
    return AuditRow(f"{label}[a={spec.alpha:g},{spec.family}]",
                    "eikonal residual decay order", measured, predicted - slack, ">=",
                    detail={"fitted": fit.exponent, "raw_log_log_slope": fit.raw_exponent,
                            "predicted": predicted, "exact": fit.exact})


def shell_probe(spec: PotentialSpec, f_lo: float = 4.0, f_hi: float = 8.0):
    """Smooth probe concentrated in the shell ``f_lo <= f <= f_hi`` (both rays)."""
    a, b = radius_of_f(f_lo, spec.alpha), radius_of_f(f_hi, spec.alpha)
    e = 1 + spec.alpha / 2

    def probe(x):
        s = np.abs(x)
        t = (s - a) / (b - a)
        env = np.where((t > 0) & (t < 1), np.exp(-((t - 0.5) * 12.0) ** 2), 0.0)
        return env * np.exp(1j * s ** e / e) * (1.0 + 0.3 * np.sign(x))
    return probe


def check_factorization(spec: PotentialSpec, lam: float = 1.0, order: int = 6,
                        ppws=(12.0, 24.0, 48.0), L: float | None = None, tols=None) -> AuditRow:
    """Convergence order of the factorization residual under two mesh halvings."""
    ctx = PhaseContext.choose(spec, lam)
    L = L or (60.0 if spec.alpha < 1.4 else 120.0)
    probe = shell_probe(spec, 2.0 ** (ctx.m + 1), 2.0 ** (ctx.m + 2))
    res = []
    for k, ppw in enumerate(ppws):
        grid = build_grid(spec, 2.0, L, order=order, ppw=ppw, boost=25.0 * ppw)
        u = grid.from_function(probe)
        res.append(factorization_residual(complex(lam), u, spec, 1, ctx))
    orders = [math.log2(res[k] / res[k + 1]) for k in range(len(res) - 1)]
    return AuditRow(f"factorization_order[a={spec.alpha:g}]", "factorization identity of H - z",
                    min(orders), order - _tol(tols, "factorization_order_slack"), ">=",
                    detail={"residuals": res, "orders": orders, "ppw": list(ppws)})


def check_weights(deltas=(0.1, 0.5, 1.0)) -> AuditRow:
    sweeps = [weight_inequality_sweep(dl) for dl in deltas]
    viol = sum(s.violations for s in sweeps) + sum(0 if s.passed else 1 for s in sweeps)
    return AuditRow("weight_inequalities", "weight function inequalities", float(viol), 0.0,
                    detail={str(s.delta): dataclasses.asdict(s) for s in sweeps})


# ------------------------------------------------------------ scattering
def eigen_length(spec: PotentialSpec, lam_max: float = 2.0, max_shells: int = 8,
                 max_nodes: float = 6e5) -> float:
    """Truncation radius giving enough complete shells for the shell-average identity.

    The leading correction decays like ``2^(-gamma n)``; after one Richardson
    step the next term is roughly its square, so ``12 / gamma`` shells (at
    least three, at most ``max_shells``) bring it below ``1e-4``. Fewer
    shells are used when the grid would exceed ``max_nodes``.
    """
    shells = min(max(3, math.ceil(12.0 / shell_rate(spec))), max_shells)
    while True:
        L = default_length(spec, f_target=2.0 ** shells + 2.0)
        if shells <= 3 or estimate_nodes(spec.alpha, lam_max, L, DEFAULT_PPW_SCATTERING) <= max_nodes:
            return L
        shells -= 1


def psi_corpus(grid, n: int = 10):
    """Ten deterministic sources concentrated in ``|x| < 3``."""
    x = grid.x
    fns = [
        np.exp(-x ** 2),
        np.exp(-(x - 1.0) ** 2) * (1 + 0.5j * x),
        x * np.exp(-2 * x ** 2),
        np.exp(-(x + 1.5) ** 2 / 0.5),
        np.exp(-x ** 2 / 0.6) * np.cos(3 * x),
        np.exp(-(x - 0.5) ** 2) * np.exp(2j * x),
        (1 - x ** 2) * np.exp(-x ** 2),
        np.exp(-3 * (x - 1.2) ** 2) - 0.7j * np.exp(-3 * (x + 0.4) ** 2),
        np.exp(-x ** 2 / 0.8) * np.sin(x) ** 2,
        np.exp(-(x - 0.3) ** 2 / 0.4) * (0.2 + x ** 3),
    ]
    if grid.radial:
        s = grid.rho
        fns = [s * np.exp(-(s - c) ** 2 / w) for c, w in
               ((1.0, 0.5), (1.5, 0.3), (0.8, 0.6), (2.0, 0.4), (1.2, 0.8),
                (1.7, 0.5), (0.6, 0.3), (2.2, 0.3), (1.4, 0.2), (1.0, 0.9))]
        fns = [f * (1 + 0.3j * k) for k, f in enumerate(fns)]
    return [grid.field(f, f"psi{k}") for k, f in enumerate(fns[:n])]


def check_parseval(grid, lam: float, corpus=None, resolvent=None, tols=None) -> list:
    rv = resolvent or Resolvent(grid)
    corpus = corpus or psi_corpus(grid)
    recs = [parseval_check(grid, lam, psi, rv) for psi in corpus]
    worst = max(max(r["rel_error_plus"], r["rel_error_minus"]) for r in recs)
    gap = max(r["plus_minus_norm_gap"] for r in recs)
    tag = f"[a={grid.alpha:g},l={lam:g}]"
    return [AuditRow("parseval" + tag, "Parseval identity for the wave matrices", worst,
                     _tol(tols, "parseval"), detail={"corpus": recs}),
            AuditRow("F_plus_minus_norms" + tag, "equal norms of F+ and F-", gap,
                     _tol(tols, "norm_equality"))]


def check_smatrix(spec: PotentialSpec, lam: float, grids=None, tols=None, oracle=True,
                  ell_max: int = 3, lam_max: float | None = None) -> list:
    S = scattering_matrix(spec, lam, ell_max=ell_max, grids=grids, lam_max=lam_max)
    tag = f"[a={spec.alpha:g},{spec.family},d={spec.d},l={lam:g}]"
    rows = [AuditRow("unitarity" + tag, "unitarity of S", S.defect, _tol(tols, "unitarity")),
            AuditRow("roundtrip" + tag, "v = 2 pi i F+ psi+[v]",
                     float(np.max(S.meta["roundtrip"])), _tol(tols, "roundtrip"))]
    if oracle:
        if spec.d == 1 and spec.alpha == 1.0 and spec.is_free:
            ref = airy_smatrix(lam).S
            rows.append(AuditRow("airy_oracle" + tag, "S against the Airy closed form",
                                 float(np.max(np.abs(S.matrix - ref))), _tol(tols, "airy")))
        else:
            if spec.d == 1:
                ref = ode_smatrix(lam, spec).S
            else:
                ref = np.diag([np.ravel(ode_smatrix(lam, spec, ell=ell).S)[0]
                               for ell in range(len(S.labels))])
            rows.append(AuditRow("ode_oracle" + tag, "S against the ODE shooting oracle",
                                 float(np.max(np.abs(S.matrix - ref))), _tol(tols, "ode")))
    for r in rows:
        r.detail["S"] = S.as_dict()
    return rows


def check_eigenfunction(grid, lam: float, xi_minus=(0.6 + 0.2j, -0.3 + 0.5j), resolvent=None,
                        tols=None, S=None) -> list:
    """Round trip, ``xi_+ = S xi_-``, remainder decay and the norm identities."""
    rv = resolvent or Resolvent(grid)
    if S is None:
        S = channel_smatrix(grid, lam, rv)[0]
    xm = angular(grid, np.asarray(xi_minus)[: len(S)])
    rec = wave_matrix_adjoint(grid, lam, -1, xm, rv)
    xp, xm_ext, table = extract_asymptotic_xi(lam, rec.phi)
    rec.xi_plus, rec.xi_minus = xp, xm_ext
    rep = decomposition_check(lam, rec)
    rec_p = wave_matrix_adjoint(grid, lam, 1, xp, rv)
    xp2, _, _ = extract_asymptotic_xi(lam, rec_p.phi)
    tag = f"[a={grid.alpha:g},l={lam:g}]"
    rel = lambda a, b: float(np.linalg.norm(a - b) / np.linalg.norm(b))  # noqa: E731
    return [
        AuditRow("xi_plus_roundtrip" + tag, "phi = F+* xi+ returns xi+",
                 rel(xp2.values, xp.values), _tol(tols, "xi_relation"),
                 detail={"xi_plus": xp.as_dict()}),
        AuditRow("xi_plus_eq_S_xi_minus" + tag, "xi+ = S xi-",
                 rel(xp.values, S @ xm.values), _tol(tols, "xi_relation"),
                 detail={"xi_minus_recovered": rel(xm_ext.values, xm.values)}),
        AuditRow("remainder_slope" + tag, "phi - phi+[xi+] - phi-[xi-] in B0*",
                 rep.remainder_slope, 0.0, "<",
                 detail={"profile": rep.remainder_profile.tolist()}),
        AuditRow("xi_norm_equality" + tag, "|xi+| = |xi-|", rep.norm_gap,
                 _tol(tols, "xi_norms")),
        AuditRow("shell_average" + tag, "shell average of 2 pi |phi|^2",
                 rep.shell_extrapolated_error, _tol(tols, "shell_average"),
                 detail={"raw_errors": rep.shell_errors.tolist(),
                         "raw_last_shell": float(rep.shell_errors[-1]),
                         "sequence": rep.shell_averages.tolist(), "target": rep.shell_target,
                         "extrapolation": "one Richardson step with the known shell rate"}),
    ]


__all__ = [
    "AuditRow", "DEFAULT_TOLERANCES", "check_free_eikonal_exact", "check_eikonal_order",
    "broken_phase_derivative", "check_factorization", "check_weights", "psi_corpus",
    "check_parseval", "check_smatrix", "check_eigenfunction", "shell_probe", "eigen_length",
]
