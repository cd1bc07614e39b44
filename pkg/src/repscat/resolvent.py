"""Resolvents ``R(z) = (H - z)^-1`` and their boundary values on the real axis.

The boundary values ``R(lambda +- i0)`` are computed by two independent
routes: (a) a sequence ``eps_k = eps_0 2^-k`` of complex shifts followed by
polynomial (Richardson) extrapolation to ``eps = 0``, and (b) a direct solve
at ``eps = 0`` with an outgoing/incoming closure. Diagnostics tabulate the
weighted quotients controlled by the limiting absorption principle and the
dyadic-shell profiles of the radiation condition.
"""
from __future__ import annotations

import dataclasses
import logging

import numpy as np

from .geometry import PhaseContext, eval_phase_a
from .grid import BandedOperator, ChannelGrid, WaveField, assemble_hamiltonian

log = logging.getLogger(__name__)


class ResolventError(RuntimeError):
    """Numerical failure or disagreement that must not be hidden."""


@dataclasses.dataclass(frozen=True)
class SpectralPoint:
    """Spectral parameter ``z = lambda + i sign eps``."""

    lam: float
    eps: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if not (0.0 <= self.eps < 1.0):
            raise ValueError("eps must lie in [0, 1)")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def z(self) -> complex:
        return complex(self.lam, self.sign * self.eps)


@dataclasses.dataclass
class ResolventResult:
    field: WaveField
    point: SpectralPoint
    bc: str
    solver_residual: float
    boundary_residual: float
    extrapolation: dict | None = None
    flags: list = dataclasses.field(default_factory=list)

    @property
    def values(self):
        return self.field.values


class Resolvent:
    """Factorized operators on one grid, cached by ``(z, sign, closure)``."""

    def __init__(self, grid: ChannelGrid, bc: str = "layer", cache_size: int = 8):
        self.grid = grid
        self.bc = bc
        self._ops: dict = {}
        self._cache_size = cache_size

    def operator(self, z, sign, bc=None) -> BandedOperator:
        bc = bc or self.bc
        key = (complex(z), int(sign), bc)
        op = self._ops.get(key)
        if op is None:
            op = assemble_hamiltonian(self.grid, z=z, sign=sign, bc=bc)
            op.factor()
            if len(self._ops) >= self._cache_size:
                self._ops.pop(next(iter(self._ops)))
            self._ops[key] = op
        return op

    def apply(self, psi, point: SpectralPoint, bc=None, full=False):
        """Values of ``R(z) psi`` on the physical nodes (``psi`` 1-D or 2-D)."""
        bc = bc or self.bc
        if point.eps == 0 and bc == "dirichlet":
            raise ResolventError("the self-adjoint truncation needs eps > 0")
        op = self.operator(point.z, point.sign if point.eps == 0 or bc == "layer" else
                           int(np.sign(point.sign)), bc)
        u = op.solve_physical(np.asarray(psi, complex))
        return u if full else u[op.phys_slice]

    def solve(self, psi: WaveField, point: SpectralPoint, bc=None) -> ResolventResult:
        bc = bc or self.bc
        op = self.operator(point.z, point.sign, bc)
        full = op.solve_physical(psi.values)
        u = full[op.phys_slice]
        rhs = np.zeros(op.size, complex)
        rhs[op.phys_slice] = op.jac[op.phys_slice] * psi.values
        res = op.matvec(full) - rhs
        denom = np.linalg.norm(rhs) or 1.0
        solver_res = float(np.linalg.norm(res) / denom)
        field = psi.with_values(u, label=f"R({point.z:.4g})psi")
        b_res = boundary_residual(field, point) if point.eps == 0 else 0.0
        out = ResolventResult(field=field, point=point, bc=bc, solver_residual=solver_res,
                              boundary_residual=b_res)
        if solver_res > 1e-8:
            out.flags.append("solver_residual")
        return out


def solve_resolvent(grid: ChannelGrid, point: SpectralPoint, psi: WaveField, bc: str = "layer",
                    resolvent: Resolvent | None = None) -> ResolventResult:
    """``R(z) psi`` by a banded direct solve.

    ``eps = 0`` needs a radiating closure (``layer``, ``dtn`` or
    ``impedance``); the self-adjoint ``dirichlet`` truncation needs ``eps > 0``.
    """
    if point.eps == 0 and bc == "dirichlet":
        raise ResolventError("eps = 0 requires a radiating closure")
    rv = resolvent or Resolvent(grid, bc)
    return rv.solve(psi, point, bc)


def boundary_residual(u: WaveField, point: SpectralPoint, width: int = 4) -> float:
    """Relative radiation residual ``|(A -+ a) u| / |a u|`` at the last physical nodes."""
    grid = u.grid
    ctx = PhaseContext(spec=grid.spec, m=0)
    vals = u.values
    Au = grid.pf(vals) - 0.5j * grid.lap_f * vals
    out = 0.0
    for s in ((1, -1) if not grid.radial else (1,)):
        idx = np.flatnonzero(grid.side == s)
        idx = idx[np.argsort(grid.rho[idx])][-(width + 4):-4]
        a = eval_phase_a(point.lam, grid.rho[idx], point.sign, ctx, s, with_cutoff=False)
        num = np.abs(Au[idx] - point.sign * a * vals[idx])
        den = np.abs(a * vals[idx]) + 1e-300
        out = max(out, float(np.max(num / den)))
    return out


# ----------------------------------------------------------------- weights
def weighted_norm(u: WaveField, s: float) -> float:
    """``|| f^s u ||_{L^2}``."""
    return float(np.sqrt(np.sum(u.grid.weights * (u.grid.f ** s * np.abs(u.values)) ** 2)))


def _richardson(eps, values, order):
    """Neville extrapolation to ``eps = 0`` using the last ``order + 1`` points."""
    eps = np.asarray(eps[-(order + 1):], float)
    vals = [np.asarray(v, complex) for v in values[-(order + 1):]]
    table = [vals]
    n = len(vals)
    for k in range(1, n):
        prev = table[-1]
        row = []
        for i in range(n - k):
            e0, e1 = eps[i], eps[i + k]
            row.append((e0 * prev[i + 1] - e1 * prev[i]) / (e0 - e1))
        table.append(row)
    return table[-1][0], table


def limiting_resolvent(grid: ChannelGrid, lam: float, sign: int, psi: WaveField,
                       eps0: float = 0.1, halvings: int = 6, order: int = 2,
                       reference_bc: str = "layer", compare_bc: str = "impedance",
                       tol: float = 1e-5, resolvent: Resolvent | None = None,
                       strict: bool = False) -> ResolventResult:
    """``R(lambda +- i0) psi`` with a cross-route discrepancy record.

    Route (a) extrapolates ``R(lambda +- i eps_k) psi`` (absorbing layer,
    ``eps_k = eps0 2^-k``) to ``eps = 0`` by Richardson's method of the
    given order; route (b) solves at ``eps = 0`` with ``reference_bc``; the
    ``compare_bc`` closure is reported alongside. Discrepancies are measured
    in the weighted norm ``|| f^-1 . ||`` relative to the reference. With
    ``strict=True`` a discrepancy above ``tol`` raises.
    """
    rv = resolvent or Resolvent(grid, reference_bc)
    eps = [eps0 * 2.0 ** (-k) for k in range(halvings + 1)]
    seq = [rv.apply(psi.values, SpectralPoint(lam, e, sign), bc="layer") for e in eps]
    extrap, table = _richardson(eps, seq, order)
    direct = rv.solve(psi, SpectralPoint(lam, 0.0, sign), bc=reference_bc)
    ref_norm = weighted_norm(direct.field, -1.0) or 1.0

    def wdist(a):
        return weighted_norm(psi.with_values(a - direct.values), -1.0) / ref_norm

    record = {
        "eps": eps,
        "route_a_vs_b": wdist(extrap),
        "last_raw_vs_b": wdist(seq[-1]),
        "richardson_order": order,
    }
    if compare_bc and compare_bc != reference_bc:
        other = rv.apply(psi.values, SpectralPoint(lam, 0.0, sign), bc=compare_bc)
        record[f"{compare_bc}_vs_{reference_bc}"] = wdist(other)
    # Hoelder fit of eps -> R(lambda + i eps) psi in the weighted norm
    diffs = [weighted_norm(psi.with_values(seq[k] - seq[k + 1]), -1.0) for k in range(len(seq) - 1)]
    deps = [eps[k] - eps[k + 1] for k in range(len(seq) - 1)]
    record["holder_exponent"] = float(np.polyfit(np.log(deps), np.log(diffs), 1)[0])
    record["holder_diffs"] = diffs
    direct.extrapolation = record
    if record["route_a_vs_b"] > tol:
        direct.flags.append("routes_disagree")
        if strict:
            raise ResolventError(f"routes disagree: {record['route_a_vs_b']:.3g} > {tol:g}")
    return direct


def conjugation_defect(grid: ChannelGrid, lam: float, psi: WaveField,
                       resolvent: Resolvent | None = None) -> float:
    """``|| R(l - i0) psi - conj(R(l + i0) conj psi) || / || R(l - i0) psi ||``."""
    rv = resolvent or Resolvent(grid)
    um = rv.apply(psi.values, SpectralPoint(lam, 0.0, -1))
    up = rv.apply(np.conj(psi.values), SpectralPoint(lam, 0.0, 1))
    return float(np.linalg.norm(um - np.conj(up)) / np.linalg.norm(um))


def spectral_density(grid: ChannelGrid, lam: float, psi: WaveField,
                     resolvent: Resolvent | None = None) -> complex:
    """``(1/2 pi i) < (R(l + i0) - R(l - i0)) psi, psi >``."""
    rv = resolvent or Resolvent(grid)
    up = psi.with_values(rv.apply(psi.values, SpectralPoint(lam, 0.0, 1)))
    um = psi.with_values(rv.apply(psi.values, SpectralPoint(lam, 0.0, -1)))
    return (up.inner(psi) - um.inner(psi)) / (2j * np.pi)


# -------------------------------------------------------------- diagnostics
@dataclasses.dataclass
class LapReport:
    lam: float
    eps: list
    quotients: np.ndarray          # rows: eps, columns: four quotients
    names: tuple = ("B*", "p^f", "ell", "r^-a p^2")

    @property
    def sup(self):
        return self.quotients.max(axis=0)

    @property
    def last_change(self):
        a, b = self.quotients[-2], self.quotients[-1]
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.abs(b - a) / np.where(np.abs(b) > 0, np.abs(b), 1.0)
        return rel

    def stable(self, tol=1e-2):
        return bool(np.all(self.last_change <= tol))

    def as_dict(self):
        return {"lambda": self.lam, "eps": list(self.eps), "names": list(self.names),
                "quotients": self.quotients.tolist(), "sup": self.sup.tolist(),
                "last_change": self.last_change.tolist()}


def lap_quotients(u: WaveField, psi: WaveField):
    grid = u.grid
    Bpsi = psi.shell_norms().B
    q1 = u.shell_norms().Bstar / Bpsi
    q2 = u.with_values(grid.pf(u.values)).shell_norms().Bstar / Bpsi
    if grid.radial and grid.ell > 0:
        lval = grid.ell * (grid.ell + grid.d - 2)
        dens = lval * grid.fprime ** 2 / grid.rho ** 2 / grid.f * np.abs(u.values) ** 2
        q3 = float(np.sqrt(np.sum(grid.weights * dens))) / Bpsi
    else:
        q3 = 0.0
    q4 = u.with_values(grid.r ** (-grid.alpha) * grid.p_squared(u.values)).shell_norms().Bstar / Bpsi
    return np.array([q1, q2, q3, q4])


def lap_diagnostic(grid: ChannelGrid, lam: float, psi: WaveField, eps_list=None, sign: int = 1,
                   resolvent: Resolvent | None = None) -> LapReport:
    """The four weighted quotients of the limiting absorption bound over ``eps -> 0``."""
    rv = resolvent or Resolvent(grid)
    eps_list = list(eps_list if eps_list is not None else [1e-1, 1e-2, 1e-3, 2e-4, 1e-4])
    rows = []
    for e in eps_list:
        u = psi.with_values(rv.apply(psi.values, SpectralPoint(lam, e, sign)))
        rows.append(lap_quotients(u, psi))
    return LapReport(lam=lam, eps=eps_list, quotients=np.array(rows))


@dataclasses.dataclass
class RadiationReport:
    lam: float
    sign: int
    beta: float
    beta_c: float
    profile: np.ndarray
    wrong_profile: np.ndarray

    @property
    def slope(self):
        return _profile_slope(self.profile)

    @property
    def wrong_slope(self):
        return _profile_slope(self.wrong_profile)

    @property
    def separation(self):
        return float(self.wrong_profile[-1] / max(self.profile[-1], 1e-300))

    @property
    def bounded(self):
        return bool(self.slope <= 0.0 or self.profile[-1] <= self.profile.max())

    def as_dict(self):
        return {"lambda": self.lam, "sign": self.sign, "beta": self.beta, "beta_c": self.beta_c,
                "profile": self.profile.tolist(), "wrong_profile": self.wrong_profile.tolist(),
                "slope": self.slope, "wrong_slope": self.wrong_slope,
                "separation": self.separation}


def _profile_slope(p, start=None):
    n = np.arange(p.size)
    start = 1 if start is None else start
    keep = (n >= start) & (p > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(n[keep], np.log2(p[keep]), 1)[0])


def radiation_profiles(u: WaveField, lam: float, sign: int, beta: float,
                       ctx: PhaseContext | None = None):
    """Shell profiles of ``f^beta (A -+ a) u`` and of the wrong-sign ``f^beta (A +- a) u``."""
    grid = u.grid
    ctx = ctx or PhaseContext.choose(grid.spec, lam)
    a = np.empty(grid.n, complex)
    for s in ((1, -1) if not grid.radial else (1,)):
        sel = grid.side == s
        a[sel] = eval_phase_a(lam, grid.rho[sel], sign, ctx, s)
    Au = grid.pf(u.values) - 0.5j * grid.lap_f * u.values
    good = u.with_values(grid.f ** beta * (Au - sign * a * u.values)).shell_norms().profile
    bad = u.with_values(grid.f ** beta * (Au + sign * a * u.values)).shell_norms().profile
    return good, bad


def radiation_diagnostic(grid: ChannelGrid, lam: float, sign: int, psi: WaveField, beta: float,
                         resolvent: Resolvent | None = None, bc: str = "layer") -> RadiationReport:
    """Radiation-condition shell profile for ``R(lambda +- i0) psi``."""
    spec = grid.spec
    if not beta < spec.beta_c:
        raise ValueError(f"beta={beta} must be below beta_c={spec.beta_c:.4g}")
    rv = resolvent or Resolvent(grid, bc)
    u = psi.with_values(rv.apply(psi.values, SpectralPoint(lam, 0.0, sign), bc=bc))
    good, bad = radiation_profiles(u, lam, sign, beta)
    return RadiationReport(lam=lam, sign=sign, beta=beta, beta_c=spec.beta_c,
                           profile=good, wrong_profile=bad)


__all__ = [
    "SpectralPoint", "ResolventResult", "Resolvent", "ResolventError", "solve_resolvent",
    "limiting_resolvent", "boundary_residual", "weighted_norm", "conjugation_defect",
    "spectral_density", "LapReport", "lap_diagnostic", "lap_quotients", "RadiationReport",
    "radiation_diagnostic", "radiation_profiles",
]
