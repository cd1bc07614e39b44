"""Stationary wave matrices, the scattering matrix and generalized eigenfunctions.

Angular conventions
-------------------
In one dimension the sphere is ``{+1, -1}`` with the counting measure and an
:class:`AngularVector` holds ``(v(+1), v(-1))`` in that order. For radial
potentials in odd ``d >= 3`` a channel grid carries one spherical-harmonic
degree ``ell`` and the vector holds the coefficient of a fixed normalized
harmonic ``Y_ell``; ``v(-omega) = (-1)^ell v(omega)``.

Traces
------
The raw trace at level ``f`` is

    F^pm(lambda, f) psi (omega) = (2 pi)^(-1/2) exp(+-i pi tau / 4)
        r^((d + alpha/2 - 1)/2) exp(-+i theta) u(+-s omega),

``u = R(lambda +- i0) psi``, ``tau = (d - alpha/2 - 3)/(1 + alpha/2)``. It
converges slowly because ``theta`` is only an approximate phase. The
*renormalized* trace replaces ``r^(...) exp(-+i theta) u`` by the
exterior amplitude of ``u`` against the Jost pair ``w_pm`` of
:mod:`repscat.asymptotics` (a Wronskian quotient), which has the same limit
and is constant outside the support of ``psi``. Both are averaged over
``f in [R, 2R]`` with ``R`` doubling.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import weakref

import numpy as np

from . import _jet
from .asymptotics import JostPair
from .geometry import (PhaseContext, chi_bar, radial_geometry, radius_of_f,
                       theta_jet)
from .grid import (DEFAULT_ORDER, ChannelGrid, WaveField, assemble_hamiltonian, build_grid)
from .potential import PotentialSpec
from .resolvent import Resolvent, SpectralPoint

log = logging.getLogger(__name__)

F_TRACE_MIN = 4.0
# the Jost pair is used only where |(H - lambda) w| <= LG_RESIDUAL_TOL k^2 |w|
LG_RESIDUAL_TOL = 0.1
DEFAULT_PPW_SCATTERING = 64.0


class ScatteringError(RuntimeError):
    """Non-convergence or a consistency failure of a scattering computation."""


# --------------------------------------------------------------- constants
def trace_prefactor(spec: PotentialSpec, sign: int) -> complex:
    """``(2 pi)^(-1/2) exp(+-i pi tau/4)`` of the trace ``F^pm(lambda, f)``."""
    return np.exp(sign * 0.25j * np.pi * spec.tau) / math.sqrt(2 * math.pi)


def incident_prefactor(spec: PotentialSpec, sign: int) -> complex:
    """``(2 pi)^(-1/2) exp(-+i pi kappa/4)`` of the model wave ``phi^pm``."""
    return np.exp(-sign * 0.25j * np.pi * spec.kappa) / math.sqrt(2 * math.pi)


def extraction_constant(spec: PotentialSpec, sign: int) -> complex:
    """``c_pm = sqrt(2 pi) exp(+-i pi kappa/4)``."""
    return math.sqrt(2 * math.pi) * np.exp(sign * 0.25j * np.pi * spec.kappa)


# ----------------------------------------------------------- angular data
@dataclasses.dataclass
class AngularVector:
    """Coefficients over the angular basis of one grid.

    ``labels`` are ``(+1, -1)`` for ``d = 1`` and ``(ell,)`` for a radial channel
    (several degrees when assembled over channels).
    """

    values: np.ndarray
    labels: tuple
    d: int = 1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(-1)
        if self.values.size != len(self.labels):
            raise ValueError("one coefficient per basis label expected")

    @property
    def measure(self):
        return "counting" if self.d == 1 else "spherical harmonics (orthonormal)"

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __add__(self, other):
        return AngularVector(self.values + np.asarray(other), self.labels, self.d)

    def __sub__(self, other):
        return AngularVector(self.values - np.asarray(other), self.labels, self.d)

    def __mul__(self, c):
        return AngularVector(self.values * c, self.labels, self.d)

    __rmul__ = __mul__

    def reflected(self):
        """``v(-omega)`` in the same basis."""
        if self.d == 1:
            return AngularVector(self.values[::-1], self.labels, self.d)
        par = np.array([(-1.0) ** ell for ell in self.labels])
        return AngularVector(self.values * par, self.labels, self.d)

    def as_dict(self):
        return {"labels": list(self.labels), "re": self.values.real.tolist(),
                "im": self.values.imag.tolist(), "measure": self.measure}


def channel_labels(grid: ChannelGrid) -> tuple:
    return (1, -1) if not grid.radial else (grid.ell,)


def basis_vector(grid: ChannelGrid, k: int) -> AngularVector:
    labels = channel_labels(grid)
    v = np.zeros(len(labels), complex)
    v[k] = 1.0
    return AngularVector(v, labels, grid.d)


def angular(grid: ChannelGrid, values) -> AngularVector:
    return AngularVector(values, channel_labels(grid), grid.d)


def _sides(grid):
    return (1, -1) if not grid.radial else (1,)


# -------------------------------------------------------------- exterior
@dataclasses.dataclass(frozen=True)
class Exterior:
    """Physical nodes of one ray with ``f >= f_min`` and the Jost pair there."""

    side: int
    idx: np.ndarray            # node indices, ordered by increasing radius
    s: np.ndarray
    f: np.ndarray
    df: np.ndarray             # quadrature weights for integrals in f
    wp: np.ndarray
    wm: np.ndarray
    dwp: np.ndarray            # derivatives in s
    dwm: np.ndarray
    theta: np.ndarray

    @property
    def wronskian(self):
        return self.wp * self.dwm - self.dwp * self.wm


@dataclasses.dataclass(frozen=True)
class JostTable:
    """Jost pair, phase and residual factor on the nodes of one ray with ``s >= 2``."""

    idx: np.ndarray
    s: np.ndarray
    wp: np.ndarray
    wm: np.ndarray
    dwp: np.ndarray
    dwm: np.ndarray
    theta: np.ndarray
    residual: np.ndarray


_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _grid_cache(grid):
    return _CACHE.setdefault(grid, {})


def lg_breakdown_level(spec: PotentialSpec, lam: float, ell: int = 0) -> float:
    """Largest level ``f`` at which the Liouville-Green pair of a channel is unusable.

    Near the turning region of ``Q = 2 lambda + s^alpha - 2 q - c/s^2`` (the
    centrifugal barrier of high degrees in particular) the amplitude iteration
    stops converging: ``k`` turns non-finite or the relative residual
    ``|(H - lambda) w| / (k^2 |w|)`` exceeds ``LG_RESIDUAL_TOL``. Returns 0 when
    the pair is usable on all of ``f >= 1``.
    """
    fs = np.concatenate([np.linspace(1.0, 16.0, 3000), np.geomspace(16.0, 256.0, 400)[1:]])
    s = radius_of_f(fs, spec.alpha)
    level = 0.0
    for direction in ((1.0, -1.0) if spec.d == 1 else (1.0,)):
        jost = JostPair(spec, lam, ell=ell, direction=direction)
        with np.errstate(all="ignore"):
            k = jost.wavenumber(s)
            res = jost.residual_factor(s)
            bad = ~(np.isfinite(k) & np.isfinite(res) & (np.abs(res) <= LG_RESIDUAL_TOL * np.abs(k) ** 2))
        if np.any(bad):
            level = max(level, float(fs[np.flatnonzero(bad)[-1]]))
    return level


def cutoff_index(spec: PotentialSpec, lam: float, ell: int = 0) -> int:
    """Cutoff index ``m`` of the incident waves of one channel.

    The smallest admissible index of the phase (at least 1), raised until the
    cutoff region ``2^m <= f <= 2^(m+1)`` clears the Liouville-Green breakdown
    level of the channel.
    """
    m = max(PhaseContext.choose(spec, lam).m, 1)
    level = lg_breakdown_level(spec, lam, ell)
    while 2.0 ** m < level:
        m += 1
    return m


def jost_table(grid: ChannelGrid, lam: float, side: int) -> JostTable:
    """Cached :class:`JostTable` for ``grid`` at energy ``lam`` on the ray ``side``.

    The table covers the nodes with ``s >= 2`` beyond ``f = 2`` and beyond the
    breakdown level of the channel.
    """
    cache = _grid_cache(grid)
    key = ("jost", float(lam), int(side))
    if key not in cache:
        ell = grid.ell if grid.radial else 0
        f_lo = max(2.0, lg_breakdown_level(grid.spec, lam, ell))
        sel = np.flatnonzero((grid.side == side) & (grid.rho >= 2.0) & (grid.f > f_lo))
        idx = sel[np.argsort(grid.rho[sel])]
        s = grid.rho[idx]
        jost = JostPair(grid.spec, lam, ell=grid.ell, direction=float(side))
        with np.errstate(invalid="ignore"):
            wp, wm, dwp, dwm = jost.values(s)
            res = jost.residual_factor(s)
        if not (np.all(np.isfinite(wp)) and np.all(np.isfinite(res))):
            raise ScatteringError(f"the Liouville-Green pair breaks down on f > {f_lo:.3g}")
        cache[key] = JostTable(idx=idx, s=s, wp=wp, wm=wm, dwp=dwp, dwm=dwm,
                               theta=jost.theta(s), residual=res)
    return cache[key]


def exterior(grid: ChannelGrid, lam: float, side: int, f_min: float = F_TRACE_MIN) -> Exterior:
    cache = _grid_cache(grid)
    key = ("exterior", float(lam), int(side), float(f_min))
    if key in cache:
        return cache[key]
    tab = jost_table(grid, lam, side)
    keep = grid.f[tab.idx] >= f_min
    if keep.sum() < 8:
        raise ScatteringError(f"no exterior nodes with f >= {f_min} (L={grid.L} too small)")
    idx = tab.idx[keep]
    df = np.abs(grid.fprime[idx]) * grid.weights[idx]
    ext = Exterior(side=side, idx=idx, s=tab.s[keep], f=grid.f[idx], df=df, wp=tab.wp[keep],
                   wm=tab.wm[keep], dwp=tab.dwp[keep], dwm=tab.dwm[keep], theta=tab.theta[keep])
    cache[key] = ext
    return ext


def radial_derivative(grid: ChannelGrid, values, ext: Exterior):
    """``du/ds`` along the ray of ``ext`` on its nodes."""
    return ext.side * grid.derivative(values)[ext.idx] if not grid.radial else \
        grid.derivative(values)[ext.idx]


def jost_amplitudes(u: WaveField, lam: float, side: int, f_min: float = F_TRACE_MIN):
    """Local amplitudes ``(A_+(s), A_-(s))`` with ``u = A_+ w_+ + A_- w_-`` (Wronskians)."""
    grid = u.grid
    ext = exterior(grid, lam, side, f_min)
    v = u.values[ext.idx]
    dv = radial_derivative(grid, u.values, ext)
    W = ext.wronskian
    ap = (v * ext.dwm - dv * ext.wm) / W
    am = (ext.wp * dv - ext.dwp * v) / W
    return ext, ap, am


# ---------------------------------------------------------------- traces
def _trace_density(u: WaveField, lam: float, sign: int, channel_side: int, renormalized: bool):
    """Trace integrand on the exterior nodes of the ray ``sign * channel_side``."""
    grid = u.grid
    ray = sign * channel_side if not grid.radial else 1
    ext = exterior(grid, lam, ray)
    pre = trace_prefactor(grid.spec, sign)
    if renormalized:
        _, ap, am = jost_amplitudes(u, lam, ray)
        amp = ap if sign > 0 else am
    else:
        amp = ext.s ** (grid.alpha / 4) * np.exp(-sign * 1j * ext.theta) * u.values[ext.idx]
        if grid.radial:
            # r^((d-1)/2) is already inside the reduced values
            pass
    return ext, pre * amp


def shell_trace(lam: float, ftilde: float, sign: int, u: WaveField,
                renormalized: bool = False) -> AngularVector:
    """``F^pm(lambda, f~)`` applied through ``u = R(lambda +- i0) psi`` at the level ``f = f~``."""
    if ftilde < F_TRACE_MIN:
        raise ValueError(f"trace level f={ftilde} lies in the smoothing region (need >= 4)")
    grid = u.grid
    out = []
    for ch in _sides(grid):
        ext, dens = _trace_density(u, lam, sign, ch, renormalized)
        if ftilde > ext.f[-1]:
            raise ValueError(f"trace level f={ftilde} beyond the grid (f_max={ext.f[-1]:.4g})")
        # demodulated data are smooth: local cubic interpolation in f
        j = int(np.clip(np.searchsorted(ext.f, ftilde), 2, ext.f.size - 2))
        sl = slice(j - 2, j + 2)
        fx = ext.f[sl]
        coeffs = np.polyfit(fx - ftilde, dens[sl], 3)
        out.append(coeffs[-1])
    return angular(grid, out)


@dataclasses.dataclass
class CesaroRecord:
    R: list
    averages: list
    differences: list
    converged: bool
    tol: float
    heuristic: bool = True

    def as_dict(self):
        return {"R": self.R, "averages": [[complex(x).real, complex(x).imag] for x in self.averages],
                "differences": self.differences, "converged": self.converged, "tol": self.tol,
                "stopping_rule": "Cauchy criterion on doubling R (heuristic, no rate known)"}


def cesaro_average(f, values, df, R0: float = F_TRACE_MIN, tol: float = 1e-8, strict: bool = False,
                   growth: float = math.sqrt(2.0)):
    """``R^-1 int_R^2R values df`` for ``R = R0, R0 g, R0 g^2, ...`` while ``[R, 2R]`` fits.

    With the default ``g = sqrt 2`` consecutive windows overlap by half an
    octave; every second entry is the plain doubling sequence. The mean is
    normalized by the quadrature of ``df`` itself so that a constant is
    reproduced exactly. Returns the last average and the table.
    """
    f = np.asarray(f)
    Rs, avgs = [], []
    R = R0
    while 2 * R <= f[-1] * (1 + 1e-12):
        sel = (f >= R) & (f < 2 * R)
        w = df[sel]
        avgs.append(np.sum(w * values[sel], axis=0) / np.sum(w))
        Rs.append(R)
        R *= growth
    if not avgs:
        raise ScatteringError(f"no complete Cesaro window [R, 2R] with R >= {R0} "
                              f"(f_max = {f[-1]:.4g}); enlarge L")
    diffs = [float(np.max(np.abs(np.asarray(avgs[k + 1]) - np.asarray(avgs[k]))))
             for k in range(len(avgs) - 1)]
    conv = bool(diffs and diffs[-1] <= tol)
    rec = CesaroRecord(R=Rs, averages=avgs, differences=diffs, converged=conv, tol=tol)
    if strict and not conv:
        raise ScatteringError(f"Cesaro averages did not settle: {diffs}")
    return avgs[-1], rec


def trace_average(u: WaveField, lam: float, sign: int, renormalized: bool = True,
                  tol: float = 1e-8, R0: float = F_TRACE_MIN):
    """Cesaro-averaged trace of ``u`` (assumed ``= R(lambda +- i0) psi``) on every channel."""
    grid = u.grid
    vals, recs = [], []
    for ch in _sides(grid):
        ext, dens = _trace_density(u, lam, sign, ch, renormalized)
        val, rec = cesaro_average(ext.f, dens, ext.df, R0=R0, tol=tol)
        vals.append(val)
        recs.append(rec)
    return angular(grid, vals), recs


def cesaro_wave_matrix(grid: ChannelGrid, lam: float, sign: int, psi: WaveField,
                       resolvent: Resolvent | None = None, renormalized: bool = True,
                       tol: float = 1e-8, strict: bool = False):
    """``F^pm(lambda) psi`` as a Cesaro mean of traces of ``R(lambda +- i0) psi``.

    Returns ``(AngularVector, record)``; the record holds the doubling table
    per channel and, if ``renormalized``, the raw-trace averages for comparison.
    """
    rv = resolvent or Resolvent(grid)
    u = psi.with_values(rv.apply(psi.values, SpectralPoint(lam, 0.0, sign)))
    vec, recs = trace_average(u, lam, sign, renormalized, tol)
    record = {"channels": [r.as_dict() for r in recs],
              "converged": all(r.converged for r in recs)}
    if renormalized:
        raw, _ = trace_average(u, lam, sign, False, tol)
        record["raw"] = raw.values.tolist()
        record["raw_minus_renormalized"] = float(np.linalg.norm(raw.values - vec.values))
    if strict and not record["converged"]:
        raise ScatteringError("wave-matrix traces did not converge within the grid")
    return vec, record


def parseval_check(grid: ChannelGrid, lam: float, psi: WaveField,
                   resolvent: Resolvent | None = None) -> dict:
    """Both sides of ``(1/2 pi i) <(R_+ - R_-) psi, psi> = |F^pm(lambda) psi|^2``."""
    rv = resolvent or Resolvent(grid)
    up = rv.apply(psi.values, SpectralPoint(lam, 0.0, 1))
    um = rv.apply(psi.values, SpectralPoint(lam, 0.0, -1))
    density = (psi.with_values(up - um).inner(psi)) / (2j * np.pi)
    Fp, _ = trace_average(psi.with_values(up), lam, 1)
    Fm, _ = trace_average(psi.with_values(um), lam, -1)
    lhs = density.real
    return {
        "lambda": lam,
        "density": [density.real, density.imag],
        "norm_plus_sq": Fp.norm() ** 2,
        "norm_minus_sq": Fm.norm() ** 2,
        "rel_error_plus": abs(Fp.norm() ** 2 - lhs) / abs(lhs),
        "rel_error_minus": abs(Fm.norm() ** 2 - lhs) / abs(lhs),
        "plus_minus_norm_gap": abs(Fp.norm() - Fm.norm()) / max(Fp.norm(), 1e-300),
        "F_plus": Fp.values.tolist(),
        "F_minus": Fm.values.tolist(),
    }


# --------------------------------------------------------------- incident
@dataclasses.dataclass
class Incident:
    phi: WaveField
    psi: WaveField                 # closed-form (H - lambda) phi
    psi_discrete: WaveField        # discrete H applied to phi
    kind: str
    sign: int
    route_gap: float               # |psi - psi_discrete| on interior nodes (relative)
    profile: np.ndarray            # B-profile 2^(n/2)|F_n psi|

    def as_dict(self):
        return {"kind": self.kind, "sign": self.sign, "route_gap": self.route_gap,
                "B_profile": self.profile.tolist()}


def _safe_rho(rho):
    # r, f are constant for rho <= 1; evaluate the jets away from the origin
    return np.maximum(rho, 0.5)


def _model_profile(grid: ChannelGrid, lam: float, sign: int, kind: str, m: int, side: int,
                   rho):
    """Jets (order 2 in ``rho``) of the radial incident profile on one ray."""
    rho = np.asarray(rho, float)
    if kind == "jost":
        geom = radial_geometry(_safe_rho(rho), grid.alpha, grid.d, order=2)
        cb = chi_bar(m, geom.f)
        out = np.zeros((3, rho.size), complex)
        live = cb.value > 0
        if np.any(live):
            tab = jost_table(grid, lam, side)
            pos = np.searchsorted(tab.s, rho[live])
            if np.any(pos >= tab.s.size) or np.any(tab.s[np.minimum(pos, tab.s.size - 1)] != rho[live]):
                raise ScatteringError("incident cutoff reaches below the Jost table")
            w = (tab.wp if sign > 0 else tab.wm)[pos]
            dw = (tab.dwp if sign > 0 else tab.dwm)[pos]
            s = rho[live]
            # w'' = (A''/A - k^2) w = 2 (V - lambda - res) w with the channel potential
            V = grid.potential(s * (side if not grid.radial else 1)).real
            d2w = 2.0 * (V - lam - tab.residual[pos]) * w
            c0, c1, c2 = cb.value[live], cb.deriv(1)[live], cb.deriv(2)[live]
            out[0, live] = c0 * w
            out[1, live] = c1 * w + c0 * dw
            out[2, live] = c2 * w + 2 * c1 * dw + c0 * d2w
        return out
    if kind == "model":
        geom = radial_geometry(_safe_rho(rho), grid.alpha, grid.d, order=2)
        th = theta_jet(lam, geom)
        r = geom.r
        g = r ** (-(grid.d + grid.alpha / 2 - 1) / 2) * _jet.exp(th * (sign * 1j))
        if grid.radial:
            t = _jet.Jet.variable(_safe_rho(rho), 2)
            g = g * t ** ((grid.d - 1) / 2) * chi_bar(m, geom.f)
        out = np.array([g.value, g.deriv(1), g.deriv(2)])
        if not grid.radial:
            inner = rho <= 1.0
            out[1:, inner] = 0.0
        return out
    raise ValueError(f"unknown incident kind {kind!r}")


def build_incident(grid: ChannelGrid, lam: float, sign: int, v: AngularVector,
                   kind: str = "jost", m: int | None = None) -> Incident:
    """Approximate generalized eigenfunction ``phi`` and its source ``psi = (H - lambda) phi``.

    ``kind="model"``: the model wave
    ``phi^pm[v] = (2 pi)^(-1/2) e^(-+ i pi kappa/4) r^(-(d+alpha/2-1)/2) e^(+-i theta) v(+-omega)``
    (times a cutoff for radial channels, where it is singular at the origin).
    ``kind="jost"``: ``theta`` and the amplitude are replaced by the Jost
    solution ``w_pm`` and the wave is cut off by ``chibar_m``; the difference
    from the model wave decays faster than ``B0*`` and ``psi`` is supported
    where the cutoff varies (up to the tiny Jost residual).

    ``psi`` is formed from exact derivatives of the radial profile; the
    discretely applied ``(H_h - lambda) phi`` is returned alongside and the
    interior gap between the two routes recorded.
    """
    spec = grid.spec
    if m is None:
        m = cutoff_index(spec, lam, grid.ell if grid.radial else 0)
    vv = np.asarray(v, complex)
    phi = np.zeros(grid.n, complex)
    psi = np.zeros(grid.n, complex)
    pre = incident_prefactor(spec, sign)
    for k, side in enumerate(_sides(grid)):
        sel = grid.side == side
        rho = grid.rho[sel]
        prof = _model_profile(grid, lam, sign, kind, m, side, rho)
        if grid.radial:
            coeff = vv[0] * ((-1.0) ** grid.ell if sign < 0 else 1.0)
        else:
            # the value carried on the ray side * s is v(sign * side)
            coeff = vv[0] if sign * side > 0 else vv[1]
        V = grid.potential(grid.x[sel]).real
        if kind == "jost":
            h = -0.5 * prof[2] + (V - lam) * prof[0]
        else:
            h = _closed_form_source(grid, lam, sign, prof, rho, side, V, m)
        phi[sel] = pre * coeff * prof[0]
        psi[sel] = pre * coeff * h
    phi_f = grid.field(phi, f"phi^{'+' if sign > 0 else '-'}[{kind}]")
    psi_f = grid.field(psi, f"psi^{'+' if sign > 0 else '-'}[{kind}]")
    disc = grid.apply_continuum(phi, lam)
    interior = grid.rho <= 0.9 * grid.L
    scale = np.max(np.abs(psi[interior])) or 1.0
    gap = float(np.max(np.abs(disc[interior] - psi[interior])) / scale)
    prof_B = psi_f.shell_norms()
    nn = np.arange(prof_B.shell_l2.size)
    return Incident(phi=phi_f, psi=psi_f, psi_discrete=grid.field(disc), kind=kind, sign=sign,
                    route_gap=gap, profile=2.0 ** (nn / 2) * prof_B.shell_l2)


def _closed_form_source(grid, lam, sign, prof, rho, side, V, m):
    """``(H - lambda)`` of the model wave: explicit bracket where ``f > 2``, jets elsewhere."""
    h = -0.5 * prof[2] + (V - lam) * prof[0]
    if grid.radial:
        return h
    a = grid.alpha
    geom_f = grid.f[grid.side == side]
    far = geom_f > 2.0
    r = rho[far]
    q = grid.spec.q(side * r).real if not grid.spec.is_free else 0.0
    d = grid.d
    bracket = (0.5 * lam ** 2 * r ** (-a) + q
               + (d + a / 2 - 1) * (d - a / 2 + 1) / 8.0 * r ** -2.0
               + sign * 0.5j * a * lam * r ** (-a / 2 - 1))
    h = h.copy()
    h[far] = prof[0][far] * bracket
    return h


# ------------------------------------------------------------ eigenfunctions
@dataclasses.dataclass
class EigenfunctionRecord:
    phi: WaveField
    xi_plus: AngularVector | None = None
    xi_minus: AngularVector | None = None
    profile: np.ndarray | None = None
    remainder_profile: np.ndarray | None = None
    interior_residual: float = float("nan")
    meta: dict = dataclasses.field(default_factory=dict)

    def as_dict(self):
        out = {"interior_residual": self.interior_residual, "meta": self.meta}
        if self.xi_plus is not None:
            out["xi_plus"] = self.xi_plus.as_dict()
            out["xi_minus"] = self.xi_minus.as_dict()
        if self.profile is not None:
            out["profile"] = self.profile.tolist()
        if self.remainder_profile is not None:
            out["remainder_profile"] = self.remainder_profile.tolist()
        return out


def interior_residual(phi: WaveField, lam: float, lo: float = 4.0, hi: float | None = None) -> float:
    """``|(H - lambda) phi| / |phi|`` (relative, max norm) on ``lo <= |x| <= hi``."""
    grid = phi.grid
    hi = grid.L / 2 if hi is None else hi
    sel = grid.mask(lo, hi)
    r = grid.apply_continuum(phi.values, lam)[sel]
    scale = np.max(np.abs(phi.values[sel])) or 1.0
    k = math.sqrt(2 * lam + hi ** grid.alpha)
    return float(np.max(np.abs(r)) / (scale * k * k))


def wave_matrix_adjoint(grid: ChannelGrid, lam: float, sign: int, v: AngularVector,
                        resolvent: Resolvent | None = None, kind: str = "jost") -> EigenfunctionRecord:
    """``F^pm(lambda)^* v = phi^pm[v] - R(lambda -+ i0) psi^pm[v]``."""
    rv = resolvent or Resolvent(grid)
    inc = build_incident(grid, lam, sign, v, kind)
    u = rv.apply(inc.psi.values, SpectralPoint(lam, 0.0, -sign))
    phi = inc.phi.with_values(inc.phi.values - u, label=f"F^{'+' if sign > 0 else '-'}*v")
    rec = EigenfunctionRecord(phi=phi, profile=phi.shell_norms().profile,
                              interior_residual=interior_residual(phi, lam) if np.any(np.asarray(v))
                              else 0.0)
    rec.meta.update({"sign": sign, "incident": inc.as_dict()})
    return rec


def sommerfeld_check(grid: ChannelGrid, lam: float, sign: int, v: AngularVector,
                     resolvent: Resolvent | None = None, kind: str = "jost") -> dict:
    """Profile of ``phi^pm[v] - R(lambda +- i0) psi^pm[v]`` (zero by uniqueness)."""
    rv = resolvent or Resolvent(grid)
    inc = build_incident(grid, lam, sign, v, kind)
    u = rv.apply(inc.psi.values, SpectralPoint(lam, 0.0, sign))
    diff = inc.phi.with_values(inc.phi.values - u)
    prof = diff.shell_norms().profile
    ref = inc.phi.shell_norms().Bstar or 1.0
    return {"profile": (prof / ref).tolist(), "relative_Bstar": float(prof.max() / ref)}


# ------------------------------------------------------------- S matrix
@dataclasses.dataclass
class ScatteringMatrix:
    lam: float
    matrix: np.ndarray
    labels: tuple
    d: int
    meta: dict = dataclasses.field(default_factory=dict)
    flags: list = dataclasses.field(default_factory=list)

    @property
    def defect(self) -> float:
        """``|S* S - I|`` (spectral norm)."""
        S = self.matrix
        return float(np.linalg.norm(S.conj().T @ S - np.eye(S.shape[0]), 2))

    @property
    def parity_commutator(self) -> float:
        if self.d != 1:
            return 0.0
        P = np.array([[0, 1], [1, 0]])
        return float(np.linalg.norm(P @ self.matrix - self.matrix @ P, 2))

    def as_dict(self):
        return {"lambda": self.lam, "labels": list(self.labels),
                "matrix_re": self.matrix.real.tolist(), "matrix_im": self.matrix.imag.tolist(),
                "defect": self.defect, "meta": self.meta, "flags": list(self.flags)}


def default_length(spec: PotentialSpec, f_target: float = 12.0) -> float:
    """Smallest ``L`` whose escape function reaches ``f_target``.

    The default leaves room for the Cesaro windows ``[4, 8]`` and
    ``[4 sqrt 2, 8 sqrt 2]``.
    """
    return float(math.ceil(radius_of_f(f_target, spec.alpha)))


def trace_start(m: int) -> float:
    """First Cesaro level for traces of ``R(lambda + i0) psi^pm``: just past the cutoff region."""
    return max(F_TRACE_MIN, 2.0 ** (m + 1))


def scattering_grid(spec: PotentialSpec, lam_max: float, L: float | None = None, ell: int = 0,
                    ppw: float = DEFAULT_PPW_SCATTERING, order: int = DEFAULT_ORDER,
                    lam_min: float | None = None) -> ChannelGrid:
    """Grid for ``S`` on ``lam_min <= lambda <= lam_max``.

    Without ``L`` the grid reaches two Cesaro windows past the incident
    cutoff region of the lowest energy (``f = 12`` at least).
    """
    if L is None:
        m = cutoff_index(spec, lam_max if lam_min is None else lam_min, ell if spec.d > 1 else 0)
        L = default_length(spec, max(12.0, 2.0 * math.sqrt(2.0) * trace_start(m) * 1.05))
    return build_grid(spec, lam_max, L, order=order, ppw=ppw, ell=ell)


def channel_smatrix(grid: ChannelGrid, lam: float, resolvent: Resolvent | None = None,
                    kind: str = "jost", tol: float = 1e-8):
    """S restricted to the channels of one grid, plus the round-trip errors."""
    rv = resolvent or Resolvent(grid)
    nch = len(channel_labels(grid))
    R0 = trace_start(cutoff_index(grid.spec, lam, grid.ell if grid.radial else 0))
    S = np.zeros((nch, nch), complex)
    roundtrip = []
    records = []
    for k in range(nch):
        v = basis_vector(grid, k)
        inc_m = build_incident(grid, lam, -1, v, kind)
        u = inc_m.psi.with_values(rv.apply(inc_m.psi.values, SpectralPoint(lam, 0.0, 1)))
        Fp, recs = trace_average(u, lam, 1, tol=tol, R0=R0)
        S[:, k] = -2j * np.pi * Fp.values
        records.append([r.as_dict() for r in recs])
        inc_p = build_incident(grid, lam, 1, v, kind)
        up = inc_p.psi.with_values(rv.apply(inc_p.psi.values, SpectralPoint(lam, 0.0, 1)))
        Fpp, _ = trace_average(up, lam, 1, tol=tol, R0=R0)
        roundtrip.append(float(np.linalg.norm(2j * np.pi * Fpp.values - v.values)))
    return S, roundtrip, records


def scattering_matrix(spec: PotentialSpec, lam: float, ell_max: int = 8, L: float | None = None,
                      ppw: float = DEFAULT_PPW_SCATTERING, grids: dict | None = None,
                      kind: str = "jost", defect_tol: float = 1e-5, lam_max: float | None = None,
                      ) -> ScatteringMatrix:
    """``S(lambda)`` column by column from ``S v = -2 pi i F^+(lambda) psi^-[v]``.

    For ``d = 1`` the matrix is 2x2 over ``(omega = +1, omega = -1)``; for
    radial ``q`` in odd ``d >= 3`` it is diagonal over ``ell = 0..ell_max``
    (one grid per degree, reused from ``grids`` when given).
    """
    lam_max = lam if lam_max is None else lam_max
    grids = {} if grids is None else grids
    meta = {"kind": kind, "route": "eps=0 absorbing layer", "ppw": ppw}
    if spec.d == 1:
        grid = grids.get(0) or scattering_grid(spec, lam_max, L, ppw=ppw, lam_min=lam)
        grids[0] = grid
        S, rt, recs = channel_smatrix(grid, lam, kind=kind)
        labels = (1, -1)
        meta.update({"L": grid.L, "roundtrip": rt, "cesaro": recs})
    else:
        diag, rts, recs, Ls = [], [], [], []
        for ell in range(ell_max + 1):
            grid = grids.get(ell) or scattering_grid(spec, lam_max, L, ell=ell, ppw=ppw, lam_min=lam)
            grids[ell] = grid
            s, rt, rec = channel_smatrix(grid, lam, kind=kind)
            diag.append(s[0, 0])
            rts.append(rt[0])
            recs.append(rec)
            Ls.append(grid.L)
        S = np.diag(diag)
        labels = tuple(range(ell_max + 1))
        meta.update({"L": Ls, "roundtrip": rts, "ell_max": ell_max,
                     "last_channel_phase_shift": float(abs(diag[-1] - 1))})
    out = ScatteringMatrix(lam=float(lam), matrix=S, labels=labels, d=spec.d, meta=meta)
    if out.defect > defect_tol:
        out.flags.append("unitarity_defect")
    if max(np.atleast_1d(meta["roundtrip"])) > 1e-4:
        out.flags.append("roundtrip")
    return out


@dataclasses.dataclass
class SweepReport:
    lams: np.ndarray
    matrices: list
    defects: np.ndarray
    steps: np.ndarray             # |S(l_k+1) - S(l_k)|
    holder_C: float
    holder_omega: float
    outliers: list
    probe_defect: float = 0.0

    def as_dict(self):
        return {"lambdas": self.lams.tolist(), "defects": self.defects.tolist(),
                "steps": self.steps.tolist(), "holder_C": self.holder_C,
                "holder_omega": self.holder_omega, "outliers": self.outliers,
                "probe_defect": self.probe_defect,
                "matrices": [m.as_dict() for m in self.matrices]}


def fit_holder(dl, dS, slack: float = 1.0, test=None):
    """Fit ``dS <= C dl^omega`` to sampled separations.

    ``omega`` is the least-squares slope in logs and ``C`` lifts the fitted
    line to an upper bound of the samples. ``test`` is an optional pair
    ``(dl, dS)`` of steps (by default the samples themselves) checked against
    the curve: a step is an outlier when it exceeds ``slack * C dl^omega``.
    """
    dl, dS = np.asarray(dl, float), np.asarray(dS, float)
    keep = dS > 0
    if np.ptp(np.log(dl[keep])) == 0:
        raise ValueError("Hoelder fit needs at least two distinct energy separations")
    omega, _ = np.polyfit(np.log(dl[keep]), np.log(dS[keep]), 1)
    C = float(np.max(dS[keep] / dl[keep] ** omega))
    tl, tS = (dl, dS) if test is None else (np.asarray(test[0], float), np.asarray(test[1], float))
    outliers = [int(i) for i in np.flatnonzero(tS > slack * C * tl ** omega)]
    return C, float(omega), outliers


def smatrix_sweep(spec: PotentialSpec, lams, ppw: float = DEFAULT_PPW_SCATTERING,
                  L: float | None = None, ell_max: int = 8, workers: int = 1,
                  probes=(1e-3, 1e-2)) -> SweepReport:
    """``S`` over an energy sweep on common grids, with a Hoelder continuity fit.

    Besides the sweep energies, ``S`` is also evaluated at ``lambda + h`` for
    each ``h`` in ``probes``. The Hoelder curve is fitted to these local
    increments, where ``S`` is resolved (sweep pairs far apart only see the
    bound ``|S - S'| <= 2`` of unitary matrices); the adjacent sweep steps are
    then tested against the fitted curve. Without at least two distinct
    probes the fit uses all sweep pairs.
    """
    lams = np.asarray(sorted(lams), float)
    probes = tuple(float(h) for h in probes)
    top = lams.max() + (max(probes) if probes else 0.0)
    grids: dict = {}
    if spec.d == 1:
        grids[0] = scattering_grid(spec, top, L, ppw=ppw, lam_min=lams.min())
    else:
        for ell in range(ell_max + 1):
            grids[ell] = scattering_grid(spec, top, L, ell=ell, ppw=ppw, lam_min=lams.min())

    def one(lam):
        return scattering_matrix(spec, lam, ell_max=ell_max, grids=grids, ppw=ppw, lam_max=top)

    extra = [lam + h for lam in lams for h in probes]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as ex:
            mats = list(ex.map(one, lams))
            side = list(ex.map(one, extra))
    else:
        mats = [one(lam) for lam in lams]
        side = [one(lam) for lam in extra]
    norm = lambda A, B: float(np.linalg.norm(A.matrix - B.matrix, 2))  # noqa: E731
    steps = np.array([norm(mats[k + 1], mats[k]) for k in range(len(mats) - 1)])
    pl = [h for _ in lams for h in probes]
    pS = [norm(side[i * len(probes) + j], mats[i]) for i in range(len(lams))
          for j in range(len(probes))]
    if len(set(probes)) < 2:
        pl += [lams[k] - lams[j] for j in range(len(mats)) for k in range(j + 1, len(mats))]
        pS += [norm(mats[k], mats[j]) for j in range(len(mats)) for k in range(j + 1, len(mats))]
    if len(set(np.round(np.log(pl), 12))) >= 2:
        C, omega, outliers = fit_holder(pl, pS, test=(np.diff(lams), steps))
    else:
        C, omega, outliers = float("nan"), float("nan"), []
    return SweepReport(lams=lams, matrices=mats, defects=np.array([m.defect for m in mats]),
                       steps=steps, holder_C=C, holder_omega=omega, outliers=outliers,
                       probe_defect=max((m.defect for m in side), default=0.0))


# ------------------------------------------------------------- extraction
def extract_asymptotic_xi(lam: float, phi: WaveField, method: str = "jost", tol: float = 1e-6):
    """Asymptotic data ``(xi_+, xi_-)`` of a generalized eigenfunction.

    ``method="jost"`` averages the exact-annihilator amplitudes
    ``xi_+ = c_+ A_+`` and ``xi_-(omega) = c_- A_-(-omega)``;
    ``method="operator"`` averages
    ``+-(1/2) c_pm r^((d+alpha/2-1)/2) e^(-+i theta) (A +- a_0) phi`` with
    ``a_0 = r^(-alpha/2) sqrt(2 lambda - 2 q0 + r^alpha)`` (read on the ray
    ``-omega`` for ``xi_-``). Returns ``(xi_plus, xi_minus, record)``.
    """
    grid = phi.grid
    spec = grid.spec
    cp, cm = extraction_constant(spec, 1), extraction_constant(spec, -1)
    xp, xm, recs = [], [], {"method": method, "plus": [], "minus": []}
    if method == "operator":
        Aphi = grid.pf(phi.values) - 0.5j * grid.lap_f * phi.values
    for ch in _sides(grid):
        for sign, store, key in ((1, xp, "plus"), (-1, xm, "minus")):
            ray = sign * ch if not grid.radial else 1
            if method == "jost":
                ext, ap, am = jost_amplitudes(phi, lam, ray)
                dens = cp * ap if sign > 0 else cm * am
            elif method == "operator":
                ext = exterior(grid, lam, ray)
                a0 = ext.s ** (-grid.alpha / 2) * np.sqrt(
                    2 * lam - 2 * _q0(grid, ext.s, ray) + ext.s ** grid.alpha)
                amp = ext.s ** (grid.alpha / 4) * np.exp(-sign * 1j * ext.theta)
                dens = sign * 0.5 * (cp if sign > 0 else cm) * amp * (
                    Aphi[ext.idx] + sign * a0 * phi.values[ext.idx])
            else:
                raise ValueError(f"unknown method {method!r}")
            if grid.radial and sign < 0:
                dens = dens * (-1.0) ** grid.ell
            val, rec = cesaro_average(ext.f, dens, ext.df, tol=tol)
            store.append(val)
            recs[key].append(rec.as_dict())
    return angular(grid, xp), angular(grid, xm), recs


def _q0(grid, s, ray):
    from .geometry import eval_q0

    return eval_q0(s, grid.alpha, grid.spec, grid.d, float(ray))


def model_wave(grid: ChannelGrid, lam: float, sign: int, v: AngularVector) -> WaveField:
    """``phi^pm[v]`` of the model form (cut off near the origin for radial channels)."""
    return build_incident(grid, lam, sign, v, kind="model").phi


@dataclasses.dataclass
class DecompositionReport:
    remainder_profile: np.ndarray
    remainder_slope: float
    norm_gap: float                     # | |xi_+| - |xi_-| | / |xi_+|
    shell_averages: np.ndarray          # 2^-n int_{F_n} 2 pi |phi|^2
    shell_target: float                 # |xi_+|^2 + |xi_-|^2
    shell_errors: np.ndarray
    shell_extrapolated: float
    shell_extrapolated_error: float
    zero_field: bool = False

    def as_dict(self):
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                for k, v in dataclasses.asdict(self).items()}


def shell_average_sequence(phi: WaveField) -> np.ndarray:
    """``2^-n int_{2^n <= f < 2^(n+1)} 2 pi |phi|^2 dx`` over complete shells."""
    l2 = phi.shell_l2()
    n = np.arange(l2.size)
    return 2 * np.pi * l2 ** 2 / 2.0 ** n


def shell_rate(spec: PotentialSpec) -> float:
    """Exponent ``gamma`` of the leading shell-average correction ``~ 2^(-gamma n)``.

    ``1/k = r^(-alpha/2) (1 - lambda r^-alpha + ...)`` and ``r ~ f^(1/(1-alpha/2))``
    give ``gamma = alpha / (1 - alpha/2)``; a short-range ``q`` of order
    ``f^(-1-rho)`` adds ``rho + 1``-type terms, and the smaller exponent wins.
    """
    a = spec.alpha
    g = a / (1 - a / 2)
    if not spec.is_free:
        g = min(g, 1 + spec.rho if np.isfinite(spec.rho) else g)
    return float(g)


def decomposition_check(lam: float, record: EigenfunctionRecord) -> DecompositionReport:
    """Remainder profile of ``phi - phi^+[xi_+] - phi^-[xi_-]`` and the norm identities."""
    phi = record.phi
    grid = phi.grid
    if not np.any(phi.values):
        z = np.zeros(grid.shells.n_complete)
        return DecompositionReport(z, float("nan"), 0.0, z, 0.0, z, 0.0, 0.0, zero_field=True)
    if record.xi_plus is None:
        record.xi_plus, record.xi_minus, _ = extract_asymptotic_xi(lam, phi)
    xp, xm = record.xi_plus, record.xi_minus
    model = model_wave(grid, lam, 1, xp).values + model_wave(grid, lam, -1, xm).values
    rem = phi.with_values(phi.values - model)
    prof = rem.shell_norms().profile
    record.remainder_profile = prof
    slope = float(np.polyfit(np.arange(1, prof.size), np.log2(prof[1:]), 1)[0]) \
        if prof.size > 2 else float("nan")
    target = xp.norm() ** 2 + xm.norm() ** 2
    seq = shell_average_sequence(phi)
    errs = np.abs(seq - target) / target
    g = shell_rate(grid.spec)
    if seq.size >= 2:
        t = 2.0 ** -g
        extrap = float((seq[-1] - t * seq[-2]) / (1 - t))
    else:
        extrap = float(seq[-1])
    return DecompositionReport(
        remainder_profile=prof, remainder_slope=slope,
        norm_gap=abs(xp.norm() - xm.norm()) / max(xp.norm(), 1e-300),
        shell_averages=seq, shell_target=target, shell_errors=errs,
        shell_extrapolated=extrap, shell_extrapolated_error=abs(extrap - target) / target)


def flux_identity(grid: ChannelGrid, lam: float, psi: WaveField,
                  resolvent: Resolvent | None = None) -> dict:
    """``<(R_+ - R_-) psi, psi>`` against ``i lim 2^-n int_{F_n} |R_+ psi|^2``."""
    rv = resolvent or Resolvent(grid)
    up = rv.apply(psi.values, SpectralPoint(lam, 0.0, 1))
    um = rv.apply(psi.values, SpectralPoint(lam, 0.0, -1))
    lhs = psi.with_values(up - um).inner(psi)
    seq = shell_average_sequence(psi.with_values(up)) / (2 * np.pi)
    g = shell_rate(grid.spec)
    t = 2.0 ** -g
    extrap = (seq[-1] - t * seq[-2]) / (1 - t) if seq.size >= 2 else seq[-1]
    return {"lhs": [lhs.real, lhs.imag], "shell_sequence": seq.tolist(),
            "rel_error_last_shell": float(abs(1j * seq[-1] - lhs) / abs(lhs)),
            "rel_error_extrapolated": float(abs(1j * extrap - lhs) / abs(lhs))}


def linearity_check(grid: ChannelGrid, lam: float, resolvent: Resolvent | None = None,
                    seed: int = 0) -> dict:
    """Additivity/homogeneity of ``v -> F^-(lambda)^* v`` and ``psi -> F^+(lambda) psi``."""
    rng = np.random.default_rng(seed)
    rv = resolvent or Resolvent(grid)
    nch = len(channel_labels(grid))
    v1 = angular(grid, rng.normal(size=nch) + 1j * rng.normal(size=nch))
    v2 = angular(grid, rng.normal(size=nch) + 1j * rng.normal(size=nch))
    c = complex(rng.normal(), rng.normal())
    e = lambda v: wave_matrix_adjoint(grid, lam, -1, v, rv).phi.values  # noqa: E731
    a, b, ab = e(v1), e(v2), e(v1 * c + v2)
    err_v = float(np.linalg.norm(ab - c * a - b) / np.linalg.norm(ab))
    x = grid.x
    p1 = grid.field(np.exp(-(x - 0.5) ** 2) * (1 + 0.3j * x))
    p2 = grid.field(np.exp(-2 * (x + 0.7) ** 2))
    F = lambda p: cesaro_wave_matrix(grid, lam, 1, p, rv)[0].values  # noqa: E731
    f1, f2, f12 = F(p1), F(p2), F(p1 * c + p2)
    err_p = float(np.linalg.norm(f12 - c * f1 - f2) / np.linalg.norm(f12))
    return {"synthesis": err_v, "wave_matrix": err_p}


# ---------------------------------------------------------------- Rellich
@dataclasses.dataclass
class RellichReport:
    lam: float
    slopes: list
    profiles: list
    evidence_only: bool = True

    @property
    def all_nondecaying(self):
        return bool(all(s >= 0 for s in self.slopes))

    def as_dict(self):
        return {"lambda": self.lam, "slopes": self.slopes,
                "profiles": [p.tolist() for p in self.profiles],
                "all_nondecaying": self.all_nondecaying,
                "note": "evidence only: a finite grid cannot certify absence of B0* eigenfunctions"}


def rellich_probe(grid: ChannelGrid, lam: float, seeds: int = 10, iterations: int = 6,
                  seed: int = 0) -> RellichReport:
    """Inverse iteration at shift ``lambda`` on the self-adjoint truncation.

    Every converged quasi-mode is examined for ``B0*`` decay; a
    non-negative fitted profile slope means the mode is spread out to the
    truncation boundary rather than decaying like a ``B0*`` eigenfunction.
    """
    op = assemble_hamiltonian(grid, z=lam, bc="dirichlet")
    op.factor()
    rng = np.random.default_rng(seed)
    slopes, profiles = [], []
    sl = op.phys_slice
    for _ in range(seeds):
        u = rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n)
        for _ in range(iterations):
            full = op.solve_physical(u)
            u = full[sl]
            u = u / np.sqrt(np.sum(grid.weights * np.abs(u) ** 2))
        # B0* membership means 2^(-n/2) |F_n u| -> 0, which is the shell profile
        prof = grid.field(u).shell_norms().profile
        profiles.append(prof)
        nn = np.arange(prof.size)
        slopes.append(float(np.polyfit(nn[1:], np.log2(prof[1:]), 1)[0]))
    return RellichReport(lam=lam, slopes=slopes, profiles=profiles)


__all__ = [
    "AngularVector", "ScatteringMatrix", "EigenfunctionRecord", "Incident", "ScatteringError",
    "CesaroRecord", "DecompositionReport", "RellichReport", "SweepReport", "Exterior",
    "trace_prefactor", "incident_prefactor", "extraction_constant", "basis_vector", "angular",
    "exterior", "jost_amplitudes", "shell_trace", "cesaro_average", "trace_average",
    "cesaro_wave_matrix", "parseval_check", "build_incident", "wave_matrix_adjoint",
    "sommerfeld_check", "scattering_matrix", "channel_smatrix", "scattering_grid",
    "default_length", "trace_start", "cutoff_index", "lg_breakdown_level", "smatrix_sweep", "fit_holder", "extract_asymptotic_xi", "model_wave",
    "decomposition_check", "shell_average_sequence", "shell_rate", "flux_identity",
    "linearity_check", "rellich_probe", "interior_residual",
]
