"""Geometric and phase quantities of the repulsive problem.

Everything here is a closed-form function of the radius ``rho = |x|``
(and, in one dimension, of the direction ``x/|x| = +-1`` when ``q`` is not
even). Derivatives come from truncated Taylor arithmetic, so the identities
that involve ``Delta f``, ``d^f Delta f`` and ``d^r q0`` are evaluated without
grid differences.

Conventions
-----------
* ``chi`` is the smooth step equal to 1 on ``s <= 1`` and 0 on ``s >= 2``.
* ``r = chi(|x|) + (1 - chi(|x|)) |x|`` is the smoothed radius.
* ``f = (r^(1-alpha/2) - 1)/(1 - alpha/2) + 1`` is the escape function.
* ``theta = r^(1+alpha/2)/(1+alpha/2) + lambda f`` is the default phase.
"""
from __future__ import annotations

import dataclasses
from typing import Callable

import numpy as np

from . import _jet
from ._jet import Jet
from .potential import PotentialSpec

JET_ORDER = 5


class BranchError(ValueError):
    """The square-root argument ``2(z - q0) + r^alpha`` hit the cut (-inf, 0]."""


# --------------------------------------------------------------------- cutoff
def _cutoff_jet(s: Jet) -> Jet:
    sv = np.real(s.value)
    lo = sv <= 1.0
    hi = sv >= 2.0
    mid = ~(lo | hi)
    safe = Jet(np.where(mid, s.c, np.where(np.arange(s.order + 1) == 0, 1.5, 0.0)
                        .reshape((-1,) + (1,) * (s.c.ndim - 1))))
    g_left = _jet.exp(-1.0 / (2.0 - safe))
    g_right = _jet.exp(-1.0 / (safe - 1.0))
    mid_val = g_left / (g_left + g_right)
    return _jet.where(lo, 1.0, _jet.where(hi, 0.0, mid_val))


def eval_cutoff(s, nderiv: int = 0):
    """Smooth step ``chi(s)`` and optionally its derivatives.

    Returns the value when ``nderiv = 0`` and otherwise an array whose leading
    axis holds ``chi, chi', ..., chi^(nderiv)``.

    >>> float(eval_cutoff(0.5)), float(eval_cutoff(3.0))
    (1.0, 0.0)
    """
    s = np.asarray(s, dtype=float)
    jet = _cutoff_jet(Jet.variable(s, max(nderiv, 1)))
    if nderiv == 0:
        return jet.value
    return jet.derivatives()[: nderiv + 1]


def cutoff_of(jet: Jet) -> Jet:
    """``chi`` composed with a jet argument."""
    return _cutoff_jet(jet)


# ------------------------------------------------------------ radial profiles
@dataclasses.dataclass(frozen=True)
class RadialGeometry:
    """Jets of ``r`` and ``f`` in the variable ``rho = |x|``."""

    rho: np.ndarray
    alpha: float
    d: int
    r: Jet
    f: Jet

    @property
    def fprime(self):
        return self.f.deriv(1)

    def laplacian_f(self) -> Jet:
        """Jet of ``Delta f = f'' + (d - 1) f'/rho`` (two orders shorter)."""
        df = self.f.differentiate()
        lap = df.differentiate()
        if self.d > 1:
            rho = Jet.variable(self.rho, lap.order)
            safe = Jet(np.where(np.asarray(self.rho) > 0, rho.c, 1.0))
            lap = lap + (self.d - 1) * df.truncate(lap.order) / safe
        return lap

    def along_f(self, g: Jet) -> Jet:
        """Jet of ``d^f g = f' g'`` for a radial ``g``."""
        dg = g.differentiate()
        return self.f.differentiate().truncate(dg.order) * dg


def radial_geometry(rho, alpha: float, d: int = 1, order: int = JET_ORDER) -> RadialGeometry:
    rho = np.asarray(rho, dtype=float)
    t = Jet.variable(rho, order)
    chi = _cutoff_jet(t)
    r = chi + (1.0 - chi) * t
    e = 1.0 - alpha / 2
    f = (r ** e - 1.0) / e + 1.0
    return RadialGeometry(rho=rho, alpha=alpha, d=d, r=r, f=f)


def f_of_radius(rho, alpha):
    """Escape function value (vectorized, no derivatives)."""
    return radial_geometry(rho, alpha, order=1).f.value


def radius_of_f(fval, alpha):
    """Inverse of the escape function on ``f >= f(2)`` where ``r = |x|``."""
    e = 1.0 - alpha / 2
    return (e * (np.asarray(fval, dtype=float) - 1.0) + 1.0) ** (1.0 / e)


@dataclasses.dataclass(frozen=True)
class PointGeometry:
    r: np.ndarray
    f: np.ndarray
    grad_r: np.ndarray
    grad_f: np.ndarray
    lap_f: np.ndarray


def eval_r_f(x, alpha: float) -> PointGeometry:
    """``r``, ``f``, their gradients and ``Delta f`` at points ``x``.

    ``x`` has shape ``(..., d)``; a scalar is read as a point of the line.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    d = x.shape[-1]
    rho = np.linalg.norm(x, axis=-1)
    g = radial_geometry(rho, alpha, d)
    with np.errstate(invalid="ignore", divide="ignore"):
        xhat = np.where(rho[..., None] > 0, x / rho[..., None], 0.0)
    return PointGeometry(
        r=g.r.value,
        f=g.f.value,
        grad_r=g.r.deriv(1)[..., None] * xhat,
        grad_f=g.fprime[..., None] * xhat,
        lap_f=g.laplacian_f().value,
    )


def eval_theta(lam: float, x, alpha: float):
    """Default phase ``theta(lambda, x)``."""
    pg = eval_r_f(x, alpha)
    return pg.r ** (1 + alpha / 2) / (1 + alpha / 2) + lam * pg.f


def theta_jet(lam, geom: RadialGeometry) -> Jet:
    a = geom.alpha
    return geom.r ** (1 + a / 2) / (1 + a / 2) + lam * geom.f


def grad_theta(lam: float, x, alpha: float):
    pg = eval_r_f(x, alpha)
    return (pg.r ** (alpha / 2))[..., None] * pg.grad_r + lam * pg.grad_f


# --------------------------------------------------------------- q0, a, q2
def _q_jet(spec: PotentialSpec | None, rho, order, direction):
    t = Jet.variable(np.asarray(rho, dtype=float), order)
    if spec is None or spec.is_free:
        return Jet.constant(0.0, order, np.shape(rho))
    return spec.q_ray(t, direction)


def q0_jet(geom: RadialGeometry, spec: PotentialSpec | None = None, direction=1.0) -> Jet:
    """Jet of ``q0 = q + r^a (Df)^2/8 + (a/4) r^(a/2-1) Df + r^a d^f Df/4 - (a/4) r^-2``."""
    a = geom.alpha
    lap = geom.laplacian_f()
    dlap = geom.along_f(lap)
    n = dlap.order
    r = geom.r.truncate(n)
    lap = lap.truncate(n)
    ra = r ** a
    out = (ra * lap * lap / 8.0 + (a / 4) * r ** (a / 2 - 1) * lap
           + ra * dlap / 4.0 - (a / 4) * r ** (-2.0))
    return out + _q_jet(spec, geom.rho, n, direction)


def eval_q0(rho, alpha: float, spec: PotentialSpec | None = None, d: int = 1, direction=1.0):
    """``q0`` on the ray ``x = direction * rho``."""
    return q0_jet(radial_geometry(rho, alpha, d), spec, direction).value


def q0_free_tail_constant(alpha: float, d: int = 1) -> float:
    """Constant ``c`` with ``q0 = c r^-2`` for ``q = 0`` and ``r >= 2``."""
    e = 1 - alpha / 2
    # f' = r^{-a/2}, f'' = -(a/2) r^{-a/2-1}; Df = f'' + (d-1) f'/r
    k = -(alpha / 2) + (d - 1)            # Df = k r^{-a/2-1}
    kp = k * (-(alpha / 2) - 1)           # (Df)' = kp r^{-a/2-2}
    return k * k / 8 + (alpha / 4) * k + kp / 4 - alpha / 4 + 0 * e


@dataclasses.dataclass(frozen=True)
class PhaseContext:
    """Data fixing the asymptotic complex phase ``a_z``.

    ``m`` is the cutoff index: on ``{f >= 2^m}`` the radicand
    ``2 Re z - 2 q0 + r^alpha`` exceeds 1 for every energy of the window.
    """

    spec: PotentialSpec
    m: int
    lam_window: tuple = (0.0, 4.0)

    @property
    def alpha(self):
        return self.spec.alpha

    @property
    def d(self):
        return self.spec.d

    @classmethod
    def choose(cls, spec: PotentialSpec, lam_min: float, lam_max: float | None = None,
               m_max: int = 40):
        lam_max = lam_min if lam_max is None else lam_max
        for m in range(m_max + 1):
            f_lo = 2.0 ** m
            rho = _rho_samples_above(f_lo, spec.alpha)
            ok = True
            for direction in (1.0, -1.0) if spec.d == 1 else (1.0,):
                q0 = eval_q0(rho, spec.alpha, spec, spec.d, direction)
                r = radial_geometry(rho, spec.alpha, spec.d, order=1).r.value
                if np.any(2 * lam_min - 2 * q0 + r ** spec.alpha <= 1.0):
                    ok = False
                    break
            if ok:
                return cls(spec=spec, m=m, lam_window=(lam_min, lam_max))
        raise ValueError("no admissible cutoff index found")


def _rho_samples_above(f_lo, alpha, n=4000):
    rho_lo = _rho_of_f_any(f_lo, alpha)
    return np.concatenate([np.linspace(rho_lo, rho_lo + 20, n), np.geomspace(rho_lo + 20, 1e7, n)])


def _rho_of_f_any(fval, alpha):
    if fval <= 1.0:
        return 0.0
    from scipy.optimize import brentq

    return brentq(lambda s: f_of_radius(s, alpha) - fval, 0.0, 1e12)


def chi_bar(m: int, fjet: Jet) -> Jet:
    return 1.0 - _cutoff_jet(fjet * (1.0 / 2.0 ** m))


def _check_branch(arg, mask):
    bad = mask & (np.abs(np.imag(arg)) <= 1e-300) & (np.real(arg) <= 0)
    if np.any(bad):
        raise BranchError(
            "2(z - q0) + r^alpha lies on (-inf, 0]; increase the cutoff index or "
            "restrict the energy window"
        )


def phase_a_jet(z, geom: RadialGeometry, sign: int, ctx: PhaseContext, direction=1.0,
                with_cutoff: bool = True) -> Jet:
    a = geom.alpha
    q0 = q0_jet(geom, ctx.spec, direction)
    n = q0.order
    r = geom.r.truncate(n)
    w = 2.0 * (z - q0) + r ** a
    cb = chi_bar(ctx.m, geom.f.truncate(n))
    _check_branch(w.value, cb.value > 0 if with_cutoff else np.ones_like(geom.rho, bool))
    ratio = (z - q0) / w
    core = (r ** (-a / 2) * _jet.sqrt(w)
            + sign * 0.5j * a * r ** (-a / 2 - 1)
            - sign * 0.5j * a * ratio * r ** (-a / 2 - 1))
    return cb * core if with_cutoff else core


def eval_phase_a(z, rho, sign: int, ctx: PhaseContext, direction=1.0, with_cutoff=True):
    """Asymptotic complex phase ``a_z`` on the ray ``direction * rho``.

    ``sign = +1`` for ``z`` in the upper family (outgoing), ``-1`` otherwise.
    """
    z = complex(z)
    if sign * z.imag < 0:
        raise ValueError("Im z must carry the sign of the branch (or vanish)")
    geom = radial_geometry(rho, ctx.alpha, ctx.d)
    return phase_a_jet(z, geom, sign, ctx, direction, with_cutoff).value


def eval_q2(z, rho, sign: int, ctx: PhaseContext, direction=1.0, form: str = "closed"):
    """Remainder ``q2`` of the factorization of ``H - z``.

    ``form="closed"`` uses the simplified expression valid where ``r = |x|``,
    ``form="printed"`` the same expression without the ``(a^2/8) r^-2 (z-q0)/w``
    term (kept for comparison), and ``form="definition"`` evaluates ``+-(p^f r^a a)/2 + r^a a^2/2 - r^a/2 + q0
    + (a/4) r^-2 - z`` directly.
    """
    z = complex(z)
    a = ctx.alpha
    geom = radial_geometry(rho, a, ctx.d)
    q0 = q0_jet(geom, ctx.spec, direction)
    n = q0.order
    r = geom.r.truncate(n)
    if form in ("closed", "printed"):
        w = 2.0 * z - 2.0 * q0 + r ** a
        _check_branch(w.value, np.ones(np.shape(rho), bool))
        ratio = (z - q0) / w
        dq0 = q0.differentiate().value
        dratio = ratio.differentiate().value
        rv, wv, ra = r.value, w.value, ratio.value
        out = (sign * 0.5j * dq0 / np.sqrt(wv)
               - (a / 4) * dratio / rv
               + (a / 4) * ra / rv ** 2
               - (a * a / 8) * ra ** 2 / rv ** 2)
        if form == "closed":
            # the square of the phase contributes -(a^2/8) r^-2 (1 - ratio)^2,
            # whose cross term is missing from the printed simplification
            out = out + (a * a / 8) * ra / rv ** 2
        return out
    if form == "definition":
        aj = phase_a_jet(z, geom, sign, ctx, direction, with_cutoff=False)
        ra_a = r.truncate(aj.order) ** a * aj
        pf = -1j * geom.along_f(ra_a).value
        rv = r.value
        av = aj.value
        return (sign * 0.5 * pf + 0.5 * rv ** a * av ** 2 - 0.5 * rv ** a
                + q0.value + (a / 4) * rv ** (-2.0) - z)
    raise ValueError(form)


def eval_ell(x, alpha: float):
    """Angular tensor ``|grad f|^2 I - grad f grad f^T`` at points ``x``."""
    pg = eval_r_f(x, alpha)
    g = pg.grad_f
    d = g.shape[-1]
    norm2 = np.sum(g * g, axis=-1)
    return norm2[..., None, None] * np.eye(d) - g[..., :, None] * g[..., None, :]


# ---------------------------------------------------------------- eikonal
@dataclasses.dataclass
class EikonalFit:
    f: np.ndarray
    residual: np.ndarray
    exponent: float | None
    exact: bool
    predicted: float | None = None
    raw_exponent: float | None = None

    def as_dict(self):
        return {"exponent": self.exponent, "raw_exponent": self.raw_exponent,
                "exact": self.exact, "predicted": self.predicted}


def default_phase_derivative(lam: float, alpha: float) -> Callable:
    """Radial derivative of the default phase."""
    def dtheta(rho):
        g = radial_geometry(rho, alpha, order=1)
        r = g.r.value
        return (r ** (alpha / 2) + lam * r ** (-alpha / 2)) * g.r.deriv(1)
    return dtheta


def free_exact_phase_derivative(lam: float) -> Callable:
    """``d/drho`` of ``(2/3)(rho + 2 lambda)^(3/2)``, exact for alpha = 1, q = 0."""
    return lambda rho: np.sqrt(np.asarray(rho) + 2 * lam)


def predicted_eikonal_order(spec: PotentialSpec) -> float:
    a = spec.alpha
    return 1 + min(spec.rho, (1.5 * a - 1) / (1 - a / 2))


def eikonal_residual(lam: float, spec: PotentialSpec, phase: Callable | None = None,
                     f_range=(10.0, 1e3), n: int = 200, rho=None, direction=1.0,
                     noise: float = 1e-13) -> EikonalFit:
    """Residual ``|d theta|^2/2 - |x|^a/2 + q - lambda`` and its decay exponent in ``f``.

    With ``phase=None`` the default phase is used and the residual is formed
    from its expanded form, which avoids cancellation for large ``r``. A
    user phase is given as the radial derivative ``rho -> d theta/d rho``.
    When every sample is below ``noise`` times the size of the kinetic term the
    residual is reported as exact.
    """
    a = spec.alpha
    if rho is None:
        fv = np.geomspace(f_range[0], f_range[1], n)
        rho = radius_of_f(fv, a)
        if np.any(rho < 2.0):
            raise ValueError("f_range must lie in the region r >= 2")
    else:
        rho = np.asarray(rho, dtype=float)
        fv = f_of_radius(rho, a)
    q = _q_jet(spec, rho, 0, direction).value
    if phase is None:
        g = radial_geometry(rho, a, order=1)
        r, rp = g.r.value, g.r.deriv(1)
        res = (0.5 * rp ** 2 * r ** a - 0.5 * rho ** a + lam * (rp ** 2 - 1)
               + 0.5 * lam ** 2 * r ** (-a) * rp ** 2 + q)
        scale = 0.5 * rho ** a + abs(lam)
    else:
        dth = np.asarray(phase(rho))
        kin = 0.5 * dth ** 2
        res = kin - 0.5 * rho ** a + q - lam
        scale = np.maximum(kin, 0.5 * rho ** a) + abs(lam)
    absres = np.abs(res)
    exact = bool(np.all(absres <= noise * scale + 1e-300))
    exponent = raw = None
    if not exact:
        keep = absres > noise * scale
        if keep.sum() >= 5:
            raw, exponent = fit_decay_exponent(fv[keep], absres[keep])
    return EikonalFit(f=fv, residual=res, exponent=exponent, exact=exact,
                      predicted=predicted_eikonal_order(spec), raw_exponent=raw)


def fit_decay_exponent(fv, values):
    """Decay exponent of ``values ~ C f^-gamma`` from samples.

    Returns ``(raw, asymptotic)``: ``raw`` is the least-squares log-log slope;
    ``asymptotic`` fits the local slopes ``-d log|v| / d log f`` by a quadratic
    in ``1/f`` and keeps the intercept, which removes the ``1/f``
    pre-asymptotic drift (for instance ``r^-a`` seen through ``f + const``).
    """
    lf = np.log(fv)
    lv = np.log(np.abs(values))
    raw = float(-np.polyfit(lf, lv, 1)[0])
    local = -np.gradient(lv, lf)
    inter = np.polyfit(1.0 / fv[1:-1], local[1:-1], 2)[-1]
    return raw, float(inter)


# ---------------------------------------------------------- conjugate op A
def apply_A(u):
    """Conjugate operator ``A = p^f - (i/2) Delta f`` on a grid field.

    ``u`` is a :class:`repscat.grid.WaveField`; the radial derivative is
    taken with the grid's centered stencil of the configured order. For radial
    channels the operator is conjugated to the reduced function
    ``r^((d-1)/2) psi``.
    """
    grid = u.grid
    return u.with_values(grid.pf(u.values) - 0.5j * grid.lap_f * u.values)


def factorization_operator(z, u, sign: int, ctx: PhaseContext):
    """``[ (A +- a) r^a (A -+ a)/2 + q2 ] u`` on a one-dimensional grid field.

    ``a`` and ``q2`` are evaluated on ``{f >= 2^(m+1)}`` (where the identity
    holds) and set to zero elsewhere; probes must live inside that set.
    The ``l``-term vanishes in one dimension.
    """
    grid = u.grid
    if grid.d != 1:
        raise NotImplementedError("the factorization check is implemented for d = 1")
    rho = grid.rho
    direction = np.sign(grid.x)
    a_vals = np.zeros(rho.shape, complex)
    q2 = np.zeros(rho.shape, complex)
    ra = radial_geometry(rho, ctx.alpha, ctx.d, order=1).r.value ** ctx.alpha
    region = grid.f >= 2.0 ** (ctx.m + 1)
    for s in (1.0, -1.0):
        sel = (direction == s) & region
        if np.any(sel):
            a_vals[sel] = eval_phase_a(z, rho[sel], sign, ctx, s, with_cutoff=False)
            q2[sel] = eval_q2(z, rho[sel], sign, ctx, s, form="definition")
    inner = apply_A(u).values - sign * a_vals * u.values
    outer = apply_A(u.with_values(ra * inner)).values + sign * a_vals * ra * inner
    return 0.5 * outer + q2 * u.values


def factorization_residual(z, u, spec: PotentialSpec, sign: int, ctx: PhaseContext | None = None,
                           interior=None):
    """Relative residual ``|(H - z) u - factorized u| / |u|`` on a shell-supported probe.

    Both sides are discretized with the grid stencils, so the residual is a
    pure discretization error and must converge at the stencil order.
    """
    grid = u.grid
    ctx = ctx or PhaseContext.choose(spec, float(np.real(z)))
    if np.any((np.abs(u.values) > 1e-300) & (grid.f < 2.0 ** (ctx.m + 1))):
        raise ValueError(f"probe must be supported in f >= 2^{ctx.m + 1}")
    lhs = grid.apply_continuum(u.values, z)
    rhs = factorization_operator(z, u, sign, ctx)
    w = grid.weights
    sel = slice(None) if interior is None else interior
    num = np.sqrt(np.sum(w[sel] * np.abs(lhs - rhs)[sel] ** 2))
    den = np.sqrt(np.sum(w * np.abs(u.values) ** 2))
    return float(num / den)


# ----------------------------------------------------------------- weights
def eval_weight_theta(f, delta: float, nu: int, nderiv: int = 2):
    """Weight ``theta = [1 - (1 + f/2^nu)^-delta]/delta`` and its ``f``-derivatives."""
    f = np.asarray(f, dtype=float)
    s = 2.0 ** (-nu)
    base = 1.0 + f * s
    out = [(1.0 - base ** (-delta)) / delta]
    coef = s
    expo = -1.0 - delta
    for k in range(1, nderiv + 1):
        out.append(coef * base ** expo)
        coef = coef * expo * s
        expo = expo - 1.0
    return tuple(out)


@dataclasses.dataclass
class WeightSweep:
    delta: float
    c_lower: float
    c_upper: float
    c_derivative: float
    c_higher: dict
    violations: int

    @property
    def passed(self):
        return (self.violations == 0 and self.c_lower > 0 and self.c_derivative > 0
                and np.isfinite(self.c_upper) and all(np.isfinite(v) for v in self.c_higher.values()))


def weight_inequality_sweep(delta: float, nus=range(11), f=None, kmax: int = 3) -> WeightSweep:
    """Fit the constants of the weight inequalities uniformly in ``nu``.

    Checks ``c/2^nu <= theta <= min(C, f/2^nu)``,
    ``c min(2^nu, f)^delta f^(-1-delta) theta <= theta' <= theta/f`` and
    ``0 <= (-1)^(k-1) theta^(k) <= C_k f^-k theta`` for ``k = 2..kmax``.
    """
    if f is None:
        f = np.geomspace(1.0, 1e4, 2000)
    c_low, c_up, c_der = np.inf, 0.0, np.inf
    c_hi = {k: 0.0 for k in range(2, kmax + 1)}
    bad = 0
    tol = 1e-12
    for nu in nus:
        th = eval_weight_theta(f, delta, nu, kmax)
        t0, t1 = th[0], th[1]
        c_low = min(c_low, float(np.min(t0 * 2.0 ** nu)))
        c_up = max(c_up, float(np.max(t0)))
        bad += int(np.sum(t0 > f / 2.0 ** nu * (1 + tol)))
        bad += int(np.sum(t1 > t0 / f * (1 + tol)))
        lower = np.minimum(2.0 ** nu, f) ** delta * f ** (-1 - delta) * t0
        c_der = min(c_der, float(np.min(t1 / lower)))
        for k in range(2, kmax + 1):
            signed = (-1) ** (k - 1) * th[k]
            bad += int(np.sum(signed < -tol * np.abs(th[k])))
            c_hi[k] = max(c_hi[k], float(np.max(signed * f ** k / t0)))
    return WeightSweep(delta=delta, c_lower=c_low, c_upper=c_up, c_derivative=c_der,
                       c_higher=c_hi, violations=bad)


__all__ = [
    "BranchError", "PhaseContext", "RadialGeometry", "PointGeometry", "EikonalFit",
    "WeightSweep", "eval_cutoff", "radial_geometry", "eval_r_f", "eval_theta",
    "grad_theta", "theta_jet", "eval_q0", "q0_jet", "q0_free_tail_constant",
    "eval_phase_a", "eval_q2", "eval_ell", "eikonal_residual",
    "default_phase_derivative", "free_exact_phase_derivative",
    "predicted_eikonal_order", "apply_A", "factorization_operator",
    "factorization_residual", "eval_weight_theta", "weight_inequality_sweep",
    "f_of_radius", "radius_of_f", "chi_bar", "fit_decay_exponent",
]
