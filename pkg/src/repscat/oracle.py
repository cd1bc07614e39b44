"""Reference scattering matrices independent of the grid pipeline.

Two generators are provided.

* :func:`airy_smatrix` treats ``alpha = 1``, ``q = 0``, ``d = 1`` in closed
  form: on each half-line ``-u''/2 - |x| u/2 = lambda u`` is Airy's equation
  in ``-(|x| + 2 lambda)``.
* :func:`ode_smatrix` integrates the channel equation from the origin with an
  adaptive eighth-order Runge-Kutta method and reads off the incoming and
  outgoing amplitudes against the exterior Jost solutions.

Convention: for ``d = 1`` the angular basis is ``(omega = +1, omega = -1)``
and a generalized eigenfunction behaves like

    u ~ (2 pi)^(-1/2) [ e^{-i pi kappa/4} xi_+(omega) w_+ + e^{i pi kappa/4} xi_-(-omega) w_- ],

so that ``xi_+ = S xi_-`` with ``S = e^{i pi kappa/2} T``, where ``T`` maps the
incoming amplitudes ``(M_left, M_right)`` to the outgoing ones
``(P_right, P_left)``.
"""
from __future__ import annotations

import dataclasses
import math

import mpmath as mp
import numpy as np
from scipy import integrate

from .asymptotics import JostPair, centrifugal_coefficient
from .potential import PotentialSpec, free

# ------------------------------------------------------------------ Airy
_AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
_AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))
_SWITCH = 9.0


def _airy_series(x):
    """Maclaurin series in multiprecision (cancellation-safe for moderate |x|)."""
    with mp.workdps(45):
        x = mp.mpf(x)
        c1, c2 = mp.mpf(1) / (mp.power(3, mp.mpf(2) / 3) * mp.gamma(mp.mpf(2) / 3)), \
            mp.mpf(1) / (mp.power(3, mp.mpf(1) / 3) * mp.gamma(mp.mpf(1) / 3))
        x3 = x ** 3
        f = fp = g = gp = mp.mpf(0)
        tf = mp.mpf(1)    # x^{3k} / [(2)(3)(5)(6)...]
        tg = x            # x^{3k+1} / [(3)(4)(6)(7)...]
        k = 0
        while True:
            f += tf
            g += tg
            if k > 0:
                fp += tf * 3 * k / x
            gp += tg * (3 * k + 1) / x if x != 0 else (1 if k == 0 else 0)
            nf = tf * x3 / ((3 * k + 2) * (3 * k + 3))
            ng = tg * x3 / ((3 * k + 3) * (3 * k + 4))
            k += 1
            if abs(nf) + abs(ng) < mp.mpf(10) ** -40 * (abs(f) + abs(g) + 1):
                break
            tf, tg = nf, ng
        if x == 0:
            fp, gp = mp.mpf(0), mp.mpf(1)
        ai = c1 * f - c2 * g
        aip = c1 * fp - c2 * gp
        s3 = mp.sqrt(3)
        bi = s3 * (c1 * f + c2 * g)
        bip = s3 * (c1 * fp + c2 * gp)
        return float(ai), float(aip), float(bi), float(bip)


def _uv_coefficients(n):
    u = [1.0]
    v = [1.0]
    for k in range(1, n):
        uk = u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
        u.append(uk)
        v.append(-(6 * k + 1) / (6 * k - 1) * uk)
    return u, v


_U, _V = _uv_coefficients(40)


def _airy_negative(t):
    """Ai, Ai', Bi, Bi' at ``x = -t`` for large ``t`` (oscillatory region)."""
    zeta = 2.0 / 3.0 * t ** 1.5
    # P, Q for the function, R, S for the derivative
    P = Q = R = S = 0.0
    prevP = math.inf
    for k in range(len(_U)):
        tu = _U[k] / zeta ** k
        tv = _V[k] / zeta ** k
        if max(abs(tu), abs(tv)) > prevP:
            break
        prevP = max(abs(tu), abs(tv))
        sgn = (-1) ** (k // 2)
        if k % 2 == 0:
            P += sgn * tu
            R += sgn * tv
        else:
            Q += sgn * tu
            S += sgn * tv
    ph = zeta - math.pi / 4
    c, s = math.cos(ph), math.sin(ph)
    amp = 1.0 / (math.sqrt(math.pi) * t ** 0.25)
    ampd = t ** 0.25 / math.sqrt(math.pi)
    ai = amp * (c * P + s * Q)
    bi = amp * (-s * P + c * Q)
    aip = ampd * (s * R - c * S)
    bip = ampd * (c * R + s * S)
    return ai, aip, bi, bip


def _airy_positive(x):
    zeta = 2.0 / 3.0 * x ** 1.5
    sa = sb = da = db = 0.0
    prev = math.inf
    for k in range(len(_U)):
        tu = _U[k] / zeta ** k
        tv = _V[k] / zeta ** k
        if max(abs(tu), abs(tv)) > prev:
            break
        prev = max(abs(tu), abs(tv))
        sa += (-1) ** k * tu
        sb += tu
        da += (-1) ** k * tv
        db += tv
    e = math.exp(-zeta)
    E = math.exp(zeta)
    ai = e / (2 * math.sqrt(math.pi) * x ** 0.25) * sa
    aip = -x ** 0.25 * e / (2 * math.sqrt(math.pi)) * da
    bi = E / (math.sqrt(math.pi) * x ** 0.25) * sb
    bip = x ** 0.25 * E / math.sqrt(math.pi) * db
    return ai, aip, bi, bip


def airy(x):
    """``(Ai, Ai', Bi, Bi')`` at real ``x`` (scalar or array).

    Multiprecision Maclaurin series for ``|x| <= 9`` and optimally truncated
    asymptotic expansions beyond.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((4,) + xs.shape)
    for i, v in np.ndenumerate(xs):
        if v < -_SWITCH:
            vals = _airy_negative(-v)
        elif v > _SWITCH:
            vals = _airy_positive(v)
        else:
            vals = _airy_series(v)
        out[(slice(None),) + i] = vals
    if np.ndim(x) == 0:
        return tuple(float(o[0]) for o in out)
    return tuple(out)


# --------------------------------------------------------------- results
@dataclasses.dataclass
class OracleResult:
    lam: float
    S: np.ndarray
    method: str
    kappa: float
    radii: tuple = ()
    table: dict = dataclasses.field(default_factory=dict)
    meta: dict = dataclasses.field(default_factory=dict)

    @property
    def unitarity_defect(self):
        S = np.atleast_2d(self.S)
        return float(np.linalg.norm(S.conj().T @ S - np.eye(S.shape[0]), 2))

    def to_json(self):
        S = np.atleast_2d(self.S)
        return {"schema_version": 1, "lambda": self.lam, "matrix_re": S.real.tolist(),
                "matrix_im": S.imag.tolist(), "defect": self.unitarity_defect,
                "method": self.method, "meta": self.meta}


def _kappa(d, alpha):
    return (d + alpha / 2 - 1) / (1 + alpha / 2)


def _assemble_S(PR, PL, ML, MR, kappa):
    """``S = e^{i pi kappa/2} [P_R; P_L] [M_L; M_R]^{-1}`` from two solutions."""
    P = np.array([PR, PL])
    M = np.array([ML, MR])
    return np.exp(0.5j * np.pi * kappa) * P @ np.linalg.inv(M)


# ------------------------------------------------------------ Airy oracle
def _airy_jost(s, lam):
    """Exact Jost solutions of ``u'' + (s + 2 lambda) u = 0`` on ``s >= 0``."""
    ai, aip, bi, bip = airy(-(np.asarray(s, float) + 2 * lam))
    cp = 1j * math.sqrt(math.pi) * np.exp(-0.25j * math.pi - 1j * lam)
    cm = -1j * math.sqrt(math.pi) * np.exp(0.25j * math.pi + 1j * lam)
    wp = cp * (ai - 1j * bi)
    wm = cm * (ai + 1j * bi)
    dwp = -cp * (aip - 1j * bip)
    dwm = -cm * (aip + 1j * bip)
    return wp, wm, dwp, dwm


def airy_smatrix(lam: float) -> OracleResult:
    """Closed-form ``S(lambda)`` for ``alpha = 1``, ``q = 0``, ``d = 1``."""
    wp, wm, dwp, dwm = _airy_jost(0.0, lam)
    # u = P_R w_+(x) + M_R w_-(x) on x>0, u = P_L w_+(-x) + M_L w_-(-x) on x<0;
    # continuity of u and u' at 0 links the four amplitudes.
    # [wp, wm, -wp, -wm] . (P_R, M_R, P_L, M_L) = 0
    # [dwp, dwm, dwp, dwm] . (P_R, M_R, P_L, M_L) = 0  (u' from the left flips sign)
    A = np.array([[wp, -wp], [dwp, dwp]])          # acts on (P_R, P_L)
    B = -np.array([[-wm, wm], [dwm, dwm]])         # acts on (M_L, M_R)
    T = np.linalg.solve(A, B)
    kappa = _kappa(1, 1.0)
    S = np.exp(0.5j * np.pi * kappa) * T
    ai, aip, bi, bip = airy(-2 * lam)
    return OracleResult(lam=float(lam), S=S, method="airy", kappa=kappa,
                        meta={"wronskian_defect": abs(ai * bip - aip * bi - 1 / math.pi)})


# ------------------------------------------------------------- ODE oracle
def _rhs_factory(spec, lam, c, direction):
    a = spec.alpha

    def rhs(s, y):
        q = 0.0 if spec.is_free else float(np.real(spec.q(direction * s if spec.d == 1 else s)))
        V = -0.5 * abs(s) ** a + q + (0.5 * c / s ** 2 if c else 0.0)
        return [y[1], 2.0 * (V - lam) * y[0]]
    return rhs


def _integrate(spec, lam, c, direction, y0, s0, radii, rtol):
    sol = integrate.solve_ivp(_rhs_factory(spec, lam, c, direction), (s0, max(radii)),
                              y0, method="DOP853", rtol=rtol, atol=1e-14 * rtol / 1e-12,
                              dense_output=True)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol


def _mp_phase_tail(jost: JostPair, s0: float) -> float:
    """Multiprecision evaluation of the phase constant tail (cross-check path)."""
    g = jost._leading_power() - 1.0

    def integrand(u):
        s = float(u ** (-1.0 / g)) if u > 0 else 1e100
        s = min(s, 1e100)
        val = jost.phase_defect_density(np.array([s]))[0] * s ** (1.0 + g) / g
        return mp.mpf(float(np.real(val)))

    with mp.workdps(20):
        u0 = mp.mpf(s0) ** (-g)
        return float(mp.quad(integrand, [0, u0 * mp.mpf("1e-6"), u0 * mp.mpf("1e-3"), u0]))


class _OracleJost:
    """Jost solutions whose phase tail is computed by the multiprecision path."""

    def __init__(self, spec, lam, ell, direction):
        self.jost = JostPair(spec, lam, ell, direction)

    def values(self, s):
        s = np.atleast_1d(np.asarray(s, float))
        j = self.jost
        base = float(np.max(s))
        tail = _mp_phase_tail(j, base)
        j._tail_cache[base] = complex(tail)
        return j.values(s)


def _amplitudes(jv, y, dy):
    """Coefficients ``(P, M)`` with ``y = P w_+ + M w_-`` (value and slope)."""
    wp, wm, dwp, dwm = jv
    W = wp * dwm - dwp * wm
    P = (y * dwm - dy * wm) / W
    M = (wp * dy - dwp * y) / W
    return P, M


def _two_radius_amplitudes(jv, y1, y2):
    wp, wm = jv[0], jv[1]
    A = np.array([[wp[0], wm[0]], [wp[1], wm[1]]])
    return np.linalg.solve(A, np.array([y1, y2])), np.linalg.cond(A)


def _pick_radii(jost, r1, r2, max_cond=4.0, tries=40):
    """Respace ``r2`` until the two-radius extraction is well conditioned."""
    for _ in range(tries):
        jv = jost.values(np.array([r1, r2]))
        A = np.array([[jv[0][0], jv[1][0]], [jv[0][1], jv[1][1]]])
        cond = np.linalg.cond(A)
        if cond <= max_cond:
            return r2, jv
        k = abs(jost.jost.wavenumber(np.array([r2]))[0])
        r2 = r2 + 0.5 * math.pi / (2 * k)
    return r2, jv


def ode_smatrix(lam: float, spec: PotentialSpec | None = None, ell: int = 0,
                radii=(80.0, 100.0), rtol: float = 1e-12, method: str = "two-radius") -> OracleResult:
    """``S(lambda)`` by shooting from the origin.

    For ``d = 1`` the result is the 2x2 matrix over ``(omega=+1, omega=-1)``;
    for radial channels it is the scalar ``s_ell`` with
    ``S Y_ell = s_ell Y_ell``.

    ``method="two-radius"`` matches values at two radii (respaced
    automatically if the 2x2 system is ill conditioned);
    ``method="wronskian"`` matches value and slope at the outer radius.
    """
    spec = spec or free(1.0)
    a = spec.alpha
    kappa = _kappa(spec.d, a)
    r1, r2 = float(radii[0]), float(radii[1])
    if spec.d == 1:
        amps = {}
        used = {}
        for direction in (1.0, -1.0):
            jost = _OracleJost(spec, lam, 0, direction)
            r2_used, jv = _pick_radii(jost, r1, r2)
            used[direction] = (r1, r2_used)
            for k, y0 in enumerate(([1.0, 0.0], [0.0, 1.0])):
                y0 = [y0[0], direction * y0[1]]   # derivative along the ray
                sol = _integrate(spec, lam, 0.0, direction, y0, 0.0, (r1, r2_used), rtol)
                if method == "wronskian":
                    jv2 = jost.values(np.array([r2_used]))
                    yy = sol.sol(r2_used)
                    P, M = _amplitudes([v[0] for v in jv2], yy[0], yy[1])
                else:
                    (P, M), _ = _two_radius_amplitudes(jv, sol.sol(r1)[0], sol.sol(r2_used)[0])
                amps[(direction, k)] = (P, M)
        PR = [amps[(1.0, k)][0] for k in range(2)]
        MR = [amps[(1.0, k)][1] for k in range(2)]
        PL = [amps[(-1.0, k)][0] for k in range(2)]
        ML = [amps[(-1.0, k)][1] for k in range(2)]
        S = _assemble_S(PR, PL, ML, MR, kappa)
        return OracleResult(lam=float(lam), S=S, method=f"ode-{method}", kappa=kappa,
                            radii=(used[1.0], used[-1.0]),
                            table={"P_right": PR, "M_right": MR, "P_left": PL, "M_left": ML})
    c = centrifugal_coefficient(spec.d, ell)
    jost = _OracleJost(spec, lam, ell, 1.0)
    r2_used, jv = _pick_radii(jost, r1, r2)
    if c == 0:
        s0, y0 = 0.0, [0.0, 1.0]
    else:
        s0 = 1e-3
        q0 = 0.0 if spec.is_free else float(np.real(spec.q(0.0)))
        A2 = (2 * q0 - 2 * lam) / (4 * ell + 6)
        B = -1.0 / ((ell + a + 3) * (ell + a + 2) - ell * (ell + 1))
        p = ell + 1
        y0 = [s0 ** p * (1 + A2 * s0 ** 2 + B * s0 ** (a + 2)),
              p * s0 ** (p - 1) + A2 * (p + 2) * s0 ** (p + 1) + B * (p + a + 2) * s0 ** (p + a + 1)]
    sol = _integrate(spec, lam, c, 1.0, y0, s0, (r1, r2_used), rtol)
    if method == "wronskian":
        jv2 = jost.values(np.array([r2_used]))
        yy = sol.sol(r2_used)
        P, M = _amplitudes([v[0] for v in jv2], yy[0], yy[1])
    else:
        (P, M), _ = _two_radius_amplitudes(jv, sol.sol(r1)[0], sol.sol(r2_used)[0])
    s_ell = (-1) ** ell * np.exp(0.5j * np.pi * kappa) * P / M
    return OracleResult(lam=float(lam), S=np.array([[s_ell]]), method=f"ode-{method}",
                        kappa=kappa, radii=((r1, r2_used),), table={"P": P, "M": M},
                        meta={"ell": ell})


def stripped_amplitude_residual(lam: float, spec: PotentialSpec, radii, ell: int = 0,
                                direction: float = 1.0):
    """Residual of stripping the default phase from an exact outgoing solution.

    Integrates the outgoing Jost solution inward from far out and returns
    ``|r^{alpha/4} e^{-i theta} u - 1|`` at the given radii; it decays at the
    order of the eikonal residual integrated along the ray.
    """
    radii = np.asarray(radii, float)
    jost = JostPair(spec, lam, ell, direction)
    wp = jost.outgoing(radii)
    theta = jost.theta(radii)
    return np.abs(radii ** (spec.alpha / 4) * np.exp(-1j * theta) * wp - 1.0)


__all__ = ["airy", "airy_smatrix", "ode_smatrix", "OracleResult", "stripped_amplitude_residual"]
