"""Graded grids, conservative finite differences and dyadic shell norms.

The reduced channel problem ``-u''/2 + V u`` is discretized on a smooth
mapping ``x = X(xi)`` of a uniform lattice in ``xi``. The node density is
proportional to the local momentum ``sqrt(2 lambda_max + r^alpha)`` with an
extra concentration at the origin, where ``|x|^alpha`` has its only kink.
The kinetic term uses staggered differences in ``xi``,

    K = (1/2) D^T diag(1/J_half) D + diag(J (V - z)),

which is complex symmetric; ``K u = J psi`` is the discrete ``(H - z) u = psi``
and ``K`` is Hermitian in the ``J``-weighted inner product whenever ``z`` and
the closure are real.

Outside ``|x| <= L`` the solver can use a complex-stretched absorbing layer
(default), the exact Jost log-derivative ("dtn"), the radiation-condition
impedance built from the asymptotic phase ``a_z`` ("impedance"), or a plain
Dirichlet wall ("dirichlet", self-adjoint truncation).
"""
from __future__ import annotations

import dataclasses
import json
import math
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy import integrate

from . import kernels
from .asymptotics import JostPair, centrifugal_coefficient
from .geometry import radial_geometry
from .potential import PotentialSpec

#: staggered first-derivative weights c_k for offsets k + 1/2
STAGGERED = {
    2: (1.0,),
    4: (9.0 / 8.0, -1.0 / 24.0),
    6: (75.0 / 64.0, -25.0 / 384.0, 3.0 / 640.0),
}
DEFAULT_ORDER = 6
DEFAULT_PPW = 48.0
DEFAULT_BOOST = 1500.0
BOOST_WIDTH = 0.5
SIGMA0 = 0.4
CLOSURES = ("layer", "dtn", "impedance", "dirichlet")


class GridError(ValueError):
    """Invalid or infeasible grid request."""


# ------------------------------------------------------------------ helpers
def fornberg_weights(z0, xs, m):
    """Finite-difference weights for derivatives 0..m at ``z0`` on nodes ``xs``."""
    n = len(xs)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, xs[0] - z0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, xs[i] - z0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def continued_power(X, alpha):
    """``|x|^alpha`` continued off the real axis from each half-line."""
    X = np.asarray(X)
    pos = np.real(X) >= 0
    return np.where(pos, X, -X) ** alpha


# ------------------------------------------------------------------ shells
@dataclasses.dataclass(frozen=True)
class ShellPartition:
    """Dyadic shells ``F_n = {2^n <= f < 2^(n+1)}`` over the physical nodes."""

    index: np.ndarray          # shell number per node (-1 outside)
    n_complete: int            # shells 0..n_complete-1 lie fully inside |x| <= L
    f_max: float

    @property
    def n_shells(self):
        return int(self.index.max()) + 1 if self.index.size else 0

    def nodes(self, n):
        return np.flatnonzero(self.index == n)


# --------------------------------------------------------------------- grid
@dataclasses.dataclass(eq=False)
class ChannelGrid:
    """Mapped grid for one angular channel.

    The physical nodes are ``|x| <= L``; for ``d = 1`` they cover the whole
    segment ``[-L, L]`` and for radial channels the half-line ``(0, L]``.
    """

    spec: PotentialSpec
    ell: int
    L: float
    order: int
    ppw: float
    lam_max: float
    boost: float
    h: float
    layer_width: float
    M_phys: int
    M_tot: int
    xi_nodes: np.ndarray = dataclasses.field(repr=False)   # x at xi = i h, i = 0..M_tot+G
    J_nodes: np.ndarray = dataclasses.field(repr=False)
    x_half: np.ndarray = dataclasses.field(repr=False)     # x at (i + 1/2) h
    J_half: np.ndarray = dataclasses.field(repr=False)

    # ------------------------------------------------------------ basics
    @property
    def d(self):
        return self.spec.d

    @property
    def alpha(self):
        return self.spec.alpha

    @property
    def m(self):
        return self.order // 2

    @property
    def ghost(self):
        return 2 * self.m - 1

    @property
    def centrifugal(self):
        return centrifugal_coefficient(self.d, self.ell) if self.d > 1 else 0.0

    @property
    def radial(self):
        return self.d > 1

    def _signed_index(self, M):
        return np.arange(-M, M + 1) if not self.radial else np.arange(1, M + 1)

    def _x_of_index(self, idx, stretch=0):
        """(complex) coordinates and Jacobians at integer node indices."""
        a = np.abs(idx)
        x = np.sign(idx) * self.xi_nodes[a]
        J = self.J_nodes[a].astype(complex)
        X = x.astype(complex)
        if stretch:
            X, J = self._stretch(x, J, stretch)
        return X, J

    def _half_of_index(self, jdx, stretch=0):
        """Half points ``(j + 1/2) h`` for integer ``j`` (possibly negative)."""
        pos = jdx >= 0
        k = np.where(pos, jdx, -jdx - 1)
        x = np.where(pos, 1.0, -1.0) * self.x_half[k]
        J = self.J_half[k].astype(complex)
        X = x.astype(complex)
        if stretch:
            X, J = self._stretch(x, J, stretch)
        return X, J

    def _stretch(self, x, J, sign):
        W = self.layer_width
        a = np.clip((np.abs(x) - self.L) / W, 0.0, None)
        X = x + 1j * sign * np.sign(x) * SIGMA0 * W * a ** 3
        Jc = J * (1.0 + 1j * sign * 3.0 * SIGMA0 * a ** 2)
        return X, Jc

    # ------------------------------------------------------- physical part
    @cached_property
    def index(self):
        return self._signed_index(self.M_phys)

    @cached_property
    def x(self):
        return np.real(self._x_of_index(self.index)[0])

    @cached_property
    def J(self):
        return np.real(self._x_of_index(self.index)[1])

    @property
    def n(self):
        return self.x.size

    @cached_property
    def rho(self):
        return np.abs(self.x)

    @cached_property
    def weights(self):
        """Quadrature weights ``h J`` for integrals over the physical nodes."""
        return self.h * self.J

    @cached_property
    def side(self):
        return np.where(self.x >= 0, 1, -1) if not self.radial else np.ones(self.n, int)

    @cached_property
    def _geom(self):
        return radial_geometry(self.rho, self.alpha, self.d, order=3)

    @cached_property
    def r(self):
        return self._geom.r.value

    @cached_property
    def f(self):
        return self._geom.f.value

    @cached_property
    def fprime(self):
        """Radial derivative of ``f`` signed along ``x`` (``d f/dx``)."""
        fp = self._geom.fprime
        return fp * self.side if not self.radial else fp

    @cached_property
    def lap_f(self):
        """``Delta f`` of the unreduced problem (``f'' + (d-1) f'/r``)."""
        return self._geom.laplacian_f().value

    @cached_property
    def shells(self) -> ShellPartition:
        f = self.f
        idx = np.floor(np.log2(f)).astype(int)
        idx[f < 1] = -1
        f_max = float(np.max(f))
        return ShellPartition(index=idx, n_complete=int(math.floor(math.log2(f_max))),
                              f_max=f_max)

    @cached_property
    def _dstencils(self):
        return _derivative_matrix(self.index.size, self.order)

    def derivative(self, values, k=1):
        """``d^k u/dx^k`` on physical nodes (centered stencils, one-sided at the ends)."""
        out = np.asarray(values)
        for _ in range(k):
            out = (self._dstencils @ out) / (self.h * self.J)
        return out

    def pf(self, values):
        """``p^f = -i grad f . grad`` acting through the reduction ``u = r^((d-1)/2) psi``."""
        du = self.derivative(values)
        if self.radial:
            du = du - (self.d - 1) / (2 * self.rho) * np.asarray(values)
        return -1j * self.fprime * du

    def p_squared(self, values):
        """``p^2 = -Laplacian`` on the channel (reduced form)."""
        v = np.asarray(values)
        out = -self.derivative(v, 2)
        if self.radial:
            out = out + self.centrifugal / self.rho ** 2 * v
        return out

    # ----------------------------------------------------------- potential
    def potential(self, X, override=None):
        if override is not None:
            return override(X)
        V = -0.5 * continued_power(X, self.alpha)
        if not self.spec.is_free:
            V = V + self.spec.q(X)
        if self.radial and self.centrifugal != 0:
            V = V + 0.5 * self.centrifugal / X ** 2
        return V

    # -------------------------------------------------------------- fields
    def field(self, values, label=""):
        return WaveField(self, np.asarray(values, dtype=complex), label)

    def zeros(self):
        return self.field(np.zeros(self.n, complex))

    def from_function(self, fn, label=""):
        return self.field(fn(self.x), label)

    def mask(self, lo=None, hi=None, side=None):
        sel = np.ones(self.n, bool)
        if lo is not None:
            sel &= self.rho >= lo
        if hi is not None:
            sel &= self.rho <= hi
        if side is not None:
            sel &= self.side == side
        return sel

    # ---------------------------------------------------------------- misc
    def apply_continuum(self, values, z):
        """``(H - z) u`` on physical nodes with the self-adjoint interior stencil."""
        op = self._sa_operator
        return op.matvec(np.asarray(values, complex)) / self.J - z * np.asarray(values)

    @cached_property
    def _sa_operator(self):
        return assemble_hamiltonian(self, z=0.0, bc="dirichlet")

    def to_json(self, operator=None):
        doc = {
            "schema_version": 1,
            "kind": "channel_grid",
            "spec": self.spec.describe(),
            "ell": self.ell,
            "L": self.L,
            "order": self.order,
            "ppw": self.ppw,
            "lam_max": self.lam_max,
            "h": self.h,
            "layer_width": self.layer_width,
            "n_physical": int(self.n),
            "n_total": int(self.M_tot * (1 if self.radial else 2) + (0 if self.radial else 1)),
            "nodes": self.x.tolist(),
            "jacobian": self.J.tolist(),
            "shells": {"index": self.shells.index.tolist(), "n_complete": self.shells.n_complete},
        }
        if operator is not None:
            doc["operator"] = operator.describe(with_bands=True)
        return doc

    def dump_json(self, path, operator=None):
        with open(path, "w") as fh:
            json.dump(self.to_json(operator), fh)


def _derivative_matrix(n, order):
    """Sparse first-derivative matrix in the lattice index (unit spacing)."""
    m = order // 2
    width = order + 1
    offs = np.arange(-m, m + 1)
    interior = fornberg_weights(0.0, offs.astype(float), 1)[:, 1]
    inner = np.arange(m, n - m)
    rows = [np.repeat(inner, width)]
    cols = [(inner[:, None] + offs[None, :]).ravel()]
    vals = [np.tile(interior, inner.size)]
    for i in list(range(min(m, n))) + list(range(max(n - m, m), n)):
        start = 0 if i < m else n - width
        o = np.arange(start, start + width) - i
        rows.append(np.full(width, i))
        cols.append(i + o)
        vals.append(fornberg_weights(0.0, o.astype(float), 1)[:, 1])
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


def node_density(x, alpha, lam_max, ppw, boost, c=0.0):
    """Nodes per unit length at ``x >= 0``."""
    k2 = 2.0 * lam_max + (1.0 + x * x) ** (alpha / 2)
    return ppw / (2 * np.pi) * np.sqrt(k2) + boost * np.exp(-(x / BOOST_WIDTH) ** 2)


def estimate_nodes(alpha, lam_max, L, ppw, boost=0.0):
    val = integrate.quad(lambda s: node_density(s, alpha, lam_max, ppw, boost), 0.0, L,
                         limit=200)[0]
    return val


def build_grid(spec: PotentialSpec, lam_window, L: float, order: int = DEFAULT_ORDER,
               ppw: float = DEFAULT_PPW, ell: int = 0, boost: float = DEFAULT_BOOST,
               layer_width: float | None = None, min_shells: int = 3,
               max_nodes: float = 4e6) -> ChannelGrid:
    """Graded grid on ``|x| <= L`` plus an absorbing layer and ghost margin.

    Parameters
    ----------
    lam_window : float or (lam_min, lam_max)
        Energies the grid must resolve.
    L : float
        Truncation radius of the physical region (``L >= 4``).
    min_shells : int
        Required number of complete dyadic ``f``-shells.
    """
    lam_max = float(np.max(np.atleast_1d(lam_window)))
    if order not in STAGGERED:
        raise GridError(f"order must be one of {sorted(STAGGERED)}")
    if not (L >= 4):
        raise GridError(f"truncation radius L={L} must be at least 4")
    f_L = float(radial_geometry(np.array([L]), spec.alpha, order=1).f.value[0])
    if math.floor(math.log2(f_L)) < min_shells:
        raise GridError(
            f"f(L)={f_L:.3g} gives fewer than {min_shells} complete dyadic shells; increase L"
        )
    a = spec.alpha
    kL = math.sqrt(2 * lam_max + L ** a)
    if layer_width is None:
        layer_width = max(4.0, 60.0 / (SIGMA0 * kL))
    X_end = L + layer_width
    n_est = 2 * estimate_nodes(a, lam_max, X_end, ppw, boost)
    if n_est > max_nodes:
        raise GridError(f"estimated {n_est:.3g} nodes exceeds the budget {max_nodes:.3g}")
    N_L = estimate_nodes(a, lam_max, L, ppw, boost)
    M_phys = max(int(math.ceil(N_L)), 8)
    h = N_L / M_phys
    N_end = estimate_nodes(a, lam_max, X_end, ppw, boost)
    M_tot = M_phys + int(math.ceil((N_end - N_L) / h))
    G = 2 * (order // 2) - 1
    top = (M_tot + G + 1) * h

    def rhs(_, y):
        return 1.0 / node_density(y, a, lam_max, ppw, boost)

    t_eval = np.arange(0, 2 * (M_tot + G + 1) + 1) * (h / 2)
    t_eval[-1] = min(t_eval[-1], top)
    sol = integrate.solve_ivp(rhs, (0.0, top), [0.0], t_eval=t_eval, rtol=1e-12, atol=1e-13,
                              method="DOP853")
    xs = sol.y[0]
    # pin x(M_phys h) = L exactly against integration drift
    xs = xs * (L / xs[2 * M_phys])
    Js = 1.0 / node_density(xs, a, lam_max, ppw, boost) * (L / sol.y[0][2 * M_phys])
    return ChannelGrid(
        spec=spec, ell=ell, L=float(L), order=order, ppw=float(ppw), lam_max=lam_max,
        boost=float(boost), h=h, layer_width=float(layer_width), M_phys=M_phys, M_tot=M_tot,
        xi_nodes=xs[0::2], J_nodes=Js[0::2], x_half=xs[1::2], J_half=Js[1::2],
    )


# ---------------------------------------------------------------- operator
@dataclasses.dataclass(eq=False)
class BandedOperator:
    """``K = J (H - z)`` in LAPACK band storage over the unknown nodes.

    ``unknown`` lists the lattice indices of the unknowns; the first
    ``n_phys`` entries after ``offset`` are the physical nodes.
    """

    ab: np.ndarray
    kl: int
    ku: int
    jac: np.ndarray
    grid: ChannelGrid
    z: complex
    bc: str
    sign: int
    phys_slice: slice
    hermitian: bool
    _factor: tuple | None = None

    @property
    def size(self):
        return self.ab.shape[1]

    def matvec(self, v):
        v = np.ascontiguousarray(v, dtype=complex)
        if v.size == self.size:
            return kernels.band_matvec(self.ab, self.kl, self.ku, v)
        full = np.zeros(self.size, complex)
        full[self.phys_slice] = v
        return kernels.band_matvec(self.ab, self.kl, self.ku, full)[self.phys_slice]

    def factor(self):
        if self._factor is None:
            lu, piv, info = kernels.band_lu_factor(self.ab, self.kl, self.ku)
            if info != 0:
                raise np.linalg.LinAlgError(f"singular band matrix (info={info})")
            self._factor = (lu, piv)
        return self._factor

    def solve(self, rhs):
        """Solve ``K u = rhs`` on all unknowns; ``rhs`` may be 2-D."""
        lu, piv = self.factor()
        return kernels.band_lu_solve(lu, piv, self.kl, self.ku, rhs)

    def solve_physical(self, psi):
        """``(H - z) u = psi`` with ``psi`` given on physical nodes (zero elsewhere)."""
        psi = np.asarray(psi, complex)
        extra = psi.shape[1:] if psi.ndim > 1 else ()
        rhs = np.zeros((self.size,) + extra, complex)
        jac = self.jac[self.phys_slice]
        rhs[self.phys_slice] = jac.reshape((-1,) + (1,) * len(extra)) * psi
        return self.solve(rhs)

    def dense(self):
        n = self.size
        A = np.zeros((n, n), complex)
        for k in range(-self.kl, self.ku + 1):
            row = self.ku - k
            j = np.arange(max(0, k), min(n, n + k))
            A[j - k, j] = self.ab[row, j]
        return A

    def describe(self, with_bands=False):
        doc = {"size": int(self.size), "kl": self.kl, "ku": self.ku, "z": [self.z.real, self.z.imag],
               "bc": self.bc, "sign": self.sign, "hermitian": self.hermitian}
        if with_bands:
            doc["bands_re"] = self.ab.real.tolist()
            doc["bands_im"] = self.ab.imag.tolist()
        return doc


def _stencil_offsets(order):
    c = STAGGERED[order]
    m = len(c)
    offs, coef = [], []
    for k in range(m):
        offs += [k + 1, -k]
        coef += [c[k], -c[k]]
    return np.array(offs), np.array(coef)


def assemble_hamiltonian(grid: ChannelGrid, z=0.0, sign: int = 1, bc: str = "layer",
                         potential=None) -> BandedOperator:
    """Assemble ``K = D^T W D / 2 + diag(J (V - z))`` with the chosen closure.

    ``sign`` selects the outgoing (+1) or incoming (-1) continuation for the
    absorbing layer and the radiation closures. ``potential`` optionally
    replaces ``V`` by a callable of the (real) coordinate.
    """
    if bc not in CLOSURES:
        raise GridError(f"unknown closure {bc!r}; expected one of {CLOSURES}")
    z = complex(z)
    m = grid.m
    G = grid.ghost
    stretch = sign if bc == "layer" else 0
    M = grid.M_tot if bc == "layer" else grid.M_phys
    radial = grid.radial
    if radial:
        unknown = np.arange(1, M + 1)
        ext = np.arange(-(G - 1), M + G + 1)
    else:
        unknown = np.arange(-M, M + 1)
        ext = np.arange(-(M + G), M + G + 1)
    e0 = ext[0]
    n_ext = ext.size
    offs, coef = _stencil_offsets(grid.order)
    # halves j (between nodes j and j+1) touching unknown rows
    jlo = unknown[0] - m
    jhi = unknown[-1] + m - 1
    halves = np.arange(jlo, jhi + 1)
    _, Jh = grid._half_of_index(halves, stretch)
    rows = np.repeat(np.arange(halves.size), offs.size)
    cols = (halves[:, None] + offs[None, :]).ravel() - e0
    vals = np.tile(coef, halves.size) / grid.h
    D = sp.csr_matrix((vals, (rows, cols)), shape=(halves.size, n_ext))
    Wd = sp.diags(0.5 / Jh)
    Kext = (D.T @ Wd @ D).tocsr()
    Xu, Ju = grid._x_of_index(unknown, stretch)
    if potential is not None:
        V = potential(np.real(Xu))
    else:
        V = grid.potential(Xu)
    # prolongation from unknowns to the extended lattice
    P = _prolongation(grid, ext, unknown, bc, z, sign, stretch)
    K = Kext[unknown - e0] @ P
    K = K + sp.diags(Ju * (V - z))
    K = K.tocsr()
    bw = 2 * m - 1
    n = unknown.size
    ab = np.zeros((2 * bw + 1, n), complex)
    for k in range(-bw, bw + 1):
        dia = K.diagonal(k)
        j = np.arange(max(0, k), min(n, n + k))
        ab[bw - k, j] = dia
    phys = (np.abs(unknown) <= grid.M_phys)
    ps = np.flatnonzero(phys)
    hermitian = bc == "dirichlet" and z.imag == 0
    return BandedOperator(ab=ab, kl=bw, ku=bw, jac=Ju, grid=grid, z=z, bc=bc, sign=sign,
                          phys_slice=slice(ps[0], ps[-1] + 1), hermitian=hermitian)


def _prolongation(grid, ext, unknown, bc, z, sign, stretch):
    n_ext, n = ext.size, unknown.size
    e0 = ext[0]
    rows = list(unknown - e0)
    cols = list(range(n))
    vals = [1.0] * n
    top = unknown[-1]
    if grid.radial:
        # odd continuation through the origin: u_{-i} = -u_i, u_0 = 0
        for i in ext[ext < 0]:
            rows.append(i - e0)
            cols.append(-i - 1)
            vals.append(-1.0)
    ghosts_hi = ext[ext > top]
    if bc in ("dtn", "impedance"):
        ratios = _ghost_ratios(grid, ghosts_hi, top, bc, z, sign)
        for g, rat in zip(ghosts_hi, ratios):
            rows.append(g - e0)
            cols.append(n - 1)
            vals.append(rat)
            if not grid.radial:
                rows.append(-g - e0)
                cols.append(0)
                vals.append(_ghost_ratios(grid, [g], top, bc, z, sign, direction=-1.0)[0])
    return sp.csr_matrix((np.array(vals, complex), (rows, cols)), shape=(n_ext, n))


def _ghost_ratios(grid, ghosts, top, bc, z, sign, direction=1.0):
    r_top = grid.xi_nodes[top]
    r_g = grid.xi_nodes[np.asarray(ghosts)]
    lam = z
    if bc == "dtn":
        jost = JostPair(grid.spec, lam, grid.ell, direction)
        which = 0 if sign > 0 else 1
        w = jost.values(np.concatenate([[r_top], r_g]))[which]
        return w[1:] / w[0]
    # impedance: integrate the log-derivative implied by (A -+ a) u = 0
    from .geometry import PhaseContext
    ctx = PhaseContext(spec=grid.spec, m=0)
    out = []
    gx, gw = np.polynomial.legendre.leggauss(8)
    prev, acc = r_top, 0.0
    for rg in r_g:
        mid, half = 0.5 * (prev + rg), 0.5 * (rg - prev)
        s = mid + half * gx
        y = _impedance_logderiv(s, z, sign, ctx, grid, direction)
        acc = acc + half * np.sum(gw * y)
        out.append(np.exp(acc))
        prev = rg
    return np.array(out)


def _impedance_logderiv(s, z, sign, ctx, grid, direction):
    from .geometry import eval_phase_a
    a = eval_phase_a(z, s, sign, ctx, direction, with_cutoff=False)
    g = radial_geometry(s, grid.alpha, grid.d, order=3)
    fp = g.fprime
    lap = g.laplacian_f().value
    return 1j * sign * a / fp + (grid.d - 1) / (2 * s) - lap / (2 * fp)


# ------------------------------------------------------------------ fields
@dataclasses.dataclass(frozen=True)
class ShellNorms:
    shell_l2: np.ndarray
    B: float
    Bstar: float
    profile: np.ndarray

    def slope(self, start=1):
        """Least-squares slope of ``log2`` of the B* profile over shells ``>= start``."""
        n = np.arange(self.profile.size)
        keep = (n >= start) & (self.profile > 0)
        if keep.sum() < 2:
            return float("nan")
        return float(np.polyfit(n[keep], np.log2(self.profile[keep]), 1)[0])


@dataclasses.dataclass(frozen=True, eq=False)
class WaveField:
    """Complex grid function on the physical nodes of a :class:`ChannelGrid`.

    For radial channels ``values`` is the reduced function ``r^((d-1)/2) psi``,
    so that the unweighted ``L^2`` sums equal the norms in ``R^d``.
    """

    grid: ChannelGrid
    values: np.ndarray
    label: str = ""

    def with_values(self, values, label=None):
        return WaveField(self.grid, np.asarray(values, complex),
                         self.label if label is None else label)

    def __add__(self, other):
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        return self.with_values(self.values - other.values)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def inner(self, other):
        """``<u, v> = int u conj(v)`` (linear in the first slot)."""
        return complex(np.sum(self.grid.weights * self.values * np.conj(other.values)))

    def norm(self, mask=None):
        w = self.grid.weights
        v = self.values
        if mask is not None:
            w, v = w[mask], v[mask]
        return float(np.sqrt(np.sum(w * np.abs(v) ** 2)))

    def shell_l2(self, complete_only=True):
        sh = self.grid.shells
        nshell = sh.n_complete if complete_only else sh.n_shells
        sums = kernels.shell_sums(np.ascontiguousarray(self.grid.weights),
                                  np.ascontiguousarray(self.values),
                                  np.ascontiguousarray(sh.index, dtype=np.int64), nshell)
        return np.sqrt(sums)

    def shell_norms(self, complete_only=True) -> ShellNorms:
        """``B = sum 2^(n/2) |F_n u|``, ``B* = max 2^(-n/2) |F_n u|`` and the B* profile."""
        l2 = self.shell_l2(complete_only)
        n = np.arange(l2.size)
        prof = 2.0 ** (-n / 2) * l2
        return ShellNorms(shell_l2=l2, B=float(np.sum(2.0 ** (n / 2) * l2)),
                          Bstar=float(prof.max()) if prof.size else 0.0, profile=prof)


def shell_norms(u: WaveField, complete_only=True) -> ShellNorms:
    return u.shell_norms(complete_only)


__all__ = [
    "STAGGERED", "CLOSURES", "DEFAULT_ORDER", "DEFAULT_PPW", "GridError", "ShellPartition",
    "ChannelGrid", "BandedOperator", "WaveField", "ShellNorms", "build_grid",
    "assemble_hamiltonian", "shell_norms", "node_density", "estimate_nodes",
    "fornberg_weights", "continued_power",
]
