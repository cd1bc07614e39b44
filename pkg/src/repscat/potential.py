"""Potentials for H = p^2/2 - |x|^alpha/2 + q.

The perturbation ``q`` is described by a named analytic family so that it can
be differentiated exactly (through :mod:`repscat._jet`) and continued into the
complex-stretched absorbing layer. Construction samples the short-range decay
bounds

    |q| <= C0 f^{-1-rho},   |dq| <= C1 f^{-2-rho}

and rejects descriptions that violate them.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Mapping

import numpy as np

from . import _jet
from ._jet import Jet

ALPHA_RANGE = (0.7, 1.9)

#: Parameters accepted by each family, with defaults (``None`` = required).
FAMILIES = {
    "none": {},
    "power": {"coupling": None, "s": None},
    "shifted_power": {"coupling": None, "s": None, "x0": 0.0},
    "gaussian": {"coupling": None, "width": 1.0, "x0": 0.0},
    "square_well": {"coupling": None, "width": 1.0},
    "tabulated": {},
}


class SpecError(ValueError):
    """Raised for a potential description that cannot be used."""


@dataclasses.dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Repulsive Hamiltonian data.

    Parameters
    ----------
    alpha : float
        Exponent of the repulsive term, restricted to ``[0.7, 1.9]``.
    d : int
        Space dimension. ``d = 1`` works on the full line; odd ``d >= 3``
        is reduced to radial partial waves (radial ``q`` only).
    family : str
        Name of the perturbation family, one of :data:`FAMILIES`.
    params : mapping
        Family parameters (``coupling``, ``s``, ``width``, ``x0``).
    rho : float, optional
        Declared decay rate. Defaults to the exact rate of the family
        (``s/(1-alpha/2) - 1`` for power laws, 10 for Gaussians).
    table : tuple of arrays, optional
        ``(radius, q)`` samples for the ``tabulated`` family.
    validate : bool
        Run the decay sampling at construction (default ``True``).
    """

    alpha: float
    d: int = 1
    family: str = "none"
    params: Mapping[str, float] = dataclasses.field(default_factory=dict)
    rho: float | None = None
    table: tuple | None = None
    validate: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown potential family {self.family!r}")
        merged = {}
        for key, default in FAMILIES[self.family].items():
            if key in self.params:
                merged[key] = float(self.params[key])
            elif default is None:
                raise SpecError(f"family {self.family!r} requires parameter {key!r}")
            else:
                merged[key] = default
        extra = set(self.params) - set(merged)
        if extra:
            raise SpecError(f"unknown parameters for {self.family!r}: {sorted(extra)}")
        object.__setattr__(self, "params", merged)
        if self.family == "tabulated":
            self._setup_table()
        if self.rho is None:
            object.__setattr__(self, "rho", self._natural_rho())
        if self.validate:
            self.check()

    # ------------------------------------------------------------------ basic
    @property
    def kappa(self):
        """Exponent ``(d + alpha/2 - 1)/(1 + alpha/2)`` of the outgoing prefactor."""
        return (self.d + self.alpha / 2 - 1) / (1 + self.alpha / 2)

    @property
    def tau(self):
        """Exponent ``(d - alpha/2 - 3)/(1 + alpha/2)`` of the trace prefactor."""
        return (self.d - self.alpha / 2 - 3) / (1 + self.alpha / 2)

    @property
    def beta_c(self):
        a = self.alpha
        return min(self.rho + 1 / (1 - a / 2), 1 + a / (1 - a / 2))

    @property
    def is_free(self):
        return self.family == "none" or self.params.get("coupling", 1.0) == 0.0

    @property
    def is_even(self):
        return self.d > 1 or self.params.get("x0", 0.0) == 0.0

    def replace(self, **changes):
        fields = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        fields.update(changes)
        return PotentialSpec(**fields)

    def _natural_rho(self):
        a = self.alpha
        if self.family in ("power", "shifted_power"):
            return self.params["s"] / (1 - a / 2) - 1
        if self.family == "tabulated":
            raise SpecError("tabulated potentials need a declared rho")
        return 10.0

    # --------------------------------------------------------------- table
    def _setup_table(self):
        from scipy.interpolate import CubicSpline

        if self.table is None:
            raise SpecError("tabulated family needs a (radius, q) table")
        rr, qq = (np.asarray(t, dtype=float) for t in self.table)
        if rr[0] != 0.0 or np.any(np.diff(rr) <= 0):
            raise SpecError("table radii must start at 0 and increase")
        spline = CubicSpline(rr, qq, bc_type=((1, 0.0), (1, 0.0)))
        object.__setattr__(self, "_spline", spline)
        object.__setattr__(self, "_rmax", rr[-1])

    def _tabulated(self, t):
        if isinstance(t, Jet):
            rho = np.abs(np.real(t.value))
            sgn = np.sign(np.real(t.value))
            sgn = np.where(sgn == 0, 1.0, sgn)
            inside = rho <= self._rmax
            rc = np.minimum(rho, self._rmax)
            c = np.zeros_like(t.c, dtype=float)
            for k in range(min(t.order, 3) + 1):
                c[k] = np.where(inside, self._spline(rc, k) * sgn**k / math.factorial(k), 0.0)
            base = Jet(c)
            # compose with the argument shift t - t0
            return _compose(base, t)
        rho = np.abs(np.real(t))
        return np.where(rho <= self._rmax, self._spline(np.minimum(rho, self._rmax)), 0.0)

    # -------------------------------------------------------------- q(x)
    def q(self, x):
        """Evaluate ``q`` at a signed coordinate (d=1) or radius (d>1).

        ``x`` may be complex (absorbing layer) or a :class:`Jet`.
        """
        p = self.params
        fam = self.family
        if fam == "none":
            return 0.0 * x
        if fam == "tabulated":
            return self._tabulated(x)
        if fam == "power":
            return p["coupling"] * (1 + x * x) ** (-p["s"] / 2)
        if fam == "shifted_power":
            y = x - p["x0"]
            return p["coupling"] * (1 + y * y) ** (-p["s"] / 2)
        if fam == "gaussian":
            y = (x - p["x0"]) / p["width"]
            return p["coupling"] * _jet.exp(-(y * y))
        if fam == "square_well":
            xv = np.real(_jet.value(x))
            val = np.where(np.abs(xv) < p["width"], p["coupling"], 0.0)
            if isinstance(x, Jet):
                return Jet.constant(val, x.order)
            return val
        raise SpecError(fam)

    def q_ray(self, rho, direction=1.0):
        """``q`` along the ray ``x = direction * rho`` as a function of ``rho``."""
        if self.d > 1 or direction == 1:
            return self.q(rho)
        return self.q(rho * direction)

    def dq_ray(self, rho, direction=1.0):
        j = self.q_ray(Jet.variable(np.asarray(rho, dtype=float), 1), direction)
        return j.deriv(1) if isinstance(j, Jet) else 0.0 * rho

    # --------------------------------------------------------- validation
    def check(self):
        """Validate ranges and sample the short-range decay bounds."""
        a = self.alpha
        if not (ALPHA_RANGE[0] <= a <= ALPHA_RANGE[1]):
            raise SpecError(f"alpha={a} outside supported range {list(ALPHA_RANGE)}")
        if int(self.d) != self.d or self.d < 1:
            raise SpecError(f"dimension d={self.d} must be a positive integer")
        if self.d > 1 and self.d % 2 == 0:
            raise SpecError(
                "even dimensions are not supported: the reduced radial channel "
                "has a half-integer centrifugal index"
            )
        if self.d > 1 and not self.is_even:
            raise SpecError("shifted potentials break radial symmetry in d > 1")
        if not (self.rho > 0):
            raise SpecError(f"declared decay rate rho={self.rho} must be positive")
        if self.family == "square_well":
            raise SpecError(
                "square_well is discontinuous; q must be C^1 with decaying derivative"
            )
        if self.is_free:
            return
        rr = np.concatenate([np.linspace(0.0, 10.0, 201)[:-1], np.logspace(1, 6, 501)])
        fv = _escape_plain(rr, a)
        ok = True
        directions = (1.0,) if self.d > 1 else (1.0, -1.0)
        for s in directions:
            jet = self.q_ray(Jet.variable(rr, 1), s)
            q0 = np.abs(jet.value)
            q1 = np.abs(jet.deriv(1))
            for arr, power in ((q0, 1 + self.rho), (q1, 2 + self.rho)):
                scaled = arr * fv**power
                if not np.all(np.isfinite(scaled)):
                    ok = False
                    continue
                # bounded on the sample: the last decade may not exceed the
                # earlier maximum by more than a modest factor
                head = scaled[rr < 1e5].max()
                tail = scaled[rr >= 1e5].max()
                if tail > 2.0 * head + 1e-300:
                    ok = False
        if not ok:
            raise SpecError(
                f"q does not satisfy the short-range bounds with rho={self.rho:g}"
            )

    def describe(self):
        return {
            "alpha": self.alpha,
            "d": self.d,
            "family": self.family,
            "params": dict(self.params),
            "rho": self.rho,
        }


def _escape_plain(rho, alpha):
    """Escape function on |x| >= 2 extended by max(., 1) (sampling only)."""
    r = np.maximum(rho, 1.0)
    e = 1 - alpha / 2
    return (r**e - 1) / e + 1


def _compose(base, t):
    """Compose a jet ``base`` of derivatives of g at t0 with the jet ``t``."""
    dt = t - t.value
    out = Jet.constant(base.c[0], t.order, np.shape(base.c[0]))
    power = Jet.constant(np.ones_like(base.c[0]), t.order, np.shape(base.c[0]))
    for k in range(1, t.order + 1):
        power = power * dt
        out = out + power * base.c[k]
    return out


def from_mapping(block: Mapping) -> PotentialSpec:
    """Build a spec from a flat config block (``alpha``, ``d``, ``family``, ...)."""
    if "alpha" not in block:
        raise SpecError("missing required field 'alpha'")
    params = {}
    for key in ("coupling", "s", "width", "x0"):
        if key in block:
            params[key] = float(block[key])
    rho = block.get("rho")
    return PotentialSpec(
        alpha=float(block["alpha"]),
        d=int(block.get("d", 1)),
        family=str(block.get("family", "none")),
        params=params,
        rho=None if rho is None else float(rho),
    )


def power_law(alpha, coupling, s, d=1, **kw):
    return PotentialSpec(alpha=alpha, d=d, family="power",
                         params={"coupling": coupling, "s": s}, **kw)


def free(alpha, d=1):
    return PotentialSpec(alpha=alpha, d=d)


def rho_one_power(alpha, coupling=0.3, d=1):
    """Power-law perturbation whose exact decay rate is ``rho = 1``."""
    return power_law(alpha, coupling, 2 * (1 - alpha / 2), d=d)


__all__ = [
    "ALPHA_RANGE", "FAMILIES", "PotentialSpec", "SpecError", "from_mapping",
    "power_law", "free", "rho_one_power",
]
