import numpy as np
import pytest

from repscat.grid import build_grid
from repscat.potential import free
from repscat.resolvent import (Resolvent, SpectralPoint, conjugation_defect, lap_diagnostic,
                               limiting_resolvent, radiation_diagnostic, spectral_density)


@pytest.fixture(scope="module")
def setup():
    g = build_grid(free(1.0), 2.0, 60.0, ppw=64.0)
    psi = g.from_function(lambda x: np.exp(-(x - 2.0) ** 2) * (1 + 0.5j * x)
                          + 0.7 * np.exp(-(x + 1.5) ** 2 / 2))
    return g, psi, Resolvent(g)


@pytest.mark.parametrize("eps", [0.5, 0.05])
@pytest.mark.parametrize("sign", [1, -1])
def test_solution_satisfies_equation(setup, eps, sign):
    g, psi, rv = setup
    pt = SpectralPoint(1.0, eps, sign)
    u = rv.apply(psi.values, pt)
    res = g.apply_continuum(u, pt.z) - psi.values
    inner = np.abs(g.x) < 0.5 * g.L
    assert np.max(np.abs(res[inner])) < 1e-8 * np.max(np.abs(psi.values))


@pytest.mark.parametrize("sign", [1, -1])
def test_limiting_routes_agree(setup, sign):
    g, psi, rv = setup
    out = limiting_resolvent(g, 1.0, sign, psi, resolvent=rv)
    rec = out.extrapolation
    assert rec["route_a_vs_b"] < 1e-5
    assert rec["impedance_vs_layer"] < 1e-5
    assert rec["holder_exponent"] > 0


def test_conjugation_symmetry(setup):
    g, psi, rv = setup
    assert conjugation_defect(g, 1.0, psi, rv) < 1e-12


def test_spectral_density_positive(setup):
    g, psi, rv = setup
    dens = spectral_density(g, 1.0, psi, rv)
    assert dens.real > 0
    assert abs(dens.imag) < 1e-8 * dens.real


def test_lap_quotients_stabilize(setup):
    g, psi, rv = setup
    rep = lap_diagnostic(g, 1.0, psi, resolvent=rv)
    assert rep.stable(1e-2)
    assert np.all(np.isfinite(rep.sup))


@pytest.mark.parametrize("beta_frac", [0.0, 0.5])
def test_radiation_condition_discriminates(setup, beta_frac):
    g, psi, rv = setup
    beta = beta_frac * g.spec.beta_c
    rep = radiation_diagnostic(g, 1.0, 1, psi, beta, resolvent=rv)
    assert rep.bounded
    assert rep.separation >= 10


def test_radiation_beta_bound(setup):
    g, psi, rv = setup
    with pytest.raises(ValueError):
        radiation_diagnostic(g, 1.0, 1, psi, g.spec.beta_c, resolvent=rv)
