import numpy as np
import pytest
from scipy import special

from repscat.oracle import airy, airy_smatrix, ode_smatrix
from repscat.potential import PotentialSpec, free, power_law


@pytest.mark.parametrize("x", [-60.0, -12.0, -9.5, -3.0, 0.0, 2.5, 9.5, 20.0])
def test_airy_against_scipy(x):
    mine = airy(x)
    ref = special.airy(x)
    for m, r in zip(mine, ref):
        assert m == pytest.approx(r, rel=1e-11, abs=1e-13 * max(1.0, abs(r)))


def test_airy_wronskian():
    x = np.linspace(-30, 5, 71)
    ai, aip, bi, bip = airy(x)
    assert np.allclose(ai * bip - aip * bi, 1 / np.pi, rtol=1e-11)


@pytest.mark.parametrize("lam", [0.25, 0.5, 1.0, 2.0, 4.0])
def test_airy_smatrix_unitary_and_symmetric(lam):
    res = airy_smatrix(lam)
    assert res.unitarity_defect < 1e-12
    P = np.array([[0, 1], [1, 0]])
    assert np.allclose(P @ res.S, res.S @ P)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_shooting_oracle_matches_airy(lam):
    assert np.max(np.abs(ode_smatrix(lam, free(1.0)).S - airy_smatrix(lam).S)) < 1e-8


@pytest.mark.parametrize("method", ["two-radius", "wronskian"])
def test_shooting_methods_agree(method):
    spec = power_law(1.2, 0.4, 1.0)
    a = ode_smatrix(1.0, spec, method=method).S
    b = ode_smatrix(1.0, spec, radii=(60.0, 90.0)).S
    assert np.max(np.abs(a - b)) < 1e-7
    assert np.linalg.norm(a.conj().T @ a - np.eye(2)) < 1e-8


def test_radial_channel_phase_unimodular():
    spec = PotentialSpec(alpha=1.2, d=3, family="gaussian", params={"coupling": 0.8, "width": 1.0})
    for ell in range(3):
        s = np.ravel(ode_smatrix(1.0, spec, ell=ell).S)[0]
        assert abs(abs(s) - 1) < 1e-8
