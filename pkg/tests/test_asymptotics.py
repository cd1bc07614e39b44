import numpy as np
import pytest

from repscat.asymptotics import JostPair
from repscat.oracle import _airy_jost
from repscat.potential import free, rho_one_power


@pytest.mark.parametrize("s, tol", [(20.0, 1e-8), (80.0, 1e-11)])
def test_jost_pair_matches_airy(s, tol):
    lam = 1.0
    jp = JostPair(free(1.0), lam)
    wp, wm, dwp, dwm = jp.values(np.array([s]))
    ap, am, dap, dam = _airy_jost(np.array([s]), lam)
    assert abs(wp[0] - ap[0]) / abs(ap[0]) < tol
    assert abs(wm[0] - am[0]) / abs(am[0]) < tol
    assert abs(dwp[0] - dap[0]) / abs(dap[0]) < 10 * tol


@pytest.mark.parametrize("spec", [free(0.8), rho_one_power(1.0), free(1.5)], ids=str)
def test_more_iterations_shrink_residual(spec):
    s = np.geomspace(4, 200, 30)
    res = [np.max(np.abs(JostPair(spec, 1.0, iterations=k).residual_factor(s))) for k in (1, 2, 3)]
    assert res[0] > res[1] > res[2]


def test_residual_decays_outward():
    jp = JostPair(free(1.0), 1.0)
    r = np.abs(jp.residual_factor(np.array([5.0, 20.0, 80.0])))
    assert r[0] > r[1] > r[2]


def test_conjugate_pair():
    jp = JostPair(free(1.0), 0.7)
    wp, wm, _, _ = jp.values(np.array([10.0, 30.0]))
    assert np.allclose(wm, np.conj(wp))
