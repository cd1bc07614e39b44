import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repscat.grid import (GridError, assemble_hamiltonian, build_grid, estimate_nodes,
                          fornberg_weights)
from repscat.potential import free


@given(st.integers(min_value=2, max_value=6), st.floats(min_value=-0.5, max_value=0.5))
@settings(max_examples=40, deadline=None)
def test_fornberg_exact_on_polynomials(npts, z0):
    xs = np.arange(npts, dtype=float) - (npts - 1) / 2
    c = fornberg_weights(z0, xs, 1)
    for p in range(npts):
        assert np.dot(c[:, 0], xs ** p) == pytest.approx(z0 ** p, abs=1e-10)
        exact = p * z0 ** (p - 1) if p else 0.0
        assert np.dot(c[:, 1], xs ** p) == pytest.approx(exact, abs=1e-9)


@pytest.mark.parametrize("order", [2, 4, 6])
def test_derivative_convergence_order(order):
    errs = []
    for ppw in (16.0, 32.0):
        g = build_grid(free(1.0), 1.0, 40.0, order=order, ppw=ppw, boost=20 * ppw)
        u = np.exp(-((g.x - 3) / 2) ** 2)
        du = -(g.x - 3) / 2 * np.exp(-((g.x - 3) / 2) ** 2)
        # the node-density boost near the origin is pre-asymptotic at these resolutions
        away = np.abs(g.x) > 2.0
        errs.append(np.max(np.abs(g.derivative(u) - du)[away]))
    assert np.log2(errs[0] / errs[1]) > order - 0.5


def test_truncation_radius_validated():
    with pytest.raises(GridError):
        build_grid(free(1.0), 1.0, 3.0)
    with pytest.raises(GridError):
        build_grid(free(1.0), 1.0, 20.0, order=5)


def test_shells_and_weights(free_grid):
    sh = free_grid.shells
    assert sh.n_complete >= 3
    # physical weights integrate constants up to the end corrections
    assert np.sum(free_grid.weights) == pytest.approx(2 * free_grid.L, rel=1e-3)
    for n in range(sh.n_complete):
        f = free_grid.f[sh.nodes(n)]
        assert np.all((f >= 2.0 ** n) & (f < 2.0 ** (n + 1)))


def test_node_estimate(free_grid):
    est = 2 * estimate_nodes(1.0, 2.0, free_grid.L, free_grid.ppw)
    assert 0.5 < est / free_grid.n < 2.0


def test_dirichlet_operator_is_symmetric():
    g = build_grid(free(1.0), 1.0, 10.0, ppw=12.0, boost=50.0, min_shells=1)
    A = assemble_hamiltonian(g, z=0.3, bc="dirichlet").dense()
    assert np.allclose(A, A.T)


def test_apply_continuum_matches_exact_second_derivative():
    g = build_grid(free(1.0), 1.0, 40.0, ppw=48.0)
    x = g.x
    u = np.exp(-(x - 2) ** 2)
    d2 = (4 * (x - 2) ** 2 - 2) * u
    exact = -0.5 * d2 - 0.5 * np.abs(x) * u - 0.7 * u
    # away from the kink of |x| at the origin
    sel = np.abs(x) > 2.0
    got = g.apply_continuum(u, 0.7)
    assert np.max(np.abs(got - exact)[sel]) < 1e-5
