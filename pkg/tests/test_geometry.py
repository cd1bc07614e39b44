import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from repscat.audit import check_factorization
from repscat.geometry import (BranchError, PhaseContext, eikonal_residual, eval_cutoff,
                              eval_phase_a, eval_q2, f_of_radius, free_exact_phase_derivative,
                              predicted_eikonal_order, radial_geometry, radius_of_f,
                              weight_inequality_sweep)
from repscat.potential import free, rho_one_power


@given(st.floats(min_value=2.0, max_value=1e5), st.sampled_from([0.8, 1.0, 1.5]))
@settings(max_examples=50, deadline=None)
def test_escape_function_inverse(rho, alpha):
    assert radius_of_f(f_of_radius(np.array([rho]), alpha), alpha)[0] == pytest.approx(rho, rel=1e-12)


def test_cutoff_profile():
    s = np.array([0.0, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0])
    chi = eval_cutoff(s)
    assert chi[0] == 1.0 and chi[1] == 1.0
    assert chi[5] == 0.0 and chi[6] == 0.0
    assert chi[3] == pytest.approx(0.5)
    assert np.all(np.diff(chi) <= 0)


@pytest.mark.parametrize("alpha", [0.8, 1.0, 1.5])
def test_smoothed_radius_is_exact_outside(alpha):
    rho = np.array([2.0, 5.0, 40.0])
    g = radial_geometry(rho, alpha)
    assert np.allclose(g.r.value, rho)
    assert np.allclose(g.f.deriv(1), rho ** (-alpha / 2))


@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0])
def test_exact_free_phase(lam):
    rho = np.geomspace(max(1 - 2 * lam, 0) + 1e-3, 1e4, 300)
    fit = eikonal_residual(lam, free(1.0), phase=free_exact_phase_derivative(lam), rho=rho)
    assert fit.exact
    assert np.max(np.abs(fit.residual) / (0.5 * rho + lam + 0.5)) < 1e-12


@pytest.mark.parametrize("alpha", [0.8, 1.0, 1.5])
@pytest.mark.parametrize("family", ["free", "rho1"])
def test_eikonal_decay_exponent(alpha, family):
    spec = free(alpha) if family == "free" else rho_one_power(alpha)
    fit = eikonal_residual(1.0, spec)
    assert fit.exponent >= predicted_eikonal_order(spec) - 0.1


def test_wrong_exponent_phase_fails():
    lam, alpha = 1.0, 1.0
    bad = lambda rho: rho ** (alpha / 2 + 0.1) + lam * rho ** (-alpha / 2)  # noqa: E731
    fit = eikonal_residual(lam, free(alpha), phase=bad)
    assert fit.exponent < predicted_eikonal_order(free(alpha)) - 0.1


def test_q2_closed_form_symbolic():
    """The simplified remainder equals its defining expression for both signs."""
    r, al = sp.symbols("r alpha", positive=True)
    z = sp.symbols("z")
    Q = sp.Function("Q")(r)
    w = 2 * (z - Q) + r ** al
    ratio = (z - Q) / w
    for s in (1, -1):
        a = r ** (-al / 2) * sp.sqrt(w) + s * sp.I * al / 2 * r ** (-al / 2 - 1) * (1 - ratio)
        pf = -sp.I * r ** (-al / 2) * sp.diff(r ** al * a, r)
        definition = s * pf / 2 + r ** al * a ** 2 / 2 - r ** al / 2 + Q + al / 4 / r ** 2 - z
        closed = (s * sp.I / 2 * sp.diff(Q, r) / sp.sqrt(w) - al / 4 * sp.diff(ratio, r) / r
                  + al / 4 * ratio / r ** 2 - al ** 2 / 8 * ratio ** 2 / r ** 2
                  + al ** 2 / 8 * ratio / r ** 2)
        assert sp.simplify(definition - closed) == 0


@pytest.mark.parametrize("spec", [free(1.0), rho_one_power(0.8), free(1.5)], ids=str)
@pytest.mark.parametrize("sign", [1, -1])
def test_q2_numeric_forms_agree(spec, sign):
    ctx = PhaseContext.choose(spec, 1.0)
    rho = np.geomspace(radius_of_f(2.0 ** (ctx.m + 1), spec.alpha), 500.0, 50)
    z = 1.0 + 0.05j * sign
    closed = eval_q2(z, rho, sign, ctx, form="closed")
    direct = eval_q2(z, rho, sign, ctx, form="definition")
    printed = eval_q2(z, rho, sign, ctx, form="printed")
    # the defining expression cancels terms of size r^alpha
    scale = 1e-13 * rho ** spec.alpha
    assert np.all(np.abs(closed - direct) <= 1e-9 * np.abs(direct) + scale)
    assert np.any(np.abs(printed - direct) > 1e-6 * np.abs(direct) + scale)


def test_phase_sign_convention():
    ctx = PhaseContext.choose(free(1.0), 1.0)
    with pytest.raises(ValueError):
        eval_phase_a(1.0 - 0.1j, np.array([10.0]), 1, ctx)


def test_branch_error_inside_cutoff():
    spec = free(1.0)
    ctx = PhaseContext(spec=spec, m=0)
    with pytest.raises(BranchError):
        eval_phase_a(-3.0, np.array([0.5, 1.0]), 1, ctx, with_cutoff=False)


@pytest.mark.parametrize("delta", [0.1, 0.5, 1.0])
def test_weight_inequalities(delta):
    sweep = weight_inequality_sweep(delta)
    assert sweep.passed
    assert sweep.c_lower > 0 and np.isfinite(sweep.c_upper)


@pytest.mark.parametrize("spec", [free(1.0), rho_one_power(0.8)], ids=["free1", "rho1_08"])
def test_factorization_converges_at_stencil_order(spec):
    row = check_factorization(spec, 1.0)
    assert row.passed, row.detail
