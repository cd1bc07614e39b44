"""Acceptance criteria 1-10, each reported as one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
terminal summary under "acceptance criteria".
"""
import numpy as np
import pytest

from repscat import audit as au
from repscat.grid import build_grid
from repscat.oracle import airy_smatrix, ode_smatrix
from repscat.potential import PotentialSpec, free, rho_one_power
from repscat.resolvent import Resolvent, lap_diagnostic, limiting_resolvent, radiation_diagnostic
from repscat.scattering import scattering_grid, scattering_matrix, smatrix_sweep

ALPHAS = (0.8, 1.0, 1.5)
LAMBDAS = (0.5, 1.0, 2.0)


def report(log, number, passed, text):
    line = f"CRITERION {number} {'PASS' if passed else 'FAIL'}: {text}"
    print(line)
    log.append(line)
    assert passed, line


@pytest.fixture(scope="module")
def grids():
    return {a: scattering_grid(free(a), max(LAMBDAS)) for a in ALPHAS}


def test_criterion_1_exact_free_eikonal(acceptance_log):
    row = au.check_free_eikonal_exact(lams=(0.0, 0.5, 1.0))
    report(acceptance_log, 1, row.passed,
           f"max relative residual {row.measured:.2e} <= 1e-12 for lambda in {{0, 0.5, 1}}")


def test_criterion_2_eikonal_decay(acceptance_log):
    rows = [au.check_eikonal_order(mk(a)) for a in ALPHAS for mk in (free, rho_one_power)]
    text = "; ".join(f"{r.name} fitted {r.detail['fitted']:.3f} vs predicted "
                     f"{r.detail['predicted']:.3f}" for r in rows)
    report(acceptance_log, 2, all(r.passed for r in rows), text)


def test_criterion_3_factorization_order(acceptance_log):
    rows = [au.check_factorization(spec) for spec in (rho_one_power(0.8), free(1.0), free(1.5))]
    text = "; ".join(f"{r.name} orders {', '.join(f'{o:.2f}' for o in r.detail['orders'])}"
                     for r in rows)
    report(acceptance_log, 3, all(r.passed for r in rows), text + " (stencil order 6)")


def test_criterion_4_weights(acceptance_log):
    row = au.check_weights((0.1, 0.5, 1.0))
    consts = ", ".join(f"delta={k}: c={v['c_lower']:.3g}, C={v['c_upper']:.3g}"
                       for k, v in row.detail.items())
    report(acceptance_log, 4, row.passed, f"violations {int(row.measured)}; {consts}")


def test_criterion_5_parseval(acceptance_log, grids):
    worst = 0.0
    for a in ALPHAS:
        g = grids[a]
        rv = Resolvent(g)
        corpus = au.psi_corpus(g)
        assert len(corpus) == 10
        for lam in LAMBDAS:
            worst = max(worst, au.check_parseval(g, lam, corpus, rv)[0].measured)
    report(acceptance_log, 5, worst <= 1e-4,
           f"max relative error {worst:.2e} <= 1e-4 over 10 sources, alpha {ALPHAS}, lambda {LAMBDAS}")


def test_criterion_6_unitarity_and_continuity(acceptance_log, grids):
    defects = []
    for a in ALPHAS:
        for lam in LAMBDAS:
            S = scattering_matrix(free(a), lam, grids={0: grids[a]}, lam_max=max(LAMBDAS))
            defects.append(S.defect)
    sweeps = {}
    for spec in (free(0.8), free(1.0), free(1.5), rho_one_power(1.0)):
        rep = smatrix_sweep(spec, np.linspace(0.5, 2.0, 7))
        defects.extend(rep.defects)
        sweeps[f"a={spec.alpha:g},{spec.family}"] = rep
    ok = max(defects) <= 1e-5 and all(not r.outliers and r.holder_omega > 0
                                      for r in sweeps.values())
    fits = "; ".join(f"{k}: C={r.holder_C:.2f}, omega={r.holder_omega:.2f}, "
                     f"outliers={len(r.outliers)}" for k, r in sweeps.items())
    report(acceptance_log, 6, ok, f"max defect {max(defects):.2e} <= 1e-5; {fits}")


def test_criterion_7_oracles(acceptance_log, grids):
    airy = max(np.max(np.abs(scattering_matrix(free(1.0), lam, grids={0: grids[1.0]},
                                               lam_max=max(LAMBDAS)).matrix
                             - airy_smatrix(lam).S)) for lam in LAMBDAS)
    spec = PotentialSpec(alpha=1.2, d=3, family="gaussian", params={"coupling": 0.8, "width": 1.0})
    radial = 0.0
    for lam in (0.5, 1.0):
        S = scattering_matrix(spec, lam, ell_max=3)
        ref = [np.ravel(ode_smatrix(lam, spec, ell=ell).S)[0] for ell in range(4)]
        radial = max(radial, float(np.max(np.abs(np.diag(S.matrix) - ref))))
    report(acceptance_log, 7, airy <= 1e-6 and radial <= 1e-5,
           f"Airy difference {airy:.2e} <= 1e-6 (alpha=1, d=1); radial d=3 ell<=3 "
           f"vs shooting {radial:.2e} <= 1e-5")


def test_criterion_8_eigenfunctions(acceptance_log):
    spec = free(1.0)
    lam = 1.0
    g = scattering_grid(spec, lam, L=au.eigen_length(spec, lam))
    rows = au.check_eigenfunction(g, lam, S=airy_smatrix(lam).S)
    shell = rows[-1]
    text = "; ".join(f"{r.name.split('[')[0]} {r.measured:.2e}" for r in rows)
    text += (f"; raw last-shell error {shell.detail['raw_last_shell']:.2e} "
             f"(L={g.L:g}, {len(shell.detail['raw_errors'])} complete shells)")
    report(acceptance_log, 8, all(r.passed for r in rows), text)


def test_criterion_9_radiation_condition(acceptance_log):
    g = build_grid(free(1.0), 2.0, 120.0, ppw=64.0)
    psi = g.from_function(lambda x: np.exp(-(x - 1.0) ** 2) * (1 + 0.5j * x))
    rv = Resolvent(g)
    reps = [radiation_diagnostic(g, 1.0, 1, psi, beta, rv)
            for beta in (0.0, 0.5 * g.spec.beta_c)]
    ok = all(r.bounded and r.separation >= 10 for r in reps)
    text = "; ".join(f"beta={r.beta:.3f}: slope {r.slope:.2f}, wrong-sign slope "
                     f"{r.wrong_slope:.2f}, final-shell separation {r.separation:.1f}x"
                     for r in reps)
    report(acceptance_log, 9, ok, text)


def test_criterion_10_lap(acceptance_log):
    cases = []
    g1 = build_grid(free(1.0), 2.0, 60.0, ppw=64.0)
    cases.append(("d=1", g1, g1.from_function(lambda x: np.exp(-(x - 1.0) ** 2) * (1 + 0.5j * x))))
    spec3 = PotentialSpec(alpha=1.2, d=3, family="gaussian", params={"coupling": 0.8, "width": 1.0})
    g3 = build_grid(spec3, 2.0, 60.0, ppw=64.0, ell=1)
    cases.append(("d=3,ell=1", g3, g3.from_function(lambda r: r ** 2 * np.exp(-(r - 1.0) ** 2))))
    ok, parts = True, []
    for name, g, psi in cases:
        rv = Resolvent(g)
        lap = lap_diagnostic(g, 1.0, psi, resolvent=rv)
        omega = limiting_resolvent(g, 1.0, 1, psi, resolvent=rv).extrapolation["holder_exponent"]
        ok &= lap.stable(1e-2) and omega > 0
        parts.append(f"{name}: last changes {', '.join(f'{c:.1e}' for c in lap.last_change)}, "
                     f"omega {omega:.2f}")
    report(acceptance_log, 10, ok, "; ".join(parts))
