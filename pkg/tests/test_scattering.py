import numpy as np
import pytest

from repscat.audit import psi_corpus
from repscat.oracle import airy_smatrix, ode_smatrix
from repscat.potential import PotentialSpec, free, rho_one_power
from repscat.scattering import (AngularVector, angular, basis_vector, cutoff_index,
                                decomposition_check, extract_asymptotic_xi, fit_holder,
                                jost_table, lg_breakdown_level, linearity_check, parseval_check,
                                rellich_probe, scattering_grid, scattering_matrix, shell_rate,
                                smatrix_sweep, wave_matrix_adjoint)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_smatrix_against_airy(free_grid, lam):
    S = scattering_matrix(free(1.0), lam, grids={0: free_grid}, lam_max=2.0)
    assert np.max(np.abs(S.matrix - airy_smatrix(lam).S)) < 1e-6
    assert S.defect < 1e-5
    assert max(S.meta["roundtrip"]) < 1e-4
    assert S.parity_commutator < 1e-8
    assert not S.flags


@pytest.mark.parametrize("spec", [free(0.8), rho_one_power(1.0)], ids=["free08", "rho1_10"])
def test_smatrix_against_shooting(spec):
    S = scattering_matrix(spec, 1.0)
    assert np.max(np.abs(S.matrix - ode_smatrix(1.0, spec).S)) < 1e-5


def test_radial_channels_against_shooting():
    spec = PotentialSpec(alpha=1.2, d=3, family="gaussian", params={"coupling": 0.8, "width": 1.0})
    S = scattering_matrix(spec, 1.0, ell_max=2)
    ref = [np.ravel(ode_smatrix(1.0, spec, ell=ell).S)[0] for ell in range(3)]
    assert np.max(np.abs(np.diag(S.matrix) - ref)) < 1e-5


@pytest.mark.parametrize("k", range(4))
def test_parseval_corpus(free_grid, free_resolvent, k):
    psi = psi_corpus(free_grid)[k]
    rec = parseval_check(free_grid, 1.0, psi, free_resolvent)
    assert rec["rel_error_plus"] < 1e-4 and rec["rel_error_minus"] < 1e-4
    assert rec["plus_minus_norm_gap"] < 1e-5


def test_linearity(free_grid, free_resolvent):
    lin = linearity_check(free_grid, 1.0, free_resolvent, seed=3)
    assert lin["synthesis"] < 1e-10 and lin["wave_matrix"] < 1e-10


def test_eigenfunction_data(free_grid, free_resolvent):
    S = airy_smatrix(1.0).S
    xm = angular(free_grid, np.array([0.6 + 0.2j, -0.3 + 0.5j]))
    rec = wave_matrix_adjoint(free_grid, 1.0, -1, xm, free_resolvent)
    assert rec.interior_residual < 1e-6
    xp, xm2, _ = extract_asymptotic_xi(1.0, rec.phi)
    assert np.linalg.norm(xm2.values - xm.values) < 1e-6
    assert np.linalg.norm(xp.values - S @ xm.values) < 1e-6
    rep = decomposition_check(1.0, rec)
    assert rep.remainder_slope < 0
    assert rep.norm_gap < 1e-6


def test_zero_field_profiles(free_grid, free_resolvent):
    rec = wave_matrix_adjoint(free_grid, 1.0, -1, angular(free_grid, [0, 0]), free_resolvent)
    rep = decomposition_check(1.0, rec)
    assert rep.zero_field
    assert not np.any(rep.remainder_profile) and not np.any(rep.shell_averages)


def test_angular_vector_reflection(free_grid):
    v = basis_vector(free_grid, 0)
    assert isinstance(v, AngularVector)
    assert np.allclose(v.reflected().values, [0, 1])
    assert v.norm() == pytest.approx(1.0)


def test_shell_rate():
    assert shell_rate(free(1.0)) == pytest.approx(2.0)
    assert shell_rate(rho_one_power(1.5)) == pytest.approx(2.0)


def test_sweep_continuity():
    rep = smatrix_sweep(free(1.0), np.linspace(0.8, 1.2, 5))
    assert np.all(rep.defects < 1e-5)
    assert rep.holder_omega > 0.5
    assert not rep.outliers


def test_fit_holder_flags_jumps_only():
    h = np.array([1e-3, 1e-2] * 4)
    dS = 3.0 * h
    C, omega, out = fit_holder(h, dS, test=([0.25, 0.25, 0.25], [0.7, 0.74, 0.9]))
    assert omega == pytest.approx(1.0)
    assert C == pytest.approx(3.0)
    assert out == [2]


def test_fit_holder_needs_two_scales():
    with pytest.raises(ValueError):
        fit_holder([0.1, 0.1], [0.2, 0.3])


GAUSS3 = PotentialSpec(alpha=1.2, d=3, family="gaussian", params={"coupling": 0.8, "width": 1.0})


@pytest.mark.parametrize("spec", [free(0.8), free(1.0), free(1.5), rho_one_power(1.0)])
def test_cutoff_index_one_dimension(spec):
    assert cutoff_index(spec, 0.5) == 1


@pytest.mark.parametrize("ell,expected", [(0, 1), (1, 1), (2, 2), (3, 2)])
def test_cutoff_index_follows_centrifugal_barrier(ell, expected):
    m = cutoff_index(GAUSS3, 0.5, ell)
    assert m == expected
    assert 2.0 ** m >= lg_breakdown_level(GAUSS3, 0.5, ell)


def test_jost_table_starts_past_breakdown():
    g = scattering_grid(GAUSS3, 0.5, ell=3, lam_min=0.5)
    tab = jost_table(g, 0.5, 1)
    assert g.f[tab.idx].min() > lg_breakdown_level(GAUSS3, 0.5, 3)
    assert g.f.max() >= 2 * np.sqrt(2) * 2.0 ** (cutoff_index(GAUSS3, 0.5, 3) + 1)


def test_rellich_probe_nondecaying():
    g = scattering_grid(free(1.0), 1.0)
    rep = rellich_probe(g, 1.0, seeds=4, iterations=4)
    assert rep.all_nondecaying
