import numpy as np
import pytest

from repscat.potential import PotentialSpec, SpecError, from_mapping, free, power_law, rho_one_power


def test_missing_alpha_names_the_field():
    with pytest.raises(SpecError, match="alpha"):
        from_mapping({"d": 1})


@pytest.mark.parametrize("alpha", [0.5, 2.0, 2.5])
def test_alpha_out_of_range(alpha):
    with pytest.raises(SpecError, match="outside"):
        free(alpha).check()


@pytest.mark.parametrize("alpha", [0.7, 1.0, 1.5, 1.9])
def test_free_spec_valid(alpha):
    free(alpha).check()


def test_even_dimension_rejected():
    with pytest.raises(SpecError, match="even"):
        free(1.0, d=2).check()


def test_square_well_rejected():
    with pytest.raises(SpecError, match="square_well"):
        PotentialSpec(alpha=1.0, family="square_well", params={"coupling": -5.0}).check()


def test_unknown_family():
    with pytest.raises(SpecError):
        PotentialSpec(alpha=1.0, family="bogus")


def test_overstated_decay_rate_rejected():
    # q ~ |x|^-s with s = 0.6 decays like f^-1.2 for alpha = 1; rho = 3 is too optimistic
    with pytest.raises(SpecError, match="short-range"):
        power_law(1.0, 0.3, 0.6, rho=3.0).check()


@pytest.mark.parametrize("alpha", [0.8, 1.0, 1.5])
def test_rho_one_family(alpha):
    spec = rho_one_power(alpha)
    spec.check()
    assert spec.rho == pytest.approx(1.0)


def test_critical_exponents():
    spec = free(1.0, d=3)
    assert spec.kappa == pytest.approx((3 + 0.5 - 1) / 1.5)
    assert spec.tau == pytest.approx((3 - 0.5 - 3) / 1.5)


def test_q_is_even_for_radial():
    spec = power_law(1.2, 0.5, 1.0, d=3)
    x = np.linspace(-5, 5, 11)
    assert np.allclose(spec.q(x), spec.q(-x))
