# /tests/test_constants.py

import math

import pytest
import scipy.constants
from hypothesis import given
from hypothesis import strategies as st

from src.core.errors import DomainError
from src.physics.constants import (
    BARIUM_138,
    CODATA_2018,
    IonSpecies,
    PhysicalConstants,
    gaussian_q2,
    trap_length_scale,
)


def test_codata_values_match_scipy():
    assert CODATA_2018.hbar == pytest.approx(scipy.constants.hbar, rel=1e-9)
    assert CODATA_2018.c == scipy.constants.c
    assert CODATA_2018.k_B == pytest.approx(scipy.constants.k, rel=1e-9)
    assert CODATA_2018.amu == pytest.approx(scipy.constants.atomic_mass, rel=1e-9)
    expected_q2 = scipy.constants.e**2 / (4.0 * math.pi * scipy.constants.epsilon_0)
    assert CODATA_2018.coulomb_q2_unit == pytest.approx(expected_q2, rel=1e-9)


def test_gaussian_q2_scales_with_charge_squared():
    assert gaussian_q2(0) == 0.0
    assert gaussian_q2(2) == pytest.approx(4.0 * gaussian_q2(1), rel=1e-15)
    with pytest.raises(DomainError):
        gaussian_q2(-1)


def test_barium_length_scale_is_about_14_microns():
    d0 = trap_length_scale(gaussian_q2(1), BARIUM_138.mass, 2.0 * math.pi * 1.0e5)
    assert d0 == pytest.approx(14e-6, rel=0.05)
    assert d0 == pytest.approx(13.7e-6, rel=0.01)


@pytest.mark.parametrize("q2,mass,omega_z", [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, 0.0)])
def test_length_scale_rejects_non_positive_inputs(q2, mass, omega_z):
    with pytest.raises(DomainError):
        trap_length_scale(q2, mass, omega_z)


@given(
    q2=st.floats(1e-30, 1e-20),
    mass=st.floats(1e-27, 1e-23),
    omega_z=st.floats(1e4, 1e8),
    k=st.floats(0.1, 10.0),
)
def test_length_scale_follows_omega_to_minus_two_thirds(q2, mass, omega_z, k):
    base = trap_length_scale(q2, mass, omega_z)
    scaled = trap_length_scale(q2, mass, k * omega_z)
    assert scaled == pytest.approx(base * k ** (-2.0 / 3.0), rel=1e-12)


def test_species_and_constants_validate():
    with pytest.raises(DomainError):
        IonSpecies("bad", mass=0.0, charge_number=1)
    with pytest.raises(DomainError):
        PhysicalConstants(hbar=1.0, c=-1.0, k_B=1.0, coulomb_q2_unit=1.0, amu=1.0)
    assert IonSpecies.from_amu("x", 2.0).mass == pytest.approx(2.0 * CODATA_2018.amu)


@given(
    q2=st.floats(1e-30, 1e-20),
    mass=st.floats(1e-27, 1e-23),
    omega_z=st.floats(1e4, 1e8),
    k=st.floats(0.1, 10.0),
)
def test_length_scale_balances_trap_and_coulomb(q2, mass, omega_z, k):
    d0 = trap_length_scale(q2, mass, omega_z)
    assert mass * omega_z**2 * d0**3 == pytest.approx(q2, rel=1e-12)
    assert trap_length_scale(k * q2, mass, omega_z) == pytest.approx(d0 * k ** (1.0 / 3.0), rel=1e-12)
