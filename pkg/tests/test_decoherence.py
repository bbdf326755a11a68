# /tests/test_decoherence.py

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import DomainError, IonIndexError
from src.physics import decoherence, ion_array, sums
from src.physics.constants import IonSpecies, PhysicalConstants
from src.physics.continuum import ContinuumModel, min_spacing
from src.physics.decoherence import ContinuumPath, ScalingRegime, SweepPath, TransitionSpec
from src.physics.ion_array import TrapConfig

DUBIN = ContinuumModel.DUBIN_FLUID
CONTINUUM_N = [200, 300, 500, 700, 1000, 1500, 2000]


# --- Building blocks ---

def test_coupling_in_scaled_units(toy_trap):
    constants = toy_trap(2).constants
    spec = TransitionSpec(multipole_a=2, omega_0=1.0, tau_s=1.0)
    assert decoherence.coupling_d2(spec, constants) == pytest.approx(1.0)
    slower = TransitionSpec(multipole_a=2, omega_0=1.0, tau_s=2.0)
    assert decoherence.coupling_d2(slower, constants) == pytest.approx(0.5)


def test_barium_wavenumber(ba_transition):
    assert ba_transition.k0() == pytest.approx(3.56e6, rel=0.01)
    assert ba_transition.sum_power == 8


def test_transition_spec_validation():
    with pytest.raises(DomainError):
        TransitionSpec(multipole_a=3, omega_0=1.0, tau_s=1.0)
    with pytest.raises(DomainError):
        TransitionSpec(multipole_a=1, omega_0=1.0, tau_s=0.0)


def test_two_ion_rate_in_scaled_units():
    constants = PhysicalConstants(hbar=1.0, c=1.0, k_B=1.0, coulomb_q2_unit=1.0, amu=1.0)
    config = TrapConfig(
        n_ions=2, omega_z=1.0, omega_t=1.0,
        species=IonSpecies("toy", mass=1.0, charge_number=1), constants=constants,
    )
    array = ion_array.solve_equilibrium(config)
    gap = ion_array.spacings(array)[1]
    for a in (1, 2):
        spec = TransitionSpec(multipole_a=a, omega_0=1.0, tau_s=1.0)
        expected = gap ** (-(2 * a + 4)) / (2.0 * math.pi)
        for i in (0, 1):
            assert decoherence.per_ion_rate(i, array, spec, config) == pytest.approx(expected, rel=1e-12)


def test_thermal_factor(ba_trap):
    assert decoherence.thermal_factor(ba_trap(2)) == 1.0
    warm = ba_trap(2, temperature=1.0)
    x = warm.constants.hbar * warm.omega_t / (2.0 * warm.constants.k_B * 1.0)
    assert decoherence.thermal_factor(warm) == pytest.approx(1.0 / math.tanh(x))
    assert decoherence.thermal_factor(warm) > 1.0


def test_rates_are_mirror_symmetric_and_bounded(ba_trap, ba_transition):
    config = ba_trap(30)
    array = ion_array.solve_equilibrium(config)
    rates = decoherence.per_ion_rates(array, ba_transition, config)
    np.testing.assert_allclose(rates, rates[::-1], rtol=1e-9)
    assert decoherence.per_ion_rate(3, array, ba_transition, config) == pytest.approx(rates[3])
    total = decoherence.total_vib_rate(array, ba_transition, config)
    assert total == pytest.approx(math.sqrt(np.sum(rates**2)), rel=1e-12)
    assert total <= decoherence.naive_vib_rate(array, ba_transition, config)
    with pytest.raises(IonIndexError):
        decoherence.per_ion_rate(30, array, ba_transition, config)


def test_rate_checks_array_against_config(ba_trap, ba_transition):
    array = ion_array.solve_equilibrium(ba_trap(5))
    with pytest.raises(DomainError):
        decoherence.per_ion_rates(array, ba_transition, ba_trap(6))


def test_combine_rates_limits():
    assert decoherence.combine_rates([0.0, 3.0, 0.0]) == pytest.approx(3.0)
    assert decoherence.combine_rates([2.0] * 16) == pytest.approx(8.0)


def test_central_ion_rate_matches_zeta_estimate(solved_arrays, ba_trap, ba_transition):
    config = ba_trap(500)
    array = solved_arrays(500)
    center = ion_array.central_index(500)
    n = ba_transition.sum_power
    local = ion_array.local_spacings(array)[center]
    estimate = (
        decoherence.rate_prefactor(ba_transition, config)
        * sums.s_n_continuum(float(local), n) / config.d0**n
    )
    assert decoherence.per_ion_rate(center, array, ba_transition, config) == pytest.approx(estimate, rel=0.05)


# --- Continuum paths ---

@settings(max_examples=50, deadline=None)
@given(
    n_ions=st.integers(2, 10**6),
    omega_z=st.floats(2e4, 2e7),
    ratio=st.floats(5.0, 500.0),
    a=st.sampled_from([1, 2]),
    temperature=st.sampled_from([0.0, 1e-4, 1e-3]),
)
def test_closed_forms_are_identical(n_ions, omega_z, ratio, a, temperature):
    config = TrapConfig(n_ions=n_ions, omega_z=omega_z, omega_t=ratio * omega_z, temperature=temperature)
    spec = TransitionSpec(multipole_a=a, omega_0=1e15, tau_s=10.0, coupling_constant=0.7)
    nine = decoherence.vib_rate_continuum(n_ions, spec, config, DUBIN, ContinuumPath.CLOSED_FORM_9)
    eleven = decoherence.vib_rate_continuum(n_ions, spec, config, DUBIN, ContinuumPath.CLOSED_FORM_11)
    assert eleven == pytest.approx(nine, rel=1e-12)


def test_closed_form_spacing_power(ba_trap, ba_transition):
    # the Hughes and Dubin s0 differ, so the rate ratio is their spacing ratio to the 2a+4
    config = ba_trap(1000)
    hughes = decoherence.vib_rate_continuum(1000, ba_transition, config, ContinuumModel.HUGHES_FIT, ContinuumPath.CLOSED_FORM_9)
    dubin = decoherence.vib_rate_continuum(1000, ba_transition, config, DUBIN, ContinuumPath.CLOSED_FORM_9)
    ratio = min_spacing(1000, DUBIN) / min_spacing(1000, ContinuumModel.HUGHES_FIT)
    assert hughes / dubin == pytest.approx(ratio**8, rel=1e-12)


@pytest.mark.parametrize("n_ions", [500, pytest.param(1000, marks=pytest.mark.slow)])
def test_exact_rate_tracks_sum_pipeline(solved_arrays, ba_trap, ba_transition, n_ions):
    config = ba_trap(n_ions)
    exact = decoherence.total_vib_rate(solved_arrays(n_ions), ba_transition, config)
    pipeline = decoherence.vib_rate_continuum(n_ions, ba_transition, config, DUBIN, ContinuumPath.SUM_PIPELINE)
    assert 0.8 <= exact / pipeline <= 1.25


@pytest.mark.slow
def test_barium_thousand_ion_budget(solved_arrays, ba_trap, ba_transition):
    config = ba_trap(1000)
    report = decoherence.decoherence_report(solved_arrays(1000), ba_transition, config)
    assert report.tau_vib >= 1e4 * ba_transition.tau_s
    assert report.tau_vib / report.tau_rad >= 1e6
    assert report.tau_rad == pytest.approx(0.07)
    assert 0.5 <= report.continuum_rates["closed-form-9"] * report.tau_vib <= 2.0
    assert report.s0_model == pytest.approx(0.5e-6, rel=0.1)
    assert not report.radiative.ok


# --- Radiative window and combination ---

def test_radiative_window():
    assert decoherence.radiative_window(1, 35.0) == pytest.approx(70.0)
    assert decoherence.radiative_window(1000, 35.0) == pytest.approx(0.07)
    assert decoherence.radiative_window(500, 35.0) == pytest.approx(2.0 * decoherence.radiative_window(1000, 35.0))
    assert decoherence.radiative_window(1000, 35.0, factor=1.0) == pytest.approx(0.035)
    with pytest.raises(DomainError):
        decoherence.radiative_window(0, 35.0)


def test_combined_decoherence():
    assert decoherence.combined_decoherence(2.0, 2.0) == pytest.approx(1.0)
    assert decoherence.combined_decoherence(math.inf, 3.0) == pytest.approx(3.0)
    assert decoherence.combined_decoherence(1.0, 1.0 / 3.0) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        decoherence.combined_decoherence(0.0, 1.0)


@given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
def test_combined_decoherence_is_symmetric_and_bounded(a, b):
    t = decoherence.combined_decoherence(a, b)
    assert t == pytest.approx(decoherence.combined_decoherence(b, a))
    assert t <= min(a, b)


def test_radiative_validity_flag(ba_transition):
    assert decoherence.radiative_validity(5e-6, ba_transition).ok
    assert not decoherence.radiative_validity(0.5e-6, ba_transition).ok
    assert decoherence.radiative_validity(1e-6, ba_transition).wavelength == pytest.approx(1.76e-6, rel=0.01)


def test_report_invariants(ba_trap, ba_transition):
    config = ba_trap(20)
    report = decoherence.decoherence_report(ion_array.solve_equilibrium(config), ba_transition, config)
    rates = np.asarray(report.per_ion_rates)
    assert report.tau_vib ** -2 == pytest.approx(np.sum(rates**2), rel=1e-12)
    assert report.t_dec <= min(report.tau_vib, report.tau_rad)
    assert set(report.continuum_rates) == {p.value for p in ContinuumPath}
    assert report.radiative.ok


# --- Fidelity profile ---

def test_fidelity_at_zero_and_single_ion():
    exact, gaussian = decoherence.fidelity_profile(0.0, [1.0, 2.0])
    assert (exact, gaussian) == (1.0, 1.0)
    t = np.linspace(0.0, 0.3, 7)
    exact, gaussian = decoherence.fidelity_profile(t, [1.0])
    np.testing.assert_allclose(exact, np.cos(t) ** 2)
    np.testing.assert_allclose(gaussian, np.exp(-(t**2)))
    with pytest.raises(DomainError):
        decoherence.fidelity_profile(-1.0, [1.0])


def test_fidelity_gaussian_approximation():
    rng = np.random.default_rng(7)
    for _ in range(100):
        top = 10.0 ** rng.uniform(-2.0, 2.0)
        rates = np.concatenate([[top], 0.5 * top * 10.0 ** rng.uniform(-3.0, 0.0, size=9)])
        t = np.linspace(0.0, 0.2 / rates.max(), 41)
        exact, gaussian = decoherence.fidelity_profile(t, rates)
        gap = np.abs(exact - gaussian)
        assert np.all(gap <= 1e-3)
        quartic = np.sum(np.multiply.outer(t, rates) ** 4, axis=-1) / 6.0
        assert np.all(gap <= 1.02 * quartic + 1e-15)


def test_fidelity_gap_on_comparable_rates():
    rng = np.random.default_rng(11)
    within = 0
    for _ in range(100):
        rates = rng.uniform(0.1, 1.0, size=10)
        t = np.linspace(0.0, 0.2 / rates.max(), 41)
        exact, gaussian = decoherence.fidelity_profile(t, rates)
        gap = np.abs(exact - gaussian)
        quartic = np.sum(np.multiply.outer(t, rates) ** 4, axis=-1) / 6.0
        assert np.all(gap <= 1.02 * quartic + 1e-15)
        assert gap.max() <= 3e-3
        if np.sum((rates / rates.max()) ** 4) <= 3.5:
            within += 1
            assert gap.max() <= 1e-3
    assert within > 0


# --- Units ---

def test_rates_are_unit_invariant(ba_trap, ba_transition):
    si = ba_trap(12, temperature=2e-4)
    array = ion_array.solve_equilibrium(si)
    omega_z, d0, mass = si.omega_z, si.d0, si.mass
    energy = mass * d0**2 * omega_z**2
    scaled_constants = PhysicalConstants(
        hbar=si.constants.hbar / (energy / omega_z),
        c=si.constants.c / (d0 * omega_z),
        k_B=si.constants.k_B / energy,
        coulomb_q2_unit=1.0,
        amu=1.0,
    )
    scaled = TrapConfig(
        n_ions=12, omega_z=1.0, omega_t=si.omega_t / omega_z, temperature=si.temperature,
        species=IonSpecies("scaled", mass=1.0, charge_number=1), constants=scaled_constants,
    )
    scaled_spec = TransitionSpec(
        multipole_a=ba_transition.multipole_a,
        omega_0=ba_transition.omega_0 / omega_z,
        tau_s=ba_transition.tau_s * omega_z,
    )
    assert scaled.d0 == pytest.approx(1.0, rel=1e-14)
    si_ratio = 1.0 / decoherence.total_vib_rate(array, ba_transition, si) / ba_transition.tau_s
    scaled_ratio = 1.0 / decoherence.total_vib_rate(array, scaled_spec, scaled) / scaled_spec.tau_s
    assert scaled_ratio == pytest.approx(si_ratio, rel=1e-10)


# --- Crossover and sweeps ---

def test_vibrational_decoherence_eventually_dominates(ba_trap, ba_transition):
    config = ba_trap(2)
    n_star = decoherence.dominance_crossover(ba_transition, config)
    assert n_star is not None
    assert 1e4 < n_star < 1e7

    def ratio(n):
        rate = decoherence.vib_rate_continuum(n, ba_transition, config.with_ions(n), DUBIN)
        return rate * decoherence.radiative_window(n, ba_transition.tau_s)

    assert ratio(n_star) > 1.0 >= ratio(n_star - 1)
    assert ratio(4 * n_star) > 1.0
    assert decoherence.dominance_crossover(ba_transition, config, n_max=1000) is None


@pytest.mark.parametrize("a,expected", [(2, 35.0 / 6.0), (1, 4.5)])
def test_fixed_trap_sweep_exponent(ba_trap, a, expected):
    spec = TransitionSpec(multipole_a=a, omega_0=2.0 * math.pi * 1.7e14, tau_s=35.0)
    result = decoherence.scaling_sweep(ScalingRegime.FIXED_OMEGA_Z, CONTINUUM_N, spec, ba_trap(1000))
    assert result.predicted_exponent == pytest.approx(expected)
    assert result.exponent == pytest.approx(expected, abs=0.2)
    assert [r.n_ions for r in result.rows] == CONTINUUM_N
    assert all(r.omega_z == ba_trap(1).omega_z for r in result.rows)


def test_fixed_spacing_sweep_exponents(ba_trap, ba_transition):
    base = ba_trap(1000)
    quoted = decoherence.scaling_sweep(ScalingRegime.FIXED_S0, CONTINUUM_N, ba_transition, base)
    assert quoted.exponent == pytest.approx(2.5, abs=0.2)
    consistent = decoherence.scaling_sweep(ScalingRegime.FIXED_S0_SELF_CONSISTENT, CONTINUUM_N, ba_transition, base)
    assert consistent.exponent == pytest.approx(0.5, abs=0.05)
    target = min_spacing(1000, DUBIN) * base.d0
    for row in quoted.rows:
        assert row.s0 == pytest.approx(target, rel=1e-9)


@pytest.mark.parametrize("regime", list(ScalingRegime))
def test_rates_grow_with_ion_number(ba_trap, ba_transition, regime):
    result = decoherence.scaling_sweep(regime, [50, 100, 200, 400, 800], ba_transition, ba_trap(400))
    rates = [r.tau_vib_inv for r in result.rows]
    assert all(b > a for a, b in zip(rates, rates[1:]))


def test_sweep_rows_independent_of_threads(ba_trap, ba_transition):
    one = decoherence.scaling_sweep(ScalingRegime.FIXED_OMEGA_Z, CONTINUUM_N, ba_transition, ba_trap(10), threads=1)
    four = decoherence.scaling_sweep(ScalingRegime.FIXED_OMEGA_Z, CONTINUUM_N, ba_transition, ba_trap(10), threads=4)
    assert one.rows == four.rows


@pytest.mark.parametrize("n_list", [[], [5, 20], [100, 100], [200, 100]])
def test_sweep_rejects_bad_n_lists(ba_trap, ba_transition, n_list):
    with pytest.raises(DomainError):
        decoherence.scaling_sweep(ScalingRegime.FIXED_OMEGA_Z, n_list, ba_transition, ba_trap(10))


def test_exact_sweep_is_capped(ba_trap, ba_transition):
    with pytest.raises(DomainError, match="exact_n_cap"):
        decoherence.scaling_sweep(
            ScalingRegime.FIXED_OMEGA_Z, [50, 200], ba_transition, ba_trap(10),
            path=SweepPath.EXACT, exact_n_cap=100,
        )


@pytest.mark.slow
@pytest.mark.parametrize("regime", [ScalingRegime.FIXED_OMEGA_Z, ScalingRegime.FIXED_S0])
def test_exact_sweep_exponent(ba_trap, ba_transition, regime):
    result = decoherence.scaling_sweep(
        regime, [100, 200, 400, 600, 800], ba_transition, ba_trap(400), path=SweepPath.EXACT,
    )
    assert result.exponent == pytest.approx(result.predicted_exponent, abs=0.5)
