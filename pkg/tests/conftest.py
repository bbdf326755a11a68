# /tests/conftest.py

import math

import pytest

from src.physics.constants import BARIUM_138, IonSpecies, PhysicalConstants
from src.physics.decoherence import BA138_TRANSITION, TransitionSpec
from src.physics.ion_array import TrapConfig, solve_equilibrium

BA_OMEGA_Z = 2.0 * math.pi * 1.0e5
BA_OMEGA_T = 2.0 * math.pi * 2.0e7

TOY_CONSTANTS = PhysicalConstants(hbar=1.0, c=1.0, k_B=1.0, coulomb_q2_unit=1.0, amu=1.0)
TOY_SPECIES = IonSpecies("toy", mass=1.0, charge_number=1)


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch):
    """Keep the caller's IONTRAP_* overrides out of every test."""
    monkeypatch.delenv("IONTRAP_THREADS", raising=False)
    monkeypatch.delenv("IONTRAP_LOG_LEVEL", raising=False)


@pytest.fixture
def ba_transition() -> TransitionSpec:
    return BA138_TRANSITION


@pytest.fixture
def ba_trap():
    """Factory for Ba⁺ traps at the worked-example frequencies."""

    def make(n_ions: int, **overrides) -> TrapConfig:
        params = dict(n_ions=n_ions, omega_z=BA_OMEGA_Z, omega_t=BA_OMEGA_T, species=BARIUM_138)
        params.update(overrides)
        return TrapConfig(**params)

    return make


@pytest.fixture
def toy_trap():
    """Scaled-unit trap: mass, charge, ω_z, ħ and c all 1, so d₀ = 1."""

    def make(n_ions: int, omega_t: float = 10.0) -> TrapConfig:
        return TrapConfig(
            n_ions=n_ions, omega_z=1.0, omega_t=omega_t,
            species=TOY_SPECIES, constants=TOY_CONSTANTS,
        )

    return make


@pytest.fixture
def toy_transition() -> TransitionSpec:
    return TransitionSpec(multipole_a=1, omega_0=1.0e3, tau_s=1.0)


@pytest.fixture(scope="session")
def solved_arrays():
    """Cache of Ba⁺ equilibria keyed by N; solving is deterministic."""
    cache = {}

    def get(n_ions: int):
        if n_ions not in cache:
            config = TrapConfig(n_ions=n_ions, omega_z=BA_OMEGA_Z, omega_t=BA_OMEGA_T)
            cache[n_ions] = solve_equilibrium(config)
        return cache[n_ions]

    return get
