# /src/physics/continuum.py
"""
Large-N structure laws for the linear array, in units of d₀.

Three closed forms are available. ``SIMPLE_BALANCE`` balances the trap force
against nearest-pair Coulomb forces; ``DUBIN_FLUID`` treats the array as a
uniformly charged ellipsoid with a discreteness correction to its length;
``HUGHES_FIT`` is a numerical fit that only provides the minimum spacing.
Both profile models share the shape s(z) = s₀ / (1 - z²/L²).
"""

import math
from enum import Enum
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

from src.core.errors import DomainError, UnsupportedModelError

# The "0.8" inside Dubin's logarithm is 6·exp(γ - 13/5).
DUBIN_LOG_FACTOR = 6.0 * math.exp(np.euler_gamma - 13.0 / 5.0)
DUBIN_LOG_FACTOR_DISPLAY = 0.8
DUBIN_S0_PREFACTOR_DISPLAY = 1.92
HUGHES_PREFACTOR = 2.0
HUGHES_EXPONENT = -0.56


class ContinuumModel(str, Enum):
    """Selector among the large-N structure laws."""
    SIMPLE_BALANCE = "simple"
    DUBIN_FLUID = "dubin"
    HUGHES_FIT = "hughes"

    @property
    def has_profile(self) -> bool:
        return self is not ContinuumModel.HUGHES_FIT


def _check_n(n_ions: int) -> None:
    if n_ions < 2:
        raise DomainError(f"Continuum laws need at least 2 ions, got {n_ions}")


def _require_profile(model: ContinuumModel, quantity: str) -> None:
    if not model.has_profile:
        raise UnsupportedModelError(
            f"{model.value} model defines only the minimum spacing; it has no {quantity}"
        )


def dubin_log(n_ions: int) -> float:
    """ln(0.8·N) with the exact constant; positive for N ≥ 2."""
    arg = DUBIN_LOG_FACTOR * n_ions
    if arg <= 1.0:
        raise DomainError(f"Dubin length needs 0.8·N > 1, got N={n_ions}")
    return math.log(arg)


def half_length(n_ions: int, model: ContinuumModel) -> float:
    """Half-length L of the array in units of d₀."""
    _check_n(n_ions)
    _require_profile(model, "half-length")
    if model is ContinuumModel.SIMPLE_BALANCE:
        return (math.pi**2 * n_ions / 2.0) ** (1.0 / 3.0)
    return (3.0 * n_ions * dubin_log(n_ions)) ** (1.0 / 3.0)


def min_spacing(n_ions: int, model: ContinuumModel) -> float:
    """Central (minimum) spacing s₀ in units of d₀."""
    _check_n(n_ions)
    if model is ContinuumModel.HUGHES_FIT:
        return HUGHES_PREFACTOR * n_ions**HUGHES_EXPONENT
    length = half_length(n_ions, model)
    if model is ContinuumModel.SIMPLE_BALANCE:
        return 2.0 * math.pi**2 / length**2
    return 4.0 * length / (3.0 * n_ions)


def dubin_min_spacing_display(n_ions: int) -> float:
    """The rounded closed form 1.92·N^{-2/3}·[ln(0.8N)]^{1/3} as usually quoted."""
    _check_n(n_ions)
    return (
        DUBIN_S0_PREFACTOR_DISPLAY
        * n_ions ** (-2.0 / 3.0)
        * math.log(DUBIN_LOG_FACTOR_DISPLAY * n_ions) ** (1.0 / 3.0)
    )


def end_spacing(n_ions: int, model: ContinuumModel) -> float:
    """Spacing at the array end from the end-ion force balance, s(L) ≈ π(1/6L)^{1/2}."""
    if model is not ContinuumModel.SIMPLE_BALANCE:
        raise UnsupportedModelError(f"end spacing is defined for the simple model, not {model.value}")
    return math.pi * math.sqrt(1.0 / (6.0 * half_length(n_ions, model)))


def _scalar_or_array(values: np.ndarray, like: ArrayLike) -> Union[float, np.ndarray]:
    return float(values) if np.ndim(like) == 0 else values


def spacing_profile(z: ArrayLike, n_ions: int, model: ContinuumModel) -> Union[float, np.ndarray]:
    """Local spacing s(z) = s₀/(1 - z²/L²) for |z| < L."""
    _require_profile(model, "spacing profile")
    length = half_length(n_ions, model)
    z_arr = np.asarray(z, dtype=float)
    if np.any(np.abs(z_arr) >= length):
        raise DomainError(f"spacing profile diverges at the array edge |z| >= L = {length:.6g}")
    s0 = min_spacing(n_ions, model)
    return _scalar_or_array(s0 / (1.0 - (z_arr / length) ** 2), z)


def ion_count_profile(z: ArrayLike, n_ions: int, model: ContinuumModel) -> Union[float, np.ndarray]:
    """
    Cumulative ion count n(z) from the left end, N·(2 + 3x - x³)/4 with x = z/L.

    This is ∫dz/s for the fluid model; the simple model uses the same
    normalized shape so that n(L) = N for both.
    """
    _require_profile(model, "ion count profile")
    length = half_length(n_ions, model)
    z_arr = np.asarray(z, dtype=float)
    if np.any(np.abs(z_arr) > length):
        raise DomainError(f"ion count profile is defined for |z| <= L = {length:.6g}")
    x = z_arr / length
    return _scalar_or_array(n_ions * (2.0 + 3.0 * x - x**3) / 4.0, z)


def invert_ion_count(n_ions: int, model: ContinuumModel = ContinuumModel.DUBIN_FLUID) -> np.ndarray:
    """
    Positions where n(z) = k - 1/2 for k = 1..N, used to seed the exact solver.

    The cubic x³ - 3x + (c - 2) = 0 with c = 4n/N has the root
    x = 2·sin(arcsin(c/2 - 1)/3) inside [-1, 1].
    """
    if n_ions == 1:
        return np.zeros(1)
    length = half_length(n_ions, model)
    counts = np.arange(1, n_ions + 1) - 0.5
    c = 4.0 * counts / n_ions
    x = 2.0 * np.sin(np.arcsin(np.clip(c / 2.0 - 1.0, -1.0, 1.0)) / 3.0)
    return length * x
