# /src/physics/sums.py
"""
Inverse-power lattice sums over the array, exact and continuum.

S_n(i) = Σ_{j≠i} |z_i - z_j|^{-n} is the field-gradient sum seen by ion i;
T_n = Σ_i ŝ_i^{-n} sums the local spacing over the whole array. Exact sums
add terms from largest to smallest magnitude with a compensated summation.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.special

from src.core.errors import DomainError, IonIndexError
from src.physics.continuum import ContinuumModel, half_length, min_spacing
from src.physics.ion_array import PositionsLike, as_positions, local_spacings


class TSumForm(str, Enum):
    INTEGRAL = "integral"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class SumComparison:
    exact: float
    continuum: float

    @property
    def relative_error(self) -> float:
        if self.exact == 0:
            return 0.0 if self.continuum == 0 else math.inf
        return abs(self.continuum - self.exact) / abs(self.exact)


def _check_power(n: int, minimum: int) -> None:
    if int(n) != n or n < minimum:
        raise DomainError(f"Sum power must be an integer >= {minimum}, got {n}")


def zeta(n: int) -> float:
    """Riemann ζ(n) for integer n ≥ 2."""
    _check_power(n, 2)
    return float(scipy.special.zeta(n, 1))


def _ordered_sum(terms: np.ndarray) -> float:
    return math.fsum(np.sort(terms)[::-1])


def s_n_exact(array: PositionsLike, i: int, n: int) -> float:
    z = as_positions(array)
    if z.size < 2:
        raise DomainError("S_n needs at least 2 ions")
    if not 0 <= i < z.size:
        raise IonIndexError(f"Ion index {i} outside 0..{z.size - 1}")
    _check_power(n, 2)
    sep = np.abs(np.delete(z, i) - z[i])
    return _ordered_sum(sep ** (-float(n)))


def s_n_all(array: PositionsLike, n: int) -> np.ndarray:
    """S_n(i) for every ion."""
    z = as_positions(array)
    return np.array([s_n_exact(z, i, n) for i in range(z.size)])


def s_n_continuum(s_local: float, n: int) -> float:
    """Uniform-lattice approximation 2ζ(n)/sⁿ."""
    if not s_local > 0:
        raise DomainError(f"Local spacing must be positive, got {s_local}")
    return 2.0 * zeta(n) / s_local**n


def t_n_exact(array: PositionsLike, n: int) -> float:
    if as_positions(array).size < 2:
        raise DomainError("T_n needs at least 2 ions")
    _check_power(n, 0)
    return _ordered_sum(local_spacings(array) ** (-float(n)))


def beta_integral(n: int) -> float:
    """∫₋₁¹ (1-x²)^{n+1} dx = B(n+2, 1/2)."""
    return float(scipy.special.beta(n + 2, 0.5))


def asymptotic_factor(n: int) -> float:
    """Large-n approximation √(4π/(4n+7)) of B(n+2, 1/2)."""
    return math.sqrt(4.0 * math.pi / (4.0 * n + 7.0))


def t_n_continuum(
    n_ions: int, n: int, model: ContinuumModel, form: TSumForm = TSumForm.INTEGRAL,
) -> float:
    """T_n ≈ (L/s₀^{n+1})·B(n+2, 1/2), or its asymptotic form."""
    _check_power(n, 0)
    length = half_length(n_ions, model)
    s0 = min_spacing(n_ions, model)
    factor = beta_integral(n) if TSumForm(form) is TSumForm.INTEGRAL else asymptotic_factor(n)
    return length / s0 ** (n + 1) * factor


def compare_s_n(array: PositionsLike, i: int, n: int) -> SumComparison:
    """Exact S_n(i) against 2ζ(n)/ŝ_i with the local spacing of ion i."""
    exact = s_n_exact(array, i, n)
    return SumComparison(exact=exact, continuum=s_n_continuum(float(local_spacings(array)[i]), n))


def compare_t_n(
    array: PositionsLike, n: int, model: ContinuumModel, form: TSumForm = TSumForm.INTEGRAL,
) -> SumComparison:
    n_ions = as_positions(array).size
    return SumComparison(exact=t_n_exact(array, n), continuum=t_n_continuum(n_ions, n, model, form))
