# /src/physics/ion_array.py
"""
Exact equilibrium of N ions in a harmonic axial well.

Positions are solved in units of d₀, where the dimensionless energy is
E(z) = ½Σz_i² + Σ_{i<j} 1/|z_i - z_j|. The solver is a damped Newton
iteration on the dense Hessian with an order-preserving backtracking
line search.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from src.core.errors import ConvergenceError, DomainError, InstabilityError
from src.physics.constants import (
    BARIUM_138,
    CODATA_2018,
    IonSpecies,
    PhysicalConstants,
    gaussian_q2,
    trap_length_scale,
)
from src.physics.continuum import ContinuumModel, half_length, invert_ion_count
from src.utils.config.settings import settings
from src.utils.resources.logger import logger

SYMMETRY_TOLERANCE = 1e-9
DEFAULT_LINEAR_REGIME_RATIO = 10.0


@dataclass(frozen=True)
class TrapConfig:
    """Trap parameters and ion species. Frequencies are angular (rad/s)."""

    n_ions: int
    omega_z: float
    omega_t: float
    species: IonSpecies = BARIUM_138
    temperature: float = 0.0
    constants: PhysicalConstants = CODATA_2018
    linear_regime_ratio: float = DEFAULT_LINEAR_REGIME_RATIO

    def __post_init__(self) -> None:
        if self.n_ions < 1:
            raise DomainError(f"n_ions must be at least 1, got {self.n_ions}")
        if not (self.omega_z > 0 and self.omega_t > 0):
            raise DomainError(
                f"Trap frequencies must be positive (omega_z={self.omega_z}, omega_t={self.omega_t})"
            )
        if self.temperature < 0:
            raise DomainError(f"Temperature must be non-negative, got {self.temperature}")
        if self.species.charge_number < 1:
            raise DomainError("Trapped species must be charged")

    @property
    def q2(self) -> float:
        return gaussian_q2(self.species.charge_number, self.constants)

    @property
    def mass(self) -> float:
        return self.species.mass

    @property
    def d0(self) -> float:
        return trap_length_scale(self.q2, self.mass, self.omega_z)

    @property
    def linear_regime_advisory(self) -> bool:
        """True when ω_t/ω_z is too small for the array to be reliably linear."""
        return self.omega_t / self.omega_z < self.linear_regime_ratio

    def with_ions(self, n_ions: int) -> "TrapConfig":
        return replace(self, n_ions=n_ions)

    def with_omega_z(self, omega_z: float) -> "TrapConfig":
        return replace(self, omega_z=omega_z)


@dataclass(frozen=True)
class IonArray:
    """
    Solved equilibrium. ``positions_scaled`` is strictly increasing and
    mirror-symmetric about 0; physical positions are ``positions_scaled * d0``.
    """

    positions_scaled: np.ndarray
    d0: float
    residual_gradient_norm: float
    iterations: int = 0
    energy_history: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        z = np.asarray(self.positions_scaled, dtype=float)
        if z.ndim != 1 or z.size == 0:
            raise DomainError("IonArray needs a non-empty 1-D position vector")
        if np.any(np.diff(z) <= 0):
            raise DomainError("IonArray positions must be strictly increasing")
        asym = np.max(np.abs(z + z[::-1]))
        if asym > SYMMETRY_TOLERANCE:
            raise DomainError(f"IonArray positions are not mirror-symmetric (max |z_i + z_(N-1-i)| = {asym:.3e})")
        z = z.copy()
        z.setflags(write=False)
        object.__setattr__(self, "positions_scaled", z)

    @property
    def n_ions(self) -> int:
        return int(self.positions_scaled.size)

    @property
    def positions(self) -> np.ndarray:
        """Physical positions in meters."""
        return self.positions_scaled * self.d0

    def with_length_scale(self, d0: float) -> "IonArray":
        """Same dimensionless structure in a trap with a different d₀."""
        return replace(self, d0=d0)


class SeedStrategy(str, Enum):
    CONTINUUM = "continuum"
    UNIFORM = "uniform"
    GROW = "grow"


PositionsLike = Union[IonArray, ArrayLike]


def as_positions(array: PositionsLike) -> np.ndarray:
    """Scaled positions from an IonArray or a plain sequence."""
    if isinstance(array, IonArray):
        return array.positions_scaled
    return np.asarray(array, dtype=float)


def initial_guess(
    n_ions: int,
    strategy: SeedStrategy = SeedStrategy.CONTINUUM,
    previous: Optional[PositionsLike] = None,
) -> np.ndarray:
    """Starting positions for the solver, sorted ascending."""
    if n_ions < 1:
        raise DomainError(f"n_ions must be at least 1, got {n_ions}")
    if n_ions == 1:
        return np.zeros(1)

    strategy = SeedStrategy(strategy)
    if strategy is SeedStrategy.CONTINUUM:
        return invert_ion_count(n_ions, ContinuumModel.DUBIN_FLUID)
    if strategy is SeedStrategy.UNIFORM:
        length = half_length(n_ions, ContinuumModel.DUBIN_FLUID)
        return np.linspace(-length, length, n_ions)

    if previous is None:
        raise DomainError("The grow strategy needs the solved array for N-1 ions")
    prev = np.sort(as_positions(previous))
    if prev.size != n_ions - 1:
        raise DomainError(f"grow seed expects {n_ions - 1} previous ions, got {prev.size}")
    gap = prev[-1] - prev[-2] if prev.size > 1 else 1.0
    seed = np.append(prev, prev[-1] + gap)
    return seed - seed.mean()


def _pair_matrices(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Signed separations z_i - z_j and 1/|z_i - z_j| with a zero diagonal."""
    diff = z[:, None] - z[None, :]
    with np.errstate(divide="ignore"):
        inv = 1.0 / np.abs(diff)
    np.fill_diagonal(inv, 0.0)
    return diff, inv


def coulomb_energy(z: np.ndarray) -> float:
    _, inv = _pair_matrices(z)
    return 0.5 * float(z @ z) + 0.5 * float(inv.sum())


def energy_gradient(z: np.ndarray) -> np.ndarray:
    diff, inv = _pair_matrices(z)
    return z - np.sum(np.sign(diff) * inv**2, axis=1)


def energy_hessian(z: np.ndarray) -> np.ndarray:
    """Dense Hessian; positive definite at a stable equilibrium."""
    _, inv = _pair_matrices(z)
    cube = 2.0 * inv**3
    hessian = -cube
    hessian[np.diag_indices_from(hessian)] = 1.0 + cube.sum(axis=1)
    return hessian


def _force_scale(z: np.ndarray) -> float:
    """Largest one-sided Coulomb force on any ion, floored at 1."""
    diff, inv = _pair_matrices(z)
    sq = inv**2
    left = np.sum(np.where(diff > 0, sq, 0.0), axis=1)
    right = np.sum(np.where(diff < 0, sq, 0.0), axis=1)
    return max(1.0, float(np.max(np.maximum(left, right))))


def relative_residual(z: np.ndarray) -> float:
    return float(np.max(np.abs(energy_gradient(z)))) / _force_scale(z)


def _newton_direction(z: np.ndarray, grad: np.ndarray) -> np.ndarray:
    try:
        factor = scipy.linalg.cho_factor(energy_hessian(z))
        return -scipy.linalg.cho_solve(factor, grad)
    except scipy.linalg.LinAlgError:
        # not positive definite: steepest descent
        return -grad


def _prepare_seed(seed: ArrayLike, n_ions: int) -> np.ndarray:
    z = np.sort(np.asarray(seed, dtype=float).copy())
    if z.size != n_ions:
        raise DomainError(f"Seed has {z.size} positions for {n_ions} ions")
    if not np.all(np.isfinite(z)):
        raise DomainError("Seed positions must be finite")
    if n_ions > 1 and np.any(np.diff(z) <= 0):
        z = np.sort(z + 1e-6 * np.arange(n_ions))
    return z


def _symmetrize(z: np.ndarray) -> np.ndarray:
    return 0.5 * (z - z[::-1])


def minimize_energy(
    seed: ArrayLike,
    tol: float = 1e-12,
    max_iter: int = 200,
    armijo: float = 1e-4,
    max_backtracks: int = 60,
) -> Tuple[np.ndarray, float, int, Tuple[float, ...]]:
    """
    Newton minimization of the dimensionless energy from ``seed``.

    Returns (positions, relative residual, iterations, energy history).
    A step is rejected if it breaks the ordering; otherwise it is accepted on
    sufficient decrease, or when the energy change sits at rounding level and
    the gradient still shrinks.
    """
    seed_arr = np.asarray(seed, dtype=float)
    n_ions = seed_arr.size
    z = _prepare_seed(seed_arr, n_ions)
    energy = coulomb_energy(z)
    history = [energy]
    grad = energy_gradient(z)
    residual = float(np.max(np.abs(grad))) / _force_scale(z)

    iteration = 0
    while residual > tol:
        if iteration >= max_iter:
            raise ConvergenceError("Equilibrium solver hit the iteration limit", iteration, residual)
        iteration += 1

        direction = _newton_direction(z, grad)
        slope = float(grad @ direction)
        grad_norm = float(np.linalg.norm(grad))
        step = 1.0
        for _ in range(max_backtracks):
            candidate = z + step * direction
            if n_ions == 1 or np.all(np.diff(candidate) > 0):
                cand_energy = coulomb_energy(candidate)
                if cand_energy <= energy + armijo * step * slope:
                    break
                if abs(cand_energy - energy) <= 64.0 * np.finfo(float).eps * abs(energy):
                    cand_grad = energy_gradient(candidate)
                    if np.linalg.norm(cand_grad) < grad_norm:
                        break
            step *= 0.5
        else:
            raise ConvergenceError("Line search stagnated", iteration, residual)

        z = candidate
        energy = cand_energy
        history.append(energy)
        grad = energy_gradient(z)
        residual = float(np.max(np.abs(grad))) / _force_scale(z)
        logger.debug("equilibrium_iteration", iteration=iteration, residual=residual, step=step)

    return z, residual, iteration, tuple(history)


def solve_equilibrium(
    config: TrapConfig,
    seed: Optional[ArrayLike] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    strategy: Optional[SeedStrategy] = None,
    previous: Optional[PositionsLike] = None,
) -> IonArray:
    """Solve the equilibrium positions for ``config``; solver knobs default to the solver config."""
    solver_cfg = settings.get_solver_config()
    tol = float(tol if tol is not None else solver_cfg.get("tol", 1e-12))
    max_iter = int(max_iter if max_iter is not None else solver_cfg.get("max_iter", 200))
    if config.linear_regime_advisory:
        logger.warning(
            "linear_regime_advisory",
            omega_ratio=config.omega_t / config.omega_z,
            threshold=config.linear_regime_ratio,
        )

    if seed is None:
        strategy = SeedStrategy(strategy or solver_cfg.get("seed_strategy", SeedStrategy.CONTINUUM.value))
        seed = initial_guess(config.n_ions, strategy, previous)

    knobs = {
        "tol": tol,
        "max_iter": max_iter,
        "armijo": float(solver_cfg.get("armijo", 1e-4)),
        "max_backtracks": int(solver_cfg.get("max_backtracks", 60)),
    }
    z, _, iterations, history = minimize_energy(seed, **knobs)
    z = _symmetrize(z)
    residual = relative_residual(z)
    if residual > tol:
        # polish from the symmetric point; the returned residual is always <= tol
        z, residual, extra, polish = minimize_energy(z, **knobs)
        iterations += extra
        history += polish[1:]
    logger.info("equilibrium_solved", n_ions=config.n_ions, iterations=iterations, residual=residual)
    return IonArray(
        positions_scaled=z,
        d0=config.d0,
        residual_gradient_norm=residual,
        iterations=iterations,
        energy_history=history,
    )


def longitudinal_mode_frequencies(array: IonArray) -> np.ndarray:
    """Axial normal-mode frequencies in units of ω_z, ascending; the lowest is the COM mode at 1."""
    eigenvalues = scipy.linalg.eigvalsh(energy_hessian(np.asarray(array.positions_scaled)))
    lowest = float(eigenvalues[0])
    if lowest <= 0:
        raise InstabilityError(f"Hessian has a non-positive eigenvalue {lowest:.3e}", eigenvalue=lowest)
    return np.sqrt(eigenvalues)


def spacings(array: PositionsLike) -> Tuple[np.ndarray, float]:
    """Adjacent gaps (length N-1) and the minimum gap s₀, in units of d₀."""
    z = as_positions(array)
    if z.size < 2:
        raise DomainError("Spacings need at least 2 ions")
    gaps = np.diff(z)
    return gaps, float(gaps.min())


def weighted_mean_spacing(array: PositionsLike) -> float:
    """Length-weighted mean spacing Σg²/Σg."""
    gaps, _ = spacings(array)
    return float(np.sum(gaps**2) / np.sum(gaps))


def local_spacings(array: PositionsLike) -> np.ndarray:
    """Per-ion spacing: the mean of the two adjacent gaps, or the single gap at an end."""
    gaps, _ = spacings(array)
    local = np.empty(gaps.size + 1)
    local[0] = gaps[0]
    local[-1] = gaps[-1]
    local[1:-1] = 0.5 * (gaps[:-1] + gaps[1:])
    return local


def central_index(n_ions: int) -> int:
    return n_ions // 2

