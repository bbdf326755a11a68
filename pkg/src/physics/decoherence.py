# /src/physics/decoherence.py
"""
Vibrational dephasing against spontaneous emission.

Each ion's internal splitting is shifted at second order by the field
gradient its neighbours' zero-point motion produces. The per-ion π-phase
rates combine in quadrature into τ_vib⁻¹; the radiative window is 2τ_s/N.
All quantities are SI unless the caller passes scaled constants.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from src.core.errors import DomainError, IonIndexError
from src.core.parallel import ordered_map
from src.physics.constants import CODATA_2018, PhysicalConstants
from src.physics.continuum import ContinuumModel, dubin_log, min_spacing
from src.physics.ion_array import IonArray, TrapConfig, solve_equilibrium, spacings
from src.physics.sums import TSumForm, s_n_all, s_n_exact, t_n_continuum, zeta
from src.utils.config.settings import settings
from src.utils.resources.logger import logger


@dataclass(frozen=True)
class TransitionSpec:
    """Optical transition: multipole order a (1 = E1, 2 = E2), ω₀ in rad/s, τ_s in s."""

    multipole_a: int
    omega_0: float
    tau_s: float
    coupling_constant: float = 1.0

    def __post_init__(self) -> None:
        if self.multipole_a not in (1, 2):
            raise DomainError(f"multipole_a must be 1 or 2, got {self.multipole_a}")
        if not (self.omega_0 > 0 and self.tau_s > 0 and self.coupling_constant > 0):
            raise DomainError(
                "omega_0, tau_s and coupling_constant must be positive "
                f"(got {self.omega_0}, {self.tau_s}, {self.coupling_constant})"
            )

    @property
    def sum_power(self) -> int:
        """Power 2a+4 of the inverse-distance sum entering the rate."""
        return 2 * self.multipole_a + 4

    def k0(self, constants: PhysicalConstants = CODATA_2018) -> float:
        return self.omega_0 / constants.c

    def wavelength(self, constants: PhysicalConstants = CODATA_2018) -> float:
        return 2.0 * math.pi / self.k0(constants)


BA138_TRANSITION = TransitionSpec(multipole_a=2, omega_0=2.0 * math.pi * 1.7e14, tau_s=35.0)


class ContinuumPath(str, Enum):
    CLOSED_FORM_9 = "closed-form-9"
    CLOSED_FORM_11 = "closed-form-11"
    SUM_PIPELINE = "sum-pipeline"


class ScalingRegime(str, Enum):
    FIXED_S0 = "fixed-s0"
    FIXED_S0_SELF_CONSISTENT = "fixed-s0-consistent"
    FIXED_OMEGA_Z = "fixed-omega-z"


class SweepPath(str, Enum):
    EXACT = "exact"
    CONTINUUM = "continuum"


def coupling_d2(spec: TransitionSpec, constants: PhysicalConstants = CODATA_2018) -> float:
    """Squared a-pole matrix element, coupling·ħ/(τ_s k₀^{2a+1})."""
    return spec.coupling_constant * constants.hbar / (spec.tau_s * spec.k0(constants) ** (2 * spec.multipole_a + 1))


def thermal_factor(config: TrapConfig) -> float:
    """coth(ħω_t/2k_BT); exactly 1 at T = 0."""
    if config.temperature < 0:
        raise DomainError(f"Temperature must be non-negative, got {config.temperature}")
    if config.temperature == 0:
        return 1.0
    x = config.constants.hbar * config.omega_t / (2.0 * config.constants.k_B * config.temperature)
    return 1.0 / math.tanh(x)


def rate_prefactor(spec: TransitionSpec, config: TrapConfig) -> float:
    """q²d_a²/(2πħmω₀ω_t) times the thermal factor, in s⁻¹·m^{2a+4}."""
    constants = config.constants
    return (
        config.q2 * coupling_d2(spec, constants)
        / (2.0 * math.pi * constants.hbar * config.mass * spec.omega_0 * config.omega_t)
        * thermal_factor(config)
    )


def _check_array(array: IonArray, config: TrapConfig) -> None:
    if array.n_ions < 2:
        raise DomainError("Vibrational rates need at least 2 ions")
    if array.n_ions != config.n_ions:
        raise DomainError(f"Array has {array.n_ions} ions but the trap config has {config.n_ions}")


def per_ion_rate(i: int, array: IonArray, spec: TransitionSpec, config: TrapConfig) -> float:
    """τ_i⁻¹ for ion ``i``; positions come from the array, the length scale from the config."""
    _check_array(array, config)
    if not 0 <= i < array.n_ions:
        raise IonIndexError(f"Ion index {i} outside 0..{array.n_ions - 1}")
    n = spec.sum_power
    return rate_prefactor(spec, config) * s_n_exact(array, i, n) / config.d0**n


def per_ion_rates(array: IonArray, spec: TransitionSpec, config: TrapConfig) -> np.ndarray:
    _check_array(array, config)
    n = spec.sum_power
    return rate_prefactor(spec, config) * s_n_all(array, n) / config.d0**n


def combine_rates(rates: ArrayLike) -> float:
    """Quadrature combination √Σr²."""
    values = np.asarray(rates, dtype=float)
    return math.sqrt(math.fsum(values**2))


def total_vib_rate(array: IonArray, spec: TransitionSpec, config: TrapConfig) -> float:
    return combine_rates(per_ion_rates(array, spec, config))


def naive_vib_rate(array: IonArray, spec: TransitionSpec, config: TrapConfig) -> float:
    """Linear sum Σ_i τ_i⁻¹, the bound the quadrature rule improves on."""
    return math.fsum(per_ion_rates(array, spec, config))


def vib_rate_continuum(
    n_ions: int,
    spec: TransitionSpec,
    config: TrapConfig,
    model: ContinuumModel = ContinuumModel.DUBIN_FLUID,
    path: ContinuumPath = ContinuumPath.SUM_PIPELINE,
) -> float:
    """τ_vib⁻¹ from the continuum structure laws along one of three equivalent-in-spirit routes."""
    path = ContinuumPath(path)
    constants = config.constants
    d0 = config.d0
    s0 = min_spacing(n_ions, model) * d0
    a = spec.multipole_a
    n = spec.sum_power

    if path is ContinuumPath.CLOSED_FORM_9:
        return math.sqrt(n_ions) * rate_prefactor(spec, config) / s0**n

    if path is ContinuumPath.CLOSED_FORM_11:
        k0 = spec.k0(constants)
        return (
            math.sqrt(n_ions) / spec.tau_s
            * (d0 / s0) ** 3
            * config.omega_z**2 / (spec.omega_0 * config.omega_t)
            / (k0 * s0) ** (2 * a + 1)
            * spec.coupling_constant / (2.0 * math.pi)
            * thermal_factor(config)
        )

    t_scaled = t_n_continuum(n_ions, 2 * n, model, TSumForm.ASYMPTOTIC)
    return rate_prefactor(spec, config) * 2.0 * zeta(n) * math.sqrt(t_scaled) / d0**n


def radiative_window(n_ions: int, tau_s: float, factor: Optional[float] = None) -> float:
    """τ_rad = factor·τ_s/N with factor 2 by default."""
    if n_ions < 1:
        raise DomainError(f"n_ions must be at least 1, got {n_ions}")
    if not tau_s > 0:
        raise DomainError(f"tau_s must be positive, got {tau_s}")
    if factor is None:
        factor = float(settings.get_decoherence_config().get("radiative_factor", 2.0))
    return factor * tau_s / n_ions


def combined_decoherence(tau_vib: float, tau_rad: float) -> float:
    """Harmonic combination (τ_vib⁻¹ + τ_rad⁻¹)⁻¹; an infinite time drops out."""
    if not (tau_vib > 0 and tau_rad > 0):
        raise DomainError(f"Decoherence times must be positive (tau_vib={tau_vib}, tau_rad={tau_rad})")
    return 1.0 / (1.0 / tau_vib + 1.0 / tau_rad)


def fidelity_profile(
    t: ArrayLike, per_ion_rates: Sequence[float]
) -> Tuple[Union[float, np.ndarray], Union[float, np.ndarray]]:
    """Product Π cos²(t/τ_i) and its Gaussian form exp(-t²/τ_vib²)."""
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise DomainError("Fidelity profile needs t >= 0")
    rates = np.asarray(per_ion_rates, dtype=float)
    exact = np.prod(np.cos(np.multiply.outer(times, rates)) ** 2, axis=-1)
    gaussian = np.exp(-(times**2) * math.fsum(rates**2))
    if times.ndim == 0:
        return float(exact), float(gaussian)
    return exact, gaussian


@dataclass(frozen=True)
class RadiativeValidity:
    """The independent-emitter estimate assumes spacings beyond the transition wavelength."""

    wavelength: float
    spacing: float

    @property
    def ok(self) -> bool:
        return self.spacing > self.wavelength


def radiative_validity(
    s0_m: float, spec: TransitionSpec, constants: PhysicalConstants = CODATA_2018
) -> RadiativeValidity:
    validity = RadiativeValidity(wavelength=spec.wavelength(constants), spacing=s0_m)
    if not validity.ok:
        logger.warning("radiative_estimate_outside_validity", spacing=s0_m, wavelength=validity.wavelength)
    return validity


@dataclass(frozen=True)
class DecoherenceReport:
    n_ions: int
    model: ContinuumModel
    per_ion_rates: Tuple[float, ...]
    tau_vib: float
    tau_rad: float
    t_dec: float
    naive_rate: float
    d0: float
    s0_exact: float
    s0_model: float
    continuum_rates: Dict[str, float] = field(default_factory=dict)
    radiative: Optional[RadiativeValidity] = None

    @property
    def tau_vib_inv(self) -> float:
        return 1.0 / self.tau_vib

    @property
    def tau_rad_inv(self) -> float:
        return 1.0 / self.tau_rad


def decoherence_report(
    array: IonArray,
    spec: TransitionSpec,
    config: TrapConfig,
    model: ContinuumModel = ContinuumModel.DUBIN_FLUID,
    radiative_factor: Optional[float] = None,
) -> DecoherenceReport:
    rates = per_ion_rates(array, spec, config)
    total = combine_rates(rates)
    tau_vib = 1.0 / total if total > 0 else math.inf
    tau_rad = radiative_window(config.n_ions, spec.tau_s, radiative_factor)
    _, s0_scaled = spacings(array)

    continuum: Dict[str, float] = {}
    for path in ContinuumPath:
        if path is ContinuumPath.SUM_PIPELINE and not model.has_profile:
            continue
        continuum[path.value] = vib_rate_continuum(config.n_ions, spec, config, model, path)

    report = DecoherenceReport(
        n_ions=config.n_ions,
        model=model,
        per_ion_rates=tuple(float(r) for r in rates),
        tau_vib=tau_vib,
        tau_rad=tau_rad,
        t_dec=combined_decoherence(tau_vib, tau_rad),
        naive_rate=math.fsum(rates),
        d0=config.d0,
        s0_exact=s0_scaled * config.d0,
        s0_model=min_spacing(config.n_ions, model) * config.d0,
        continuum_rates=continuum,
        radiative=radiative_validity(s0_scaled * config.d0, spec, config.constants),
    )
    logger.info(
        "decoherence_report",
        n_ions=report.n_ions,
        tau_vib=report.tau_vib,
        tau_rad=report.tau_rad,
        t_dec=report.t_dec,
    )
    return report


def dominance_crossover(
    spec: TransitionSpec,
    config: TrapConfig,
    model: ContinuumModel = ContinuumModel.DUBIN_FLUID,
    n_max: Optional[float] = None,
    radiative_factor: Optional[float] = None,
) -> Optional[int]:
    """
    Smallest N at fixed trap frequencies for which τ_vib⁻¹ > τ_rad⁻¹ on the
    continuum path, or None below ``n_max``.
    """
    if n_max is None:
        n_max = float(settings.get_decoherence_config().get("crossover_n_max", 1e8))
    path = ContinuumPath.SUM_PIPELINE if model.has_profile else ContinuumPath.CLOSED_FORM_9

    def vib_dominates(n: int) -> bool:
        vib = vib_rate_continuum(n, spec, config.with_ions(n), model, path)
        return vib * radiative_window(n, spec.tau_s, radiative_factor) > 1.0

    low = 2
    if vib_dominates(low):
        return low
    high = low
    while not vib_dominates(high):
        low = high
        high *= 2
        if high > n_max:
            return None
    while high - low > 1:
        mid = (low + high) // 2
        if vib_dominates(mid):
            high = mid
        else:
            low = mid
    return high


@dataclass(frozen=True)
class SweepRow:
    n_ions: int
    omega_z: float
    s0: float
    tau_vib_inv: float
    tau_rad_inv: float
    t_dec: float


@dataclass(frozen=True)
class SweepResult:
    regime: ScalingRegime
    path: SweepPath
    model: ContinuumModel
    rows: Tuple[SweepRow, ...]
    exponent: Optional[float]
    intercept: Optional[float]
    fit_residual: Optional[float]
    predicted_exponent: float


def predicted_exponent(regime: ScalingRegime, multipole_a: int) -> float:
    if regime is ScalingRegime.FIXED_S0:
        return 2.5
    if regime is ScalingRegime.FIXED_S0_SELF_CONSISTENT:
        return 0.5
    return (8 * multipole_a + 19) / 6.0


def log_correction(regime: ScalingRegime, n_ions: int, multipole_a: int) -> float:
    """Factor that removes the logarithm from the predicted power law before fitting."""
    if regime is ScalingRegime.FIXED_S0:
        return math.log(n_ions)
    if regime is ScalingRegime.FIXED_S0_SELF_CONSISTENT:
        return 1.0
    return dubin_log(n_ions) ** ((2 * multipole_a + 4) / 3.0)


def fit_exponent(n_values: Sequence[int], rates: Sequence[float], corrections: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares slope, intercept and rms residual of log(rate·correction) against log N."""
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.log(np.asarray(rates, dtype=float) * np.asarray(corrections, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), residual


def scaling_sweep(
    regime: ScalingRegime,
    n_list: Sequence[int],
    spec: TransitionSpec,
    base_config: TrapConfig,
    path: SweepPath = SweepPath.CONTINUUM,
    model: ContinuumModel = ContinuumModel.DUBIN_FLUID,
    exact_n_cap: Optional[int] = None,
    radiative_factor: Optional[float] = None,
    threads: Optional[int] = None,
) -> SweepResult:
    """
    τ_vib⁻¹ over a list of ion numbers with a fitted power-law exponent.

    FIXED_OMEGA_Z keeps the trap. Both fixed-s₀ regimes retune ω_z per N so
    the model s₀ stays at the value of ``base_config``. FIXED_S0 then scales
    the rate by (ω_z,base/ω_z)², the bookkeeping behind the N^{5/2}/ln N law;
    FIXED_S0_SELF_CONSISTENT uses the retuned trap throughout.
    """
    regime = ScalingRegime(regime)
    path = SweepPath(path)
    n_values: List[int] = [int(n) for n in n_list]
    if not n_values:
        raise DomainError("scaling_sweep needs at least one ion number")
    if any(n < 10 for n in n_values):
        raise DomainError("scaling_sweep needs every N >= 10")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise DomainError("scaling_sweep needs n_list strictly ascending")
    if exact_n_cap is None:
        exact_n_cap = int(settings.get_decoherence_config().get("exact_n_cap", 2000))
    if path is SweepPath.EXACT and n_values[-1] > exact_n_cap:
        raise DomainError(
            f"Exact-path sweep refused above N={exact_n_cap} (requested {n_values[-1]}); "
            "use the continuum path or raise decoherence.exact_n_cap"
        )
    continuum_path = ContinuumPath.SUM_PIPELINE if model.has_profile else ContinuumPath.CLOSED_FORM_9

    base_s0 = min_spacing(base_config.n_ions, model) * base_config.d0 if base_config.n_ions >= 2 else None

    def trap_for(n: int) -> TrapConfig:
        config = base_config.with_ions(n)
        if regime is ScalingRegime.FIXED_OMEGA_Z:
            return config
        if base_s0 is None:
            raise DomainError("Fixed-s0 sweeps need a base config with at least 2 ions")
        d0 = base_s0 / min_spacing(n, model)
        return config.with_omega_z(math.sqrt(config.q2 / (config.mass * d0**3)))

    def point(n: int) -> SweepRow:
        config = trap_for(n)
        if path is SweepPath.EXACT:
            array = solve_equilibrium(config)
            rate = total_vib_rate(array, spec, config)
            s0 = spacings(array)[1] * config.d0
        else:
            rate = vib_rate_continuum(n, spec, config, model, continuum_path)
            s0 = min_spacing(n, model) * config.d0
        if regime is ScalingRegime.FIXED_S0:
            rate *= (base_config.omega_z / config.omega_z) ** 2
        tau_rad = radiative_window(n, spec.tau_s, radiative_factor)
        return SweepRow(
            n_ions=n,
            omega_z=config.omega_z,
            s0=s0,
            tau_vib_inv=rate,
            tau_rad_inv=1.0 / tau_rad,
            t_dec=combined_decoherence(1.0 / rate if rate > 0 else math.inf, tau_rad),
        )

    rows = tuple(ordered_map(point, n_values, threads))
    exponent = intercept = residual = None
    if len(rows) >= 2:
        exponent, intercept, residual = fit_exponent(
            [r.n_ions for r in rows],
            [r.tau_vib_inv for r in rows],
            [log_correction(regime, r.n_ions, spec.multipole_a) for r in rows],
        )
    logger.info("scaling_sweep", regime=regime.value, path=path.value, points=len(rows), exponent=exponent)
    return SweepResult(
        regime=regime,
        path=path,
        model=model,
        rows=rows,
        exponent=exponent,
        intercept=intercept,
        fit_residual=residual,
        predicted_exponent=predicted_exponent(regime, spec.multipole_a),
    )
