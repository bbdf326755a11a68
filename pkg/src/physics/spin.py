# /src/physics/spin.py
"""
Two-level dynamics under a strong longitudinal splitting ω₀ and a weak, slow
transverse field f(t) = (f_x, f_y, 0), in the interaction picture

    i·du₊/dt = e^{+iω₀t}·f₋(t)·u₋,   i·du₋/dt = e^{-iω₀t}·f₊(t)·u₊,   f± = f_x ± i·f_y.

In the adiabatic limit the slow amplitudes pick up opposite phases ∓Φ(t)
with Φ = ∫|f|²/ω₀ dt, and the overlap with free precession is cos Φ.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
import scipy.integrate
import scipy.optimize
from numpy.typing import ArrayLike

from src.core.errors import ConfigError, DomainError, IntegrationAccuracyError, IonIndexError
from src.core.parallel import ordered_map
from src.physics.decoherence import TransitionSpec, coupling_d2, per_ion_rate, thermal_factor
from src.physics.ion_array import IonArray, TrapConfig
from src.physics.sums import s_n_exact
from src.utils.config.settings import settings
from src.utils.resources.logger import logger

NORM_TOLERANCE = 1e-9
MIN_STEPS_PER_PERIOD = 20

# two-point Gauss-Legendre nodes on [0, 1]
_GL_LOW = 0.5 - math.sqrt(3.0) / 6.0
_GL_HIGH = 0.5 + math.sqrt(3.0) / 6.0


@dataclass(frozen=True)
class SpinState:
    """Interaction-picture amplitudes u₊, u₋."""

    amp_plus: complex
    amp_minus: complex

    def __post_init__(self) -> None:
        drift = abs(self.norm_squared - 1.0)
        if drift > NORM_TOLERANCE:
            raise DomainError(f"SpinState is not normalized (| |u|^2 - 1 | = {drift:.3e})")

    @property
    def norm_squared(self) -> float:
        return abs(self.amp_plus) ** 2 + abs(self.amp_minus) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.amp_plus, self.amp_minus], dtype=complex)

    @classmethod
    def from_array(cls, values: ArrayLike) -> "SpinState":
        amps = np.asarray(values, dtype=complex)
        return cls(complex(amps[0]), complex(amps[1]))


EQUAL_SUPERPOSITION = SpinState(1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))


@dataclass(frozen=True)
class DriveComponent:
    """One sinusoid a·cos(Ωt + φ) with a vector amplitude a = (a_x, a_y) in rad/s."""

    amplitude: Tuple[float, float]
    frequency: float = 0.0
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.frequency < 0:
            raise DomainError(f"Drive frequencies must be non-negative, got {self.frequency}")


@dataclass(frozen=True)
class TransverseDrive:
    components: Tuple[DriveComponent, ...] = field(default_factory=tuple)

    @classmethod
    def static(cls, f_x: float, f_y: float = 0.0) -> "TransverseDrive":
        return cls((DriveComponent((f_x, f_y)),))

    @classmethod
    def sinusoid(cls, epsilon: float, omega: float, phase: float = 0.0, axis: str = "x") -> "TransverseDrive":
        amplitude = (epsilon, 0.0) if axis == "x" else (0.0, epsilon)
        return cls((DriveComponent(amplitude, omega, phase),))

    @classmethod
    def circular(cls, epsilon: float, omega: float, sense: int = 1) -> "TransverseDrive":
        """|f| = ε rotating at Ω; sense +1 is counter-clockwise in the x-y plane."""
        return cls((
            DriveComponent((epsilon, 0.0), omega, 0.0),
            DriveComponent((0.0, epsilon), omega, -math.copysign(math.pi / 2.0, sense)),
        ))

    @property
    def is_zero(self) -> bool:
        return all(c.amplitude == (0.0, 0.0) for c in self.components)

    def field(self, t: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        times = np.asarray(t, dtype=float)
        f_x = np.zeros_like(times)
        f_y = np.zeros_like(times)
        for c in self.components:
            wave = np.cos(c.frequency * times + c.phase)
            f_x = f_x + c.amplitude[0] * wave
            f_y = f_y + c.amplitude[1] * wave
        return f_x, f_y

    def derivative(self, t: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        times = np.asarray(t, dtype=float)
        d_x = np.zeros_like(times)
        d_y = np.zeros_like(times)
        for c in self.components:
            wave = -c.frequency * np.sin(c.frequency * times + c.phase)
            d_x = d_x + c.amplitude[0] * wave
            d_y = d_y + c.amplitude[1] * wave
        return d_x, d_y


DriveLike = Union[TransverseDrive, Callable[[float], Tuple[float, float]]]


def _step_propagators(drive: TransverseDrive, omega_0: float, t_start: float, h: float, count: int) -> np.ndarray:
    """
    Fourth-order Magnus propagators for ``count`` consecutive steps of size h.

    With K(t) the Hermitian off-diagonal generator, each step is exp(-iH) with
    H = (h/2)(K₁+K₂) + (√3h²/6)·Im(g₂ḡ₁)·σ_z, exponentiated in closed form.
    """
    starts = t_start + h * np.arange(count)
    t1 = starts + _GL_LOW * h
    t2 = starts + _GL_HIGH * h
    fx1, fy1 = drive.field(t1)
    fx2, fy2 = drive.field(t2)
    g1 = np.exp(1j * omega_0 * t1) * (fx1 - 1j * fy1)
    g2 = np.exp(1j * omega_0 * t2) * (fx2 - 1j * fy2)

    w = 0.5 * h * (g1 + g2)
    hz = (math.sqrt(3.0) * h * h / 6.0) * np.imag(g2 * np.conj(g1))
    theta = np.sqrt(hz**2 + np.abs(w) ** 2)
    cos_t = np.cos(theta)
    sinc_t = np.sinc(theta / math.pi)

    props = np.empty((count, 2, 2), dtype=complex)
    props[:, 0, 0] = cos_t - 1j * sinc_t * hz
    props[:, 0, 1] = -1j * sinc_t * w
    props[:, 1, 0] = -1j * sinc_t * np.conj(w)
    props[:, 1, 1] = cos_t + 1j * sinc_t * hz
    return props


def _ordered_product(props: np.ndarray) -> np.ndarray:
    """U_{n-1}···U_1·U_0 by pairwise reduction."""
    while props.shape[0] > 1:
        if props.shape[0] % 2:
            props = np.concatenate([props, np.eye(2, dtype=complex)[None]], axis=0)
        props = props[1::2] @ props[0::2]
    return props[0]


def _propagate(
    amps: np.ndarray, drive: TransverseDrive, omega_0: float,
    t_start: float, h: float, steps: int, chunk: int,
) -> np.ndarray:
    done = 0
    while done < steps:
        count = min(chunk, steps - done)
        amps = _ordered_product(_step_propagators(drive, omega_0, t_start + done * h, h, count)) @ amps
        done += count
    return amps


def _check_inputs(omega_0: float, t_final: float, steps_per_fast_period: int) -> None:
    if not omega_0 > 0:
        raise DomainError(f"omega_0 must be positive, got {omega_0}")
    if t_final < 0:
        raise DomainError(f"t_final must be non-negative, got {t_final}")
    if steps_per_fast_period < MIN_STEPS_PER_PERIOD:
        raise DomainError(f"steps_per_fast_period must be at least {MIN_STEPS_PER_PERIOD}, got {steps_per_fast_period}")


def evolve_trajectory(
    omega_0: float,
    drive: TransverseDrive,
    state0: SpinState,
    t_final: float,
    n_samples: int = 1,
    steps_per_fast_period: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Amplitudes on ``n_samples + 1`` equally spaced times from 0 to ``t_final``.

    Each sampling interval is split into equal steps no longer than
    2π/(ω₀·steps_per_fast_period).
    """
    spin_cfg = settings.get_spin_config()
    if steps_per_fast_period is None:
        steps_per_fast_period = int(spin_cfg.get("steps_per_fast_period", 50))
    _check_inputs(omega_0, t_final, steps_per_fast_period)
    if n_samples < 1:
        raise DomainError(f"n_samples must be at least 1, got {n_samples}")
    tolerance = float(spin_cfg.get("norm_tolerance", NORM_TOLERANCE))
    chunk = int(spin_cfg.get("chunk_steps", 65536))

    times = np.linspace(0.0, t_final, n_samples + 1)
    amps = np.empty((n_samples + 1, 2), dtype=complex)
    amps[0] = state0.as_array()
    if t_final == 0 or drive.is_zero:
        amps[1:] = amps[0]
        return times, amps

    interval = t_final / n_samples
    h_max = 2.0 * math.pi / (omega_0 * steps_per_fast_period)
    steps = max(1, math.ceil(interval / h_max))
    h = interval / steps
    for k in range(n_samples):
        amps[k + 1] = _propagate(amps[k], drive, omega_0, times[k], h, steps, chunk)

    total_steps = steps * n_samples
    drift = abs(float(np.sum(np.abs(amps[-1]) ** 2)) - state0.norm_squared)
    if drift > tolerance * max(1.0, total_steps / 1e6):
        raise IntegrationAccuracyError(f"Norm not conserved over {total_steps} steps", drift)
    logger.debug("spin_evolved", steps=total_steps, drift=drift)
    return times, amps


def evolve_exact(
    omega_0: float,
    drive: TransverseDrive,
    state0: SpinState,
    t_final: float,
    steps_per_fast_period: Optional[int] = None,
) -> SpinState:
    _, amps = evolve_trajectory(omega_0, drive, state0, t_final, 1, steps_per_fast_period)
    return SpinState.from_array(amps[-1])


def static_field_state(
    omega_0: float, f_x: float, f_y: float, state0: SpinState, t: ArrayLike
) -> np.ndarray:
    """
    Closed-form interaction-picture amplitudes for a constant transverse field.

    The lab Hamiltonian ½ω₀σ_z + f_xσ_x + f_yσ_y has eigenvalues ±E with
    E = ½√(ω₀² + 4|f|²). Returns shape (2,) for scalar t, else (len(t), 2).
    """
    times = np.atleast_1d(np.asarray(t, dtype=float))
    energy = 0.5 * math.sqrt(omega_0**2 + 4.0 * (f_x**2 + f_y**2))
    hamiltonian = np.array([[0.5 * omega_0, f_x - 1j * f_y], [f_x + 1j * f_y, -0.5 * omega_0]])
    u0 = state0.as_array()
    lab = (
        np.cos(energy * times)[:, None] * u0[None, :]
        - 1j * (np.sin(energy * times) / energy)[:, None] * (hamiltonian @ u0)[None, :]
    )
    rotation = np.stack([np.exp(0.5j * omega_0 * times), np.exp(-0.5j * omega_0 * times)], axis=1)
    result = rotation * lab
    return result[0] if np.ndim(t) == 0 else result


def overlap(state0: SpinState, amps: ArrayLike) -> Union[float, np.ndarray]:
    """Re⟨ψ₀(t)|ψ(t)⟩ against free precession, which keeps u constant."""
    values = np.asarray(amps, dtype=complex)
    result = np.real(values @ np.conj(state0.as_array()))
    return float(result) if result.ndim == 0 else result


def dynamical_phase(drive: DriveLike, t: ArrayLike, omega_0: float) -> Union[float, np.ndarray]:
    """Φ(t) = ∫₀ᵗ |f|²/ω₀; closed form for sinusoidal drives, quadrature for callables."""
    if not omega_0 > 0:
        raise DomainError(f"omega_0 must be positive, got {omega_0}")
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise DomainError("dynamical_phase needs t >= 0")

    if isinstance(drive, TransverseDrive):
        phi = np.zeros_like(times)
        for ck in drive.components:
            for cl in drive.components:
                weight = ck.amplitude[0] * cl.amplitude[0] + ck.amplitude[1] * cl.amplitude[1]
                if weight == 0.0:
                    continue
                phi = phi + 0.5 * weight * (
                    _cosine_integral(ck.frequency - cl.frequency, ck.phase - cl.phase, times)
                    + _cosine_integral(ck.frequency + cl.frequency, ck.phase + cl.phase, times)
                )
    else:
        def intensity(s: float) -> float:
            f_x, f_y = drive(s)
            return f_x * f_x + f_y * f_y

        phi = np.vectorize(lambda s: scipy.integrate.quad(intensity, 0.0, s, limit=200)[0])(times)

    phi = phi / omega_0
    return float(phi) if times.ndim == 0 else phi


def _cosine_integral(nu: float, psi: float, t: np.ndarray) -> np.ndarray:
    """∫₀ᵗ cos(νs + ψ) ds."""
    if nu == 0.0:
        return t * math.cos(psi)
    return (np.sin(nu * t + psi) - math.sin(psi)) / nu


def phase_time(drive: TransverseDrive, omega_0: float, target: float = math.pi) -> float:
    """Earliest t with Φ(t) = target; Φ is non-decreasing, so a doubling bracket suffices."""
    if target <= 0:
        return 0.0
    if drive.is_zero:
        raise DomainError("A zero drive never accumulates phase")

    def excess(t: float) -> float:
        return float(dynamical_phase(drive, t, omega_0)) - target

    upper = 1.0 / omega_0
    while excess(upper) < 0:
        upper *= 2.0
    return float(scipy.optimize.brentq(excess, 0.0, upper, xtol=1e-14 * upper))


def ideal_overlap(phi: ArrayLike) -> Union[float, np.ndarray]:
    result = np.cos(np.asarray(phi, dtype=float))
    return float(result) if result.ndim == 0 else result


def adiabatic_amplitudes(state0: SpinState, phi: float) -> SpinState:
    """Slow amplitudes β±(t) = e^{∓iΦ}·β±(0)."""
    return SpinState(
        state0.amp_plus * complex(math.cos(phi), -math.sin(phi)),
        state0.amp_minus * complex(math.cos(phi), math.sin(phi)),
    )


@dataclass(frozen=True)
class AdiabaticityDiagnostics:
    field_ratio: float  # max|f|/ω₀
    rate_ratio: float  # max|ḟ|/(max|f|·ω₀)
    breakdown_time: float  # ω₀³/max|ḟ|²
    flag_threshold: float = 0.1

    @property
    def flagged(self) -> bool:
        return self.field_ratio > self.flag_threshold or self.rate_ratio > self.flag_threshold


def adiabaticity_check(
    drive: TransverseDrive, omega_0: float, samples_per_period: int = 4096
) -> AdiabaticityDiagnostics:
    """Small parameters of the adiabatic expansion, sampled over one period of the slowest component."""
    if not omega_0 > 0:
        raise DomainError(f"omega_0 must be positive, got {omega_0}")
    threshold = float(settings.get_spin_config().get("adiabatic_flag", 0.1))
    if drive.is_zero:
        return AdiabaticityDiagnostics(0.0, 0.0, math.inf, threshold)

    frequencies = [c.frequency for c in drive.components if c.frequency > 0]
    if frequencies:
        slowest, fastest = min(frequencies), max(frequencies)
        points = samples_per_period * min(256, math.ceil(fastest / slowest))
        times = np.arange(points) * (2.0 * math.pi / slowest) / points
    else:
        times = np.zeros(1)

    f_x, f_y = drive.field(times)
    d_x, d_y = drive.derivative(times)
    max_field = float(np.max(np.hypot(f_x, f_y)))
    max_rate = float(np.max(np.hypot(d_x, d_y)))
    diagnostics = AdiabaticityDiagnostics(
        field_ratio=max_field / omega_0,
        rate_ratio=max_rate / (max_field * omega_0) if max_field > 0 else 0.0,
        breakdown_time=omega_0**3 / max_rate**2 if max_rate > 0 else math.inf,
        flag_threshold=threshold,
    )
    if diagnostics.flagged:
        logger.warning(
            "adiabaticity_flag",
            field_ratio=diagnostics.field_ratio,
            rate_ratio=diagnostics.rate_ratio,
        )
    return diagnostics


def _neighbour_couplings(array: IonArray, config: TrapConfig, spec: TransitionSpec, ion_index: int) -> np.ndarray:
    """d_a·q/|z_i - z_j|^{a+2} for every j (zero for j = i), in SI."""
    if not 0 <= ion_index < array.n_ions:
        raise IonIndexError(f"Ion index {ion_index} outside 0..{array.n_ions - 1}")
    z = array.positions_scaled * config.d0
    sep = np.abs(z - z[ion_index])
    sep[ion_index] = np.inf
    strength = math.sqrt(coupling_d2(spec, config.constants) * config.q2)
    return strength / sep ** (spec.multipole_a + 2)


def mode_drive(array: IonArray, config: TrapConfig, spec: TransitionSpec, ion_index: int) -> TransverseDrive:
    """Sinusoid at ω_t with the rms transverse field ion ``ion_index`` sees from its neighbours' motion."""
    if array.n_ions < 2:
        raise DomainError("A mode drive needs at least 2 ions")
    if not 0 <= ion_index < array.n_ions:
        raise IonIndexError(f"Ion index {ion_index} outside 0..{array.n_ions - 1}")
    hbar = config.constants.hbar
    variance = hbar / (config.mass * config.omega_t) * thermal_factor(config)
    n = spec.sum_power
    delta_v_rms = math.sqrt(
        coupling_d2(spec, config.constants) * config.q2 * variance
        * s_n_exact(array, ion_index, n) / config.d0**n
    )
    return TransverseDrive.sinusoid(math.sqrt(2.0) * delta_v_rms / (2.0 * hbar), config.omega_t)


@dataclass(frozen=True)
class MonteCarloResult:
    times: np.ndarray
    mean_overlap: np.ndarray
    predicted_cos_phi: np.ndarray
    mean_phase: np.ndarray
    tau_i: float
    pi_time: Optional[float]
    max_phase_rate: float
    trials: int
    seed: int


def _pi_crossing(times: np.ndarray, phase: np.ndarray) -> Optional[float]:
    """First time the relative phase 2Φ̄ reaches π, linearly interpolated."""
    doubled = 2.0 * phase
    above = np.nonzero(doubled >= math.pi)[0]
    if above.size == 0:
        return None
    k = int(above[0])
    if k == 0:
        return float(times[0])
    t0, t1 = times[k - 1], times[k]
    p0, p1 = doubled[k - 1], doubled[k]
    return float(t0 + (math.pi - p0) * (t1 - t0) / (p1 - p0))


def monte_carlo_dephasing(
    array: IonArray,
    config: TrapConfig,
    spec: TransitionSpec,
    ion_index: int,
    trials: int,
    seed: Optional[int],
    n_times: Optional[int] = None,
    horizon: Optional[float] = None,
    amplitude_scale: float = 1.0,
    threads: Optional[int] = None,
) -> MonteCarloResult:
    """
    Classical stochastic realization of the vibrational dephasing of one ion.

    Every neighbour oscillates as u_j = A_j·cos(ω_t·t + φ_j) with A_j Gaussian
    of variance 2ħ/(mω_t) (so the time average of u_j² is ħ/(mω_t)) and φ_j
    uniform. The resulting δV_i(t) is a single sinusoid at ω_t, applied along
    x as f = δV_i/2ħ, and Φ follows in closed form. Trial k draws from
    SeedSequence(seed, spawn_key=(k,)), so the output is independent of the
    thread count.
    """
    if seed is None:
        raise ConfigError("monte_carlo_dephasing needs an explicit seed")
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    mc_cfg = settings.get_monte_carlo_config()
    if n_times is None:
        n_times = int(mc_cfg.get("n_times", 201))
    if horizon is None:
        horizon = float(mc_cfg.get("horizon_tau", 3.0))
    if n_times < 2:
        raise DomainError(f"n_times must be at least 2, got {n_times}")
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")

    couplings = _neighbour_couplings(array, config, spec, ion_index)
    hbar = config.constants.hbar
    sigma = amplitude_scale * math.sqrt(2.0 * hbar / (config.mass * config.omega_t) * thermal_factor(config))
    tau_i = 1.0 / per_ion_rate(ion_index, array, spec, config)
    times = np.linspace(0.0, horizon * tau_i, n_times)

    def run_trial(trial: int) -> Tuple[np.ndarray, float]:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))
        amplitudes = rng.normal(0.0, 1.0, size=couplings.size) * sigma
        phases = rng.uniform(0.0, 2.0 * math.pi, size=couplings.size)
        z = np.sum(couplings * amplitudes * np.exp(1j * phases))
        b = abs(z) / (2.0 * hbar)
        drive = TransverseDrive.sinusoid(b, config.omega_t, phase=float(np.angle(z)))
        return dynamical_phase(drive, times, spec.omega_0), b * b / spec.omega_0

    outcomes = ordered_map(run_trial, range(trials), threads)
    phases = np.stack([phi for phi, _ in outcomes])
    max_phase_rate = max(rate for _, rate in outcomes)

    mean_b2 = sigma**2 * float(np.sum(couplings**2)) / (4.0 * hbar**2)
    predicted_phase = mean_b2 / (2.0 * spec.omega_0) * times
    mean_phase = phases.mean(axis=0)
    result = MonteCarloResult(
        times=times,
        mean_overlap=np.cos(phases).mean(axis=0),
        predicted_cos_phi=np.cos(predicted_phase),
        mean_phase=mean_phase,
        tau_i=tau_i,
        pi_time=_pi_crossing(times, mean_phase),
        max_phase_rate=max_phase_rate,
        trials=trials,
        seed=seed,
    )
    logger.info("monte_carlo_dephasing", trials=trials, seed=seed, tau_i=tau_i, pi_time=result.pi_time)
    return result


@dataclass(frozen=True)
class BerryPhaseResidual:
    times: np.ndarray
    residual: np.ndarray
    rate: float


def berry_phase_residual(
    omega_0: float,
    epsilon: float,
    omega_drive: float,
    t_final: float,
    sense: int = 1,
    n_samples: int = 400,
    steps_per_fast_period: Optional[int] = None,
) -> BerryPhaseResidual:
    """
    Exact minus dynamical phase for a circularly rotating field, with its
    fitted drift rate. Starts from the equal superposition.
    """
    drive = TransverseDrive.circular(epsilon, omega_drive, sense)
    times, amps = evolve_trajectory(
        omega_0, drive, EQUAL_SUPERPOSITION, t_final, n_samples, steps_per_fast_period
    )
    measured = 0.5 * np.unwrap(np.angle(amps[:, 1] * np.conj(amps[:, 0])))
    residual = measured - dynamical_phase(drive, times, omega_0)
    rate = float(np.polyfit(times, residual, 1)[0])
    return BerryPhaseResidual(times=times, residual=residual, rate=rate)
