# /src/cli/handlers.py

import math
from typing import Callable, Dict

import numpy as np

from src.cli.models import DriveShape, RunConfig
from src.physics import continuum, decoherence, ion_array, spin, sums
from src.physics.continuum import ContinuumModel
from src.physics.decoherence import ScalingRegime, SweepPath
from src.physics.ion_array import IonArray, TrapConfig
from src.utils.config.settings import settings
from src.utils.resources.logger import logger
from src.utils.resources.output import Table

DEFAULT_SWEEP_N = {
    SweepPath.CONTINUUM: [200, 300, 500, 700, 1000, 1500, 2000],
    SweepPath.EXACT: [100, 200, 400, 600, 800],
}


class CommandHandler:
    """One method per subcommand; each takes a validated RunConfig and returns a Table."""

    def __init__(self):
        self.linear_regime_ratio = float(settings.get("trap.linear_regime_ratio", 10.0))

    def _trap(self, run: RunConfig) -> TrapConfig:
        return run.trap.to_trap_config(self.linear_regime_ratio)

    def _solve(self, run: RunConfig) -> IonArray:
        return ion_array.solve_equilibrium(self._trap(run))

    def dispatch(self, run: RunConfig) -> Table:
        commands: Dict[str, Callable[[RunConfig], Table]] = {
            "positions": self.positions,
            "modes": self.modes,
            "continuum": self.continuum,
            "sums": self.sums,
            "decohere": self.decohere,
            "sweep": self.sweep,
            "spin-verify": self.spin_verify,
            "mc-dephase": self.mc_dephase,
        }
        logger.info("command_started", command=run.command, n_ions=run.trap.n_ions)
        return commands[run.command](run)

    def positions(self, run: RunConfig) -> Table:
        config = self._trap(run)
        array = ion_array.solve_equilibrium(config)
        table = Table(columns=[("index", "-"), ("z_scaled", "d0"), ("z", "m")])
        for i, (z_hat, z_m) in enumerate(zip(array.positions_scaled, array.positions)):
            table.add_row(i, z_hat, z_m)
        table.summary = {
            "d0_m": config.d0,
            "iterations": array.iterations,
            "residual": array.residual_gradient_norm,
            "linear_regime_advisory": config.linear_regime_advisory,
        }
        if array.n_ions >= 2:
            table.summary["s0_scaled"] = ion_array.spacings(array)[1]
            table.summary["weighted_mean_spacing_scaled"] = ion_array.weighted_mean_spacing(array)
        return table

    def modes(self, run: RunConfig) -> Table:
        config = self._trap(run)
        frequencies = ion_array.longitudinal_mode_frequencies(ion_array.solve_equilibrium(config))
        table = Table(columns=[("index", "-"), ("omega_scaled", "omega_z"), ("omega", "rad/s")])
        for i, w in enumerate(frequencies):
            table.add_row(i, w, w * config.omega_z)
        table.summary = {"com_mode_scaled": float(frequencies[0]), "omega_z": config.omega_z}
        return table

    def continuum(self, run: RunConfig) -> Table:
        n = run.trap.n_ions
        model = run.model
        length = continuum.half_length(n, model)
        x = np.linspace(-1.0, 1.0, run.points + 2)[1:-1]
        z = length * x
        profile = continuum.spacing_profile(z, n, model)
        counts = continuum.ion_count_profile(z, n, model)
        table = Table(columns=[("z", "d0"), ("s", "d0"), ("n", "-")])
        for row in zip(z, profile, counts):
            table.add_row(*row)

        d0 = self._trap(run).d0
        table.summary = {
            "model": model.value,
            "half_length_scaled": length,
            "d0_m": d0,
            "s0_scaled": {m.value: continuum.min_spacing(n, m) for m in ContinuumModel},
            "s0_m": {m.value: continuum.min_spacing(n, m) * d0 for m in ContinuumModel},
            "s0_dubin_display_scaled": continuum.dubin_min_spacing_display(n),
            "end_spacing_simple_scaled": continuum.end_spacing(n, ContinuumModel.SIMPLE_BALANCE),
        }
        return table

    def sums(self, run: RunConfig) -> Table:
        array = self._solve(run)
        center = run.central_ion()
        table = Table(columns=[
            ("n", "-"),
            ("t_exact", "d0^-n"),
            ("t_integral", "d0^-n"),
            ("t_asymptotic", "d0^-n"),
            ("t_integral_rel_err", "-"),
            ("t_asymptotic_rel_err", "-"),
            ("s_exact", "d0^-n"),
            ("s_continuum", "d0^-n"),
            ("s_rel_err", "-"),
        ])
        for p in run.powers:
            integral = sums.compare_t_n(array, p, run.model, sums.TSumForm.INTEGRAL)
            asymptotic = sums.compare_t_n(array, p, run.model, sums.TSumForm.ASYMPTOTIC)
            s_exact = s_cont = s_err = None
            if p >= 2:
                field_sum = sums.compare_s_n(array, center, p)
                s_exact, s_cont, s_err = field_sum.exact, field_sum.continuum, field_sum.relative_error
            table.add_row(
                p, integral.exact, integral.continuum, asymptotic.continuum,
                integral.relative_error, asymptotic.relative_error, s_exact, s_cont, s_err,
            )
        table.summary = {"ion": center, "model": run.model.value}
        return table

    def decohere(self, run: RunConfig) -> Table:
        config = self._trap(run)
        spec = run.transition.to_spec()
        array = ion_array.solve_equilibrium(config)
        report = decoherence.decoherence_report(array, spec, config, run.model)

        table = Table(columns=[("index", "-"), ("z", "m"), ("rate", "1/s")])
        for i, (z_m, rate) in enumerate(zip(array.positions, report.per_ion_rates)):
            table.add_row(i, z_m, rate)

        center = run.central_ion()
        drive = spin.mode_drive(array, config, spec, center)
        adiabatic = spin.adiabaticity_check(drive, spec.omega_0)
        table.summary = {
            "n_ions": report.n_ions,
            "model": report.model.value,
            "d0_m": report.d0,
            "s0_exact_m": report.s0_exact,
            "s0_model_m": report.s0_model,
            "tau_vib_s": report.tau_vib,
            "tau_rad_s": report.tau_rad,
            "t_dec_s": report.t_dec,
            "tau_vib_over_tau_s": report.tau_vib / spec.tau_s,
            "tau_vib_over_tau_rad": report.tau_vib / report.tau_rad,
            "naive_rate_per_s": report.naive_rate,
            "continuum_rates_per_s": report.continuum_rates,
            "wavelength_m": report.radiative.wavelength if report.radiative else None,
            "radiative_estimate_valid": report.radiative.ok if report.radiative else None,
            "breakdown_time_s": adiabatic.breakdown_time,
            "adiabaticity_flagged": adiabatic.flagged,
            "dominance_crossover_n": decoherence.dominance_crossover(spec, config, run.model),
        }
        return table

    def sweep(self, run: RunConfig) -> Table:
        n_list = run.n_list or DEFAULT_SWEEP_N[run.path]
        result = decoherence.scaling_sweep(
            run.regime,
            n_list,
            run.transition.to_spec(),
            self._trap(run),
            path=run.path,
            model=run.model,
            threads=run.threads,
        )
        table = Table(columns=[
            ("N", "-"), ("omega_z", "rad/s"), ("s0", "m"),
            ("tau_vib_inv", "1/s"), ("tau_rad_inv", "1/s"), ("t_dec", "s"),
        ])
        for r in result.rows:
            table.add_row(r.n_ions, r.omega_z, r.s0, r.tau_vib_inv, r.tau_rad_inv, r.t_dec)
        table.summary = {
            "regime": result.regime.value,
            "path": result.path.value,
            "model": result.model.value,
            "fitted_exponent": result.exponent,
            "fit_intercept": result.intercept,
            "fit_residual": result.fit_residual,
            "predicted_exponent": result.predicted_exponent,
        }
        return table

    def spin_verify(self, run: RunConfig) -> Table:
        """Integrate the two-level equations over Φ ∈ [0, π] and compare with cos Φ."""
        opts = run.spin
        omega_0 = opts.spin_omega_0
        epsilon = opts.field_ratio * omega_0
        omega_drive = opts.drive_ratio * omega_0
        if opts.drive is DriveShape.STATIC:
            drive = spin.TransverseDrive.static(epsilon)
            oracle_omega = omega_0
        elif opts.drive is DriveShape.CIRCULAR:
            drive = spin.TransverseDrive.circular(epsilon, omega_drive)
            oracle_omega = omega_0 - omega_drive
        else:
            drive = spin.TransverseDrive.sinusoid(epsilon, omega_drive)
            oracle_omega = None

        state0 = spin.EQUAL_SUPERPOSITION
        t_pi = spin.phase_time(drive, omega_0, math.pi)
        times, amps = spin.evolve_trajectory(omega_0, drive, state0, t_pi, opts.samples, opts.steps_per_period)
        phi = spin.dynamical_phase(drive, times, omega_0)
        exact = spin.overlap(state0, amps)
        ideal = spin.ideal_overlap(phi)
        oracle = (
            spin.overlap(state0, spin.static_field_state(oracle_omega, epsilon, 0.0, state0, times))
            if oracle_omega is not None else [None] * times.size
        )

        table = Table(columns=[
            ("t", "s"), ("phi", "rad"), ("overlap", "-"), ("cos_phi", "-"), ("oracle_overlap", "-"),
        ])
        for row in zip(times, phi, exact, ideal, oracle):
            table.add_row(*row)

        adiabatic = spin.adiabaticity_check(drive, omega_0)
        table.summary = {
            "drive": opts.drive.value,
            "omega_0": omega_0,
            "field_ratio": adiabatic.field_ratio,
            "rate_ratio": adiabatic.rate_ratio,
            "breakdown_time_s": adiabatic.breakdown_time,
            "max_abs_error": float(np.max(np.abs(exact - ideal))),
            "second_order_bound": 10.0 * opts.field_ratio**2,
        }
        if oracle_omega is not None:
            table.summary["max_oracle_error"] = float(np.max(np.abs(exact - np.asarray(oracle))))
        return table

    def mc_dephase(self, run: RunConfig) -> Table:
        config = self._trap(run)
        spec = run.transition.to_spec()
        array = ion_array.solve_equilibrium(config)
        result = spin.monte_carlo_dephasing(
            array, config, spec,
            ion_index=run.central_ion(),
            trials=run.trials,
            seed=run.seed,
            n_times=run.n_times,
            horizon=run.horizon,
            threads=run.threads,
        )
        table = Table(columns=[("t", "s"), ("mean_overlap", "-"), ("cos_phi_predicted", "-")])
        for row in zip(result.times, result.mean_overlap, result.predicted_cos_phi):
            table.add_row(*row)
        table.summary = {
            "ion": run.central_ion(),
            "tau_i_s": result.tau_i,
            "pi_time_s": result.pi_time,
            "pi_time_over_tau_i": result.pi_time / result.tau_i if result.pi_time else None,
            "trials": result.trials,
            "seed": result.seed,
        }
        return table


def get_command_handler() -> CommandHandler:
    return CommandHandler()
