# /src/cli/models.py

import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, get_args

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.physics.constants import IonSpecies
from src.physics.continuum import ContinuumModel
from src.physics.decoherence import ScalingRegime, SweepPath, TransitionSpec
from src.physics.ion_array import TrapConfig
from src.utils.config.settings import settings


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class DriveShape(str, Enum):
    STATIC = "static"
    SINUSOID = "sinusoid"
    CIRCULAR = "circular"


Command = Literal["positions", "modes", "continuum", "sums", "decohere", "sweep", "spin-verify", "mc-dephase"]
COMMANDS = get_args(Command)

TRAP_KEYS = ("n_ions", "species", "mass_amu", "charge", "omega_z", "omega_t", "temperature")
TRANSITION_KEYS = ("multipole", "omega_0", "tau_s", "coupling")


# --- Sections ---

class TrapSection(BaseModel):
    """Trap and species; defaults are the ¹³⁸Ba⁺ worked example."""

    model_config = ConfigDict(extra="forbid")

    n_ions: int = Field(..., ge=1, description="Number of ions in the array.")
    species: str = Field(default="138Ba+")
    mass_amu: float = Field(default=137.905, gt=0)
    charge: int = Field(default=1, ge=1)
    omega_z: float = Field(default=2.0 * math.pi * 1.0e5, gt=0, description="Axial angular frequency, rad/s.")
    omega_t: float = Field(default=2.0 * math.pi * 2.0e7, gt=0, description="Transverse angular frequency, rad/s.")
    temperature: float = Field(default=0.0, ge=0, description="Ion temperature, K.")

    def to_trap_config(self, linear_regime_ratio: float = 10.0) -> TrapConfig:
        return TrapConfig(
            n_ions=self.n_ions,
            omega_z=self.omega_z,
            omega_t=self.omega_t,
            species=IonSpecies.from_amu(self.species, self.mass_amu, self.charge),
            temperature=self.temperature,
            linear_regime_ratio=linear_regime_ratio,
        )


class TransitionSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    multipole: Literal[1, 2] = 2
    omega_0: float = Field(default=2.0 * math.pi * 1.7e14, gt=0, description="Transition angular frequency, rad/s.")
    tau_s: float = Field(default=35.0, gt=0, description="Spontaneous decay time, s.")
    coupling: float = Field(default=1.0, gt=0)

    def to_spec(self) -> TransitionSpec:
        return TransitionSpec(
            multipole_a=self.multipole,
            omega_0=self.omega_0,
            tau_s=self.tau_s,
            coupling_constant=self.coupling,
        )


class SpinSection(BaseModel):
    """Desk-scale two-level check; frequencies in rad/s."""

    model_config = ConfigDict(extra="forbid")

    spin_omega_0: float = Field(default=1.0e4, gt=0)
    field_ratio: float = Field(default=1.0e-2, gt=0, lt=1, description="|f|/ω₀.")
    drive_ratio: float = Field(default=1.0e-3, ge=0, lt=1, description="Ω/ω₀.")
    drive: DriveShape = DriveShape.SINUSOID
    samples: int = Field(default=64, ge=1)
    steps_per_period: Optional[int] = Field(default=None, ge=20)


# --- Run configuration ---

class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Command
    trap: TrapSection
    transition: TransitionSection = Field(default_factory=TransitionSection)
    spin: SpinSection = Field(default_factory=SpinSection)
    model: ContinuumModel = ContinuumModel.DUBIN_FLUID
    format: OutputFormat = OutputFormat.CSV
    out: Optional[Path] = None
    seed: Optional[int] = Field(default=None, ge=0)
    trials: Optional[int] = Field(default=None, ge=1)
    threads: Optional[int] = Field(default=None, ge=1)
    ion: Optional[int] = Field(default=None, ge=0, description="Ion index; defaults to the central ion.")
    powers: List[int] = Field(default_factory=lambda: list(range(3, 17)))
    regime: ScalingRegime = ScalingRegime.FIXED_OMEGA_Z
    path: SweepPath = SweepPath.CONTINUUM
    n_list: Optional[List[int]] = None
    points: int = Field(default_factory=lambda: int(settings.get("output.profile_points", 201)), ge=2)
    n_times: Optional[int] = Field(default=None, ge=2)
    horizon: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_command_inputs(self) -> "RunConfig":
        if self.command == "mc-dephase" and (self.seed is None or self.trials is None):
            raise ValueError("mc-dephase needs both --seed and --trials")
        if self.ion is not None and self.ion >= self.trap.n_ions:
            raise ValueError(f"--ion {self.ion} is outside 0..{self.trap.n_ions - 1}")
        if any(p < 0 for p in self.powers):
            raise ValueError("--powers must be non-negative")
        return self

    @classmethod
    def from_flat(cls, values: Dict[str, Any]) -> "RunConfig":
        """Build from a flat key/value mapping whose keys mirror the CLI flags."""
        flat = {k.replace("-", "_"): v for k, v in values.items() if v is not None}
        trap = {k: flat.pop(k) for k in TRAP_KEYS if k in flat}
        transition = {k: flat.pop(k) for k in TRANSITION_KEYS if k in flat}
        spin = {k: flat.pop(k) for k in SpinSection.model_fields if k in flat}
        return cls(trap=trap, transition=transition, spin=spin, **flat)

    def central_ion(self) -> int:
        return self.ion if self.ion is not None else self.trap.n_ions // 2
