# /src/cli/routes.py

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import yaml
from pydantic import ValidationError

from src.cli.handlers import CommandHandler, get_command_handler
from src.cli.models import COMMANDS, RunConfig
from src.core.errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    InstabilityError,
    IntegrationAccuracyError,
)
from src.core.parallel import resolve_threads
from src.core.run_manager import create_run_manager
from src.utils.config.settings import settings
from src.utils.resources.logger import logger
from src.utils.resources.output import render

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONVERGENCE = 2
EXIT_DOMAIN = 3

# Parser bookkeeping that never reaches RunConfig.
_PARSER_KEYS = ("preset", "config")


class UsageError(Exception):
    def __init__(self, message: str, usage: str = ""):
        super().__init__(message)
        self.usage = usage


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so usage errors map to exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message, self.format_usage())


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _common_flags() -> argparse.ArgumentParser:
    common = CliParser(add_help=False)
    common.add_argument("--preset", choices=settings.get_preset_names(), help="Named parameter bundle.")
    common.add_argument("--config", type=Path, help="Flat YAML file whose keys mirror the flags.")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", type=Path, help="Write data here instead of stdout.")
    common.add_argument("--threads", type=int)

    trap = common.add_argument_group("trap")
    trap.add_argument("--n", "--n-ions", dest="n_ions", type=int, help="Number of ions.")
    trap.add_argument("--species")
    trap.add_argument("--mass-amu", dest="mass_amu", type=float)
    trap.add_argument("--charge", type=int)
    trap.add_argument("--omega-z", dest="omega_z", type=float, help="Axial angular frequency, rad/s.")
    trap.add_argument("--omega-t", dest="omega_t", type=float, help="Transverse angular frequency, rad/s.")
    trap.add_argument("--temperature", type=float, help="Kelvin.")

    transition = common.add_argument_group("transition")
    transition.add_argument("--multipole", type=int, choices=[1, 2])
    transition.add_argument("--omega-0", dest="omega_0", type=float, help="Transition angular frequency, rad/s.")
    transition.add_argument("--tau-s", dest="tau_s", type=float, help="Spontaneous decay time, s.")
    transition.add_argument("--coupling", type=float)
    transition.add_argument("--model", choices=["simple", "dubin", "hughes"])
    transition.add_argument("--ion", type=int, help="Ion index (default: central ion).")
    return common


def build_parser() -> CliParser:
    parser = CliParser(
        prog=settings.get("app.name", "iontrap-decoherence"),
        description=settings.get("app.description"),
    )
    commands = parser.add_subparsers(dest="command", metavar="command", parser_class=CliParser)
    commands.required = True
    common = _common_flags()

    commands.add_parser("positions", parents=[common], help="Exact equilibrium positions.")
    commands.add_parser("modes", parents=[common], help="Longitudinal normal-mode frequencies.")

    p = commands.add_parser("continuum", parents=[common], help="Continuum spacing and ion-count profiles.")
    p.add_argument("--points", type=int)

    p = commands.add_parser("sums", parents=[common], help="Exact against continuum lattice sums.")
    p.add_argument("--powers", type=_int_list)

    commands.add_parser("decohere", parents=[common], help="Vibrational and radiative decoherence budget.")

    p = commands.add_parser("sweep", parents=[common], help="N-scaling sweep with a fitted exponent.")
    p.add_argument("--regime", choices=["fixed-s0", "fixed-s0-consistent", "fixed-omega-z"])
    p.add_argument("--path", choices=["exact", "continuum"])
    p.add_argument("--n-list", dest="n_list", type=_int_list)

    p = commands.add_parser("spin-verify", parents=[common], help="Two-level integration against cos(phi).")
    p.add_argument("--spin-omega-0", dest="spin_omega_0", type=float)
    p.add_argument("--field-ratio", dest="field_ratio", type=float)
    p.add_argument("--drive-ratio", dest="drive_ratio", type=float)
    p.add_argument("--drive", choices=["static", "sinusoid", "circular"])
    p.add_argument("--samples", type=int)
    p.add_argument("--steps-per-period", dest="steps_per_period", type=int)

    p = commands.add_parser("mc-dephase", parents=[common], help="Monte Carlo dephasing of one ion.")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--n-times", dest="n_times", type=int)
    p.add_argument("--horizon", type=float, help="Time grid length in units of tau_i.")
    return parser


def _load_config_file(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Could not read config file {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must be a flat mapping of flag names to values")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def merge_layers(args: argparse.Namespace) -> Dict[str, Any]:
    """Built-in defaults < preset < config file < explicit flags."""
    merged: Dict[str, Any] = {}
    if args.preset:
        merged.update(settings.get_preset(args.preset))
    if args.config:
        merged.update(_load_config_file(args.config))
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in _PARSER_KEYS}
    merged.update(flags)
    merged["command"] = args.command
    return merged


def parse_run_config(argv: Sequence[str]) -> RunConfig:
    args = build_parser().parse_args(list(argv))
    return RunConfig.from_flat(merge_layers(args))


def execute(run: RunConfig, handler: Optional[CommandHandler] = None) -> str:
    handler = handler or get_command_handler()
    runs = create_run_manager()
    inputs = run.model_dump(mode="json", exclude={"out", "threads"})
    run_id = runs.create_run(run.command, inputs, seed=run.seed, threads=resolve_threads(run.threads))

    table = handler.dispatch(run)
    text = render(table, run.format.value)
    if run.out is not None:
        run.out.parent.mkdir(parents=True, exist_ok=True)
        with open(run.out, "w", newline="") as f:
            f.write(text)
        runs.add_file_to_run(run_id, run.out)
    runs.finish_run(run_id, summary=table.summary, out_path=run.out, stream=sys.stderr)
    return text


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point: parse, validate, dispatch, and map failures onto exit codes."""
    argv = sys.argv[1:] if argv is None else argv
    try:
        run_config = parse_run_config(argv)
        text = execute(run_config)
    except UsageError as e:
        sys.stderr.write(f"{e.usage}error: {e}\n")
        return EXIT_USAGE
    except (ConfigError, ValidationError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except (ConvergenceError, InstabilityError, IntegrationAccuracyError) as e:
        logger.error("numerical_failure", error=str(e))
        return EXIT_CONVERGENCE
    except DomainError as e:
        logger.error("domain_error", error=str(e))
        sys.stderr.write(f"error: {e}\n")
        return EXIT_DOMAIN
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    if run_config.out is None:
        sys.stdout.write(text)
    return EXIT_OK


__all__ = ["COMMANDS", "build_parser", "execute", "parse_run_config", "run"]
