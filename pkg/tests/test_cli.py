# /tests/test_cli.py

import csv
import io
import json
import math

import pytest
import yaml

from src.cli import routes
from src.cli.models import OutputFormat, RunConfig
from src.physics.continuum import ContinuumModel


def run_cli(capsys, *argv):
    code = routes.run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


# --- Exit codes ---

def test_positions_for_three_ions(capsys):
    code, out, _ = run_cli(capsys, "positions", "--n", "3")
    assert code == routes.EXIT_OK
    rows = read_csv(out)
    assert rows[0] == ["index[-]", "z_scaled[d0]", "z[m]"]
    scaled = [float(r[1]) for r in rows[1:]]
    assert scaled == pytest.approx([-1.07722, 0.0, 1.07722], abs=1e-5)


def test_invalid_ion_count_is_a_usage_error(capsys):
    code, out, err = run_cli(capsys, "sums", "--n-ions", "0")
    assert code == routes.EXIT_USAGE
    assert out == ""
    assert "n_ions" in err


def test_unknown_flag_is_a_usage_error(capsys):
    code, _, err = run_cli(capsys, "positions", "--n", "3", "--bogus")
    assert code == routes.EXIT_USAGE
    assert "usage:" in err


def test_missing_command_is_a_usage_error(capsys):
    assert run_cli(capsys)[0] == routes.EXIT_USAGE


@pytest.mark.parametrize("argv", [["--help"], ["sweep", "--help"]])
def test_help_exits_cleanly(capsys, argv):
    code, out, _ = run_cli(capsys, *argv)
    assert code == routes.EXIT_OK
    assert "usage:" in out


def test_unsupported_profile_is_a_domain_error(capsys):
    code, out, err = run_cli(capsys, "continuum", "--n", "100", "--model", "hughes")
    assert code == routes.EXIT_DOMAIN
    assert out == ""
    assert "hughes" in err.lower()


def test_monte_carlo_without_seed_is_a_usage_error(capsys):
    code, _, err = run_cli(capsys, "mc-dephase", "--n", "3", "--trials", "10")
    assert code == routes.EXIT_USAGE
    assert "--seed" in err


def test_ion_index_outside_array_is_a_usage_error(capsys):
    assert run_cli(capsys, "decohere", "--n", "4", "--ion", "4")[0] == routes.EXIT_USAGE


def test_non_convergence_maps_to_exit_two(capsys, monkeypatch):
    from src.core.errors import ConvergenceError
    from src.physics import ion_array

    def fail(config, **kwargs):
        raise ConvergenceError("no convergence", iterations=3, residual=1.0)

    monkeypatch.setattr(ion_array, "solve_equilibrium", fail)
    assert run_cli(capsys, "positions", "--n", "5")[0] == routes.EXIT_CONVERGENCE


# --- Output ---

def test_json_output_has_unit_headers_and_summary(capsys):
    code, out, err = run_cli(capsys, "modes", "--n", "3", "--format", "json")
    assert code == routes.EXIT_OK
    payload = json.loads(out)
    assert payload["columns"] == ["index[-]", "omega_scaled[omega_z]", "omega[rad/s]"]
    assert [row[1] for row in payload["rows"]] == pytest.approx([1.0, math.sqrt(3.0), math.sqrt(29.0 / 5.0)], rel=1e-8)
    assert payload["summary"]["com_mode_scaled"] == pytest.approx(1.0)

    manifest = json.loads(err.strip().splitlines()[-1])
    assert manifest["command"] == "modes"
    assert manifest["summary"]["com_mode_scaled"] == pytest.approx(1.0)


def test_out_file_gets_a_manifest(capsys, tmp_path):
    target = tmp_path / "results" / "positions.csv"
    code, out, _ = run_cli(capsys, "positions", "--n", "4", "--out", str(target))
    assert code == routes.EXIT_OK
    assert out == ""
    assert len(read_csv(target.read_text())) == 5

    manifest = json.loads((tmp_path / "results" / "positions.csv.manifest.json").read_text())
    assert manifest["command"] == "positions"
    assert manifest["inputs"]["trap"]["n_ions"] == 4
    assert manifest["files"] == [str(target)]
    assert "numpy" in manifest["versions"]
    assert manifest["summary"]["iterations"] >= 0


def test_repeat_runs_are_byte_identical(capsys, tmp_path):
    argv = ["sums", "--n", "30", "--powers", "3,4,8"]
    first = run_cli(capsys, *argv)[1]
    second = run_cli(capsys, *argv)[1]
    assert first == second

    target = tmp_path / "sums.json"
    manifests = []
    for _ in range(2):
        run_cli(capsys, *argv, "--format", "json", "--out", str(target))
        manifests.append((tmp_path / "sums.json.manifest.json").read_bytes())
    assert manifests[0] == manifests[1]


def test_sums_table_rows_follow_powers(capsys):
    _, out, _ = run_cli(capsys, "sums", "--n", "30", "--powers", "0,1,4")
    rows = read_csv(out)
    assert rows[0][0] == "n[-]"
    assert [r[0] for r in rows[1:]] == ["0", "1", "4"]
    # S_n needs n >= 2
    assert rows[1][6] == ""
    assert float(rows[3][6]) > 0


def test_spin_verify_static_drive(capsys):
    code, out, _ = run_cli(
        capsys, "spin-verify", "--n", "1", "--drive", "static", "--field-ratio", "0.05", "--samples", "16",
        "--format", "json",
    )
    assert code == routes.EXIT_OK
    summary = json.loads(out)["summary"]
    assert summary["max_oracle_error"] <= 1e-5
    assert summary["max_abs_error"] <= summary["second_order_bound"]


def test_monte_carlo_rows(capsys):
    code, out, _ = run_cli(
        capsys, "mc-dephase", "--n", "3", "--seed", "5", "--trials", "20", "--n-times", "11", "--threads", "1",
    )
    assert code == routes.EXIT_OK
    rows = read_csv(out)
    assert rows[0] == ["t[s]", "mean_overlap[-]", "cos_phi_predicted[-]"]
    assert len(rows) == 12
    assert float(rows[1][1]) == pytest.approx(1.0)


def test_fixed_trap_sweep_reports_exponent(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--preset", "ba138", "--n", "1000", "--format", "json")
    assert code == routes.EXIT_OK
    summary = json.loads(out)["summary"]
    assert summary["regime"] == "fixed-omega-z"
    assert summary["predicted_exponent"] == pytest.approx(35.0 / 6.0)
    assert summary["fitted_exponent"] == pytest.approx(35.0 / 6.0, abs=0.2)


@pytest.mark.slow
def test_barium_budget_from_the_command_line(capsys):
    code, out, _ = run_cli(capsys, "decohere", "--preset", "ba138", "--n", "1000", "--format", "json")
    assert code == routes.EXIT_OK
    summary = json.loads(out)["summary"]
    assert summary["d0_m"] == pytest.approx(14e-6, rel=0.05)
    assert summary["s0_exact_m"] == pytest.approx(0.5e-6, rel=0.10)
    assert summary["tau_vib_over_tau_rad"] >= 1e6


# --- Configuration layers ---

def test_preset_fills_trap_and_transition():
    run = routes.parse_run_config(["decohere", "--preset", "ba138", "--n", "10"])
    assert run.trap.omega_z == pytest.approx(2.0 * math.pi * 1.0e5)
    assert run.transition.tau_s == 35.0
    assert run.model is ContinuumModel.DUBIN_FLUID
    assert run.format is OutputFormat.CSV


def test_flags_override_config_file_override_preset(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text(yaml.safe_dump({"n_ions": 5, "omega-t": 2.0e8, "temperature": 1.0e-3, "model": "simple"}))
    run = routes.parse_run_config([
        "positions", "--preset", "ba138", "--config", str(config), "--n", "7", "--model", "hughes",
    ])
    assert run.trap.n_ions == 7
    assert run.trap.omega_t == 2.0e8
    assert run.trap.temperature == 1.0e-3
    assert run.trap.omega_z == pytest.approx(2.0 * math.pi * 1.0e5)
    assert run.model is ContinuumModel.HUGHES_FIT


def test_merge_layers_drops_parser_bookkeeping():
    args = routes.build_parser().parse_args(["modes", "--preset", "ba138", "--n", "2"])
    merged = routes.merge_layers(args)
    assert "preset" not in merged and "config" not in merged
    assert merged["command"] == "modes"
    assert merged["tau_s"] == 35.0


@pytest.mark.parametrize("content", ["- 1\n- 2\n", "n_ions: [unclosed\n"])
def test_bad_config_file_is_a_usage_error(capsys, tmp_path, content):
    config = tmp_path / "bad.yaml"
    config.write_text(content)
    assert run_cli(capsys, "positions", "--config", str(config))[0] == routes.EXIT_USAGE


def test_unknown_config_key_is_rejected(capsys, tmp_path):
    config = tmp_path / "extra.yaml"
    config.write_text("n_ions: 3\nwavelength: 1.0\n")
    assert run_cli(capsys, "positions", "--config", str(config))[0] == routes.EXIT_USAGE


def test_run_config_defaults_to_central_ion():
    assert RunConfig.from_flat({"command": "decohere", "n_ions": 9}).central_ion() == 4
    assert RunConfig.from_flat({"command": "decohere", "n_ions": 9, "ion": 2}).central_ion() == 2


def test_profile_size_comes_from_output_settings(capsys, monkeypatch):
    from src.utils.config.settings import settings

    monkeypatch.setitem(settings._config["output"], "profile_points", 11)
    code, out, _ = run_cli(capsys, "continuum", "--n", "100")
    assert code == routes.EXIT_OK
    assert len(read_csv(out)) == 12
    assert routes.parse_run_config(["continuum", "--n", "100", "--points", "5"]).points == 5
