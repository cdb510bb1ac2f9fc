"""Tests for the hestonlab CLI: TOML config parsing, the simulate/estimate
commands, experiment subcommands with report output, and exit codes
(0 pass, 1 criterion failure, 2 usage or configuration error)."""

import json

import numpy as np
import pytest

from hestonlab import PathGrid, load_path_csv, save_path_csv
from hestonlab.cli import main

MODEL_SECTION = """\
[model]
a = 2.0
b = 1.0
alpha = 0.3
beta = 0.8
sigma1 = 1.0
sigma2 = 1.0
rho = -0.5
y0 = 1.0
"""


def _write_config(tmp_path, text, name="config.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="ascii")
    return str(path)


def _simulate_config(tmp_path, horizon=2.0, dt=0.01, seed=3):
    return _write_config(
        tmp_path,
        MODEL_SECTION + f"\n[run]\nhorizon = {horizon}\ndt = {dt}\nseed = {seed}\n",
    )


# --- simulate -------------------------------------------------------------------


def test_simulate_writes_loadable_csv(tmp_path, capsys):
    config = _simulate_config(tmp_path)
    out = tmp_path / "path.csv"
    assert main(["simulate", "--config", config, "--out", str(out)]) == 0
    path = load_path_csv(str(out))
    assert path.y.size == 201
    assert path.dt == pytest.approx(0.01)
    assert np.all(path.y > 0.0)
    assert "wrote 201 grid points" in capsys.readouterr().err


def test_simulate_seed_flag_controls_output(tmp_path):
    config = _simulate_config(tmp_path)
    outs = {}
    for name, seed in [("a.csv", "5"), ("b.csv", "5"), ("c.csv", "6")]:
        out = tmp_path / name
        assert main(["simulate", "--config", config, "--seed", seed, "--out", str(out)]) == 0
        outs[name] = out.read_bytes()
    assert outs["a.csv"] == outs["b.csv"]
    assert outs["a.csv"] != outs["c.csv"]


def test_simulate_rejects_misaligned_grid(tmp_path, capsys):
    config = _simulate_config(tmp_path, horizon=1.0, dt=0.3)
    assert main(["simulate", "--config", config, "--out", str(tmp_path / "p.csv")]) == 2
    assert "integer multiple" in capsys.readouterr().err


def test_simulate_unwritable_out_is_io_error(tmp_path, capsys):
    config = _simulate_config(tmp_path)
    missing_dir = tmp_path / "no_such_dir" / "p.csv"
    assert main(["simulate", "--config", config, "--out", str(missing_dir)]) == 2
    assert "i/o error" in capsys.readouterr().err


# --- estimate -------------------------------------------------------------------


def _simulated_path_csv(tmp_path):
    config = _simulate_config(tmp_path)
    out = tmp_path / "path.csv"
    assert main(["simulate", "--config", config, "--out", str(out)]) == 0
    return out


def test_estimate_stdout_json(tmp_path, capsys):
    path_csv = _simulated_path_csv(tmp_path)
    config = _write_config(
        tmp_path, f'[estimate]\ninput = "{path_csv}"\n', name="estimate.toml"
    )
    assert main(["estimate", "--config", config]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) == {
        "a_hat",
        "b_hat",
        "alpha_hat",
        "beta_hat",
        "det_condition",
        "used_log_identity",
        "horizon",
        "dt",
        "n_points",
    }
    assert payload["n_points"] == 201
    assert payload["used_log_identity"] is False
    assert payload["det_condition"] > 0.0


def test_estimate_log_identity_to_file(tmp_path):
    path_csv = _simulated_path_csv(tmp_path)
    config = _write_config(
        tmp_path,
        f'[estimate]\ninput = "{path_csv}"\nuse_log_identity = true\nsigma1 = 1.0\n',
        name="estimate.toml",
    )
    out = tmp_path / "estimate.json"
    assert main(["estimate", "--config", config, "--out", str(out)]) == 0
    payload = json.loads(out.read_text(encoding="ascii"))
    assert payload["used_log_identity"] is True
    assert np.isfinite(payload["a_hat"])


def test_estimate_constant_path_fails_with_exit_1(tmp_path, capsys):
    flat = tmp_path / "flat.csv"
    save_path_csv(PathGrid(dt=0.1, y=np.ones(11), x=np.zeros(11)), str(flat))
    config = _write_config(tmp_path, f'[estimate]\ninput = "{flat}"\n')
    assert main(["estimate", "--config", config]) == 1
    assert "estimation failed" in capsys.readouterr().err


def test_estimate_requires_input_section(tmp_path, capsys):
    config = _write_config(tmp_path, MODEL_SECTION)
    assert main(["estimate", "--config", config]) == 2
    assert "config error" in capsys.readouterr().err


# --- experiment subcommands -------------------------------------------------------


def _consistency_config(tmp_path, replicates=4, extra=""):
    return _write_config(
        tmp_path,
        MODEL_SECTION
        + f"\n[run]\nhorizon = 2.0\ndt = 0.01\nreplicates = {replicates}\nseed = 9\n"
        + extra,
    )


def test_experiment_report_to_stdout(tmp_path, capsys):
    config = _consistency_config(tmp_path)
    assert main(["consistency", "--config", config]) == 0
    captured = capsys.readouterr()
    payload = json.loads(captured.out)
    assert payload["kind"] == "consistency"
    assert payload["n_replicates"] == 4
    assert payload["passed"] is True
    assert "[PASS] determinant_positive_all_replicates" in captured.err
    assert "[PASS] consistency: 4 replicates" in captured.err


def test_experiment_out_writes_report_and_csv(tmp_path, capsys):
    config = _consistency_config(tmp_path)
    out = tmp_path / "report.json"
    assert main(["consistency", "--config", config, "--out", str(out)]) == 0
    captured = capsys.readouterr()
    assert captured.out == ""  # report goes to the file, not stdout
    payload = json.loads(out.read_text(encoding="ascii"))
    assert payload["kind"] == "consistency"
    lines = (tmp_path / "report.csv").read_text(encoding="ascii").splitlines()
    assert lines[0].startswith("replicate,a_hat")
    assert len(lines) == 1 + 4


def test_experiment_seed_and_threads_flags(tmp_path):
    config = _consistency_config(tmp_path)
    first = tmp_path / "first.json"
    second = tmp_path / "second.json"
    assert main(["consistency", "--config", config, "--seed", "123", "--out", str(first)]) == 0
    assert (
        main(
            ["consistency", "--config", config, "--seed", "123", "--threads", "2", "--out", str(second)]
        )
        == 0
    )
    assert json.loads(first.read_text())["seed"] == 123
    assert first.read_bytes() == second.read_bytes()


def test_experiment_criterion_failure_exits_1(tmp_path, capsys):
    # recovery tolerances far below what any finite grid can deliver
    config = _write_config(
        tmp_path,
        MODEL_SECTION
        + "\n[run]\nhorizon = 0.5\ndt = 0.005\nreplicates = 2\nseed = 9\n"
        + "window = 50\nsigma_tolerance = 1e-6\nrho_tolerance = 1e-6\n",
    )
    assert main(["diffusion-recovery", "--config", config]) == 1
    assert "[FAIL]" in capsys.readouterr().err


def test_experiment_ks_lines_on_stderr(tmp_path, capsys):
    config = _write_config(
        tmp_path,
        "[model]\na = 1.0\nb = -1.0\nalpha = 0.5\nbeta = 1.0\nsigma1 = 1.0\n"
        "sigma2 = 1.0\nrho = 0.3\ny0 = 1.0\n"
        "\n[run]\nhorizon = 2.0\ndt = 0.01\nreplicates = 6\nseed = 9\n"
        "limit_draws = 40\ncompanion_steps = 50\nb_tolerance = 5.0\n",
    )
    rc = main(["supercritical-limit", "--config", config])
    err = capsys.readouterr().err
    assert rc in (0, 1)
    assert "a_error_vs_limit: statistic=" in err


@pytest.mark.parametrize(
    "mutation, fragment",
    [
        ("missing_file", "not found"),
        ("bad_toml", "cannot parse"),
        ("no_model", "[model] section"),
        ("missing_key", "missing keys: rho"),
        ("no_replicates", "missing key 'replicates'"),
        ("bad_dt", "dt > 0"),
        ("wrong_regime", "requires regime"),
    ],
)
def test_config_errors_exit_2(tmp_path, capsys, mutation, fragment):
    if mutation == "missing_file":
        config = str(tmp_path / "absent.toml")
    elif mutation == "bad_toml":
        config = _write_config(tmp_path, "= = =\n")
    elif mutation == "no_model":
        config = _write_config(tmp_path, "[run]\nhorizon = 1.0\ndt = 0.1\nreplicates = 2\n")
    elif mutation == "missing_key":
        body = MODEL_SECTION.replace("rho = -0.5\n", "")
        config = _write_config(tmp_path, body + "\n[run]\nhorizon = 1.0\ndt = 0.1\nreplicates = 2\n")
    elif mutation == "no_replicates":
        config = _write_config(tmp_path, MODEL_SECTION + "\n[run]\nhorizon = 1.0\ndt = 0.1\n")
    elif mutation == "bad_dt":
        config = _write_config(
            tmp_path, MODEL_SECTION + "\n[run]\nhorizon = 1.0\ndt = 0.0\nreplicates = 2\n"
        )
    else:  # critical-regime model offered to the subcritical-only clt command
        body = MODEL_SECTION.replace("b = 1.0\n", "b = 0.0\n")
        config = _write_config(tmp_path, body + "\n[run]\nhorizon = 1.0\ndt = 0.1\nreplicates = 2\n")
    assert main(["clt", "--config", config]) == 2
    assert fragment in capsys.readouterr().err


def test_usage_errors_raise_system_exit_2(capsys):
    with pytest.raises(SystemExit) as first:
        main([])
    assert first.value.code == 2
    with pytest.raises(SystemExit) as second:
        main(["no-such-command", "--config", "x.toml"])
    assert second.value.code == 2
    with pytest.raises(SystemExit) as third:
        main(["simulate"])  # --config and --out are required
    assert third.value.code == 2
