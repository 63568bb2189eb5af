import json
import os
import subprocess

import pytest

CLI = os.environ.get("GWFLOW_CLI", "gwflow")


def gwflow(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("GWFLOW_OUT", None)
    full_env.update(env or {})
    return subprocess.run([CLI, *args], capture_output=True, text=True, env=full_env, timeout=300)


def test_list_shows_bundled_configs():
    result = gwflow("list")
    assert result.returncode == 0
    names = [line.split()[0] for line in result.stdout.splitlines() if line.strip()]
    assert len(names) >= 6
    assert "feller_binary" in names


def test_describe_prints_anchor_and_config():
    result = gwflow("describe", "generator_gap_nonlocal")
    assert result.returncode == 0
    assert "anchor:" in result.stdout
    assert '"experiment": "generator_gap"' in result.stdout


def test_describe_unknown_is_a_schema_error():
    assert gwflow("describe", "no_such_config").returncode == 2


def test_missing_subcommand_is_a_usage_error():
    assert gwflow().returncode == 2


def test_run_writes_artifacts(tmp_path):
    result = gwflow("run", "feller_binary", "--out", str(tmp_path))
    assert result.returncode == 0, result.stderr
    assert "PASS" in result.stdout
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passed"] is True
    rows = (tmp_path / "results.csv").read_text().splitlines()
    assert rows[0] == "k,estimate,standard_error,oracle,gap,allowance,pass"
    assert len(rows) == 4


def test_output_dir_from_environment(tmp_path):
    result = gwflow("run", "nonlocal_endpoint", env={"GWFLOW_OUT": str(tmp_path)})
    assert result.returncode == 0
    assert (tmp_path / "summary.json").exists()


def test_failed_verdict_exit_code(tmp_path):
    result = gwflow("run", "feller_binary", "--out", str(tmp_path), "--override", "tolerances.final_bound=1e-9")
    assert result.returncode == 1
    assert "FAIL" in result.stdout


def test_validity_error_exit_code(tmp_path):
    config = json.loads(gwflow("describe", "mc_independent_binary").stdout.split("\n", 4)[4])
    config["gamma"] = {"C": 0.01}
    path = tmp_path / "bad_gamma.json"
    path.write_text(json.dumps(config))
    assert gwflow("run", str(path), "--out", str(tmp_path / "out")).returncode == 3


def test_schema_error_exit_code(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"schema": "gwflow/1", "name": "broken", "experiment": "nothing"}')
    assert gwflow("run", str(path), "--out", str(tmp_path / "out")).returncode == 2
    assert gwflow("run", str(tmp_path / "absent.json")).returncode == 2


@pytest.mark.parametrize("workers", ["1", "3"])
def test_monte_carlo_csv_is_byte_identical(tmp_path, workers):
    overrides = ["--override", "replicates=400", "k=20"]
    first = gwflow("run", "mc_independent_binary", "--out", str(tmp_path / "a"), *overrides)
    second = gwflow("run", "mc_independent_binary", "--workers", workers, "--out", str(tmp_path / "b"), *overrides)
    assert first.returncode == 0 and second.returncode == 0
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()
