import csv
import json

import pytest

import cli
from errors import ConfigError, RegimeError, StructuralError, UnsupportedParametrizationError
from passage import ExitRecord, Side

MINIMAL_LIMIT_LAW = """
experiment_name: limit_law
alpha: 1.5
kappa: 0
r: 1
n_reps: 100
seed: 7
"""

SURVIVAL = """
experiment_name: survival
seed: 5
n_reps: 60
alpha: 1.5
kappa: 0.0
r: 1.0
horizon: 5.0
grid_steps: 128
t_points: 10
"""

SCALING = """
experiment_name: scaling_collapse
seed: 7
n_reps: 300
alpha: 1.2
lambda_values: [0.0625, 16]
grid_steps: 4
chunk_size: 50
"""

PHASE = """
experiment_name: phase_diagram
seed: 3
n_reps: 40
alpha_grid: [0.6, 1.5]
kappa_grid: [0.0, 0.5, 1.2]
epsilon_grid: [0.1, 0.01]
grid_steps: 64
"""

PURE_DRIFT = """
experiment_name: relative_stability
seed: 1
n_reps: 5
alpha: 0.6
scale: 0.0
drift_b: 2.0
r_values: [0.1]
grid_steps: 64
"""


def write_config(tmp_path, text, name="config.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ============ parse_config ============
def test_minimal_config_gets_defaults():
    config = cli.parse_config(MINIMAL_LIMIT_LAW)
    assert config.experiment_name == "limit_law"
    assert config.grid_steps == 2**14
    assert config.censoring_cap == 0.01
    assert config.beta == 0.0


def test_regime_violation_names_the_gate():
    with pytest.raises(RegimeError, match="kappa < 1/alpha"):
        cli.parse_config(MINIMAL_LIMIT_LAW.replace("kappa: 0", "kappa: 1.0"))


def test_missing_seed_is_rejected():
    with pytest.raises(ConfigError, match="seed"):
        cli.parse_config(MINIMAL_LIMIT_LAW.replace("seed: 7", ""))


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError, match="colour"):
        cli.parse_config(MINIMAL_LIMIT_LAW + "colour: blue\n")


def test_unknown_experiment_is_rejected():
    with pytest.raises(ConfigError):
        cli.parse_config(MINIMAL_LIMIT_LAW.replace("limit_law", "levitation"))


def test_malformed_yaml_reports_line():
    with pytest.raises(ConfigError, match="line"):
        cli.parse_config("experiment_name: limit_law\nalpha: [1.5\nseed: 1\n")


def test_non_mapping_document():
    with pytest.raises(ConfigError):
        cli.parse_config("- 1\n- 2\n")


SKEWED_CAUCHY_PHASE = """
experiment_name: phase_diagram
seed: 3
n_reps: 10
alpha_grid: [1.5, 1.0]
kappa_grid: [0.0]
epsilon_grid: [0.1]
beta: 0.5
"""


def test_skewed_cauchy_rejected_before_any_run(tmp_path):
    with pytest.raises(UnsupportedParametrizationError):
        cli.parse_config(SKEWED_CAUCHY_PHASE)
    path = write_config(tmp_path, SKEWED_CAUCHY_PHASE)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", path, "--out", str(out)]) == 2
    assert not (out / "runs.db").exists()


def test_large_r_config_defaults():
    config = cli.parse_config(
        "experiment_name: relative_stability\nseed: 1\nn_reps: 10\nalpha: 1.5\nlimit: large_r\n"
    )
    assert config.r_values == [1e2, 1e3, 1e4]
    assert json.loads(cli.canonical_config(config))["limit"] == "large_r"


def test_canonical_config_is_stable():
    a = cli.canonical_config(cli.parse_config(MINIMAL_LIMIT_LAW))
    b = cli.canonical_config(cli.parse_config("seed: 7\n" + MINIMAL_LIMIT_LAW.replace("seed: 7", "")))
    assert a == b


# ============ Exit-record CSV ============
def test_exit_records_round_trip(tmp_path):
    records = [
        ExitRecord(exit_time=0.1 + 0.2, exit_position=-1.0000000000000002, overshoot=2e-16,
                   side=Side.LOWER, censored=False, horizon=5.0),
        ExitRecord(exit_time=5.0, exit_position=0.25, overshoot=0.0, side=None, censored=True, horizon=5.0),
    ]
    path = tmp_path / "exits.csv"
    cli.write_exit_records(path, records)
    parsed = cli.read_exit_records(path)
    assert [rep for rep, _ in parsed] == [0, 1]
    assert [rec for _, rec in parsed] == records


def test_censored_row_has_empty_side(tmp_path):
    path = tmp_path / "exits.csv"
    cli.write_exit_records(path, [ExitRecord(1.0, 0.0, 0.0, None, True, 1.0)])
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[1] == ["0", "1", "0", "0", "", "true"]


# ============ run ============
def test_survival_run_outputs(tmp_path):
    manifest = cli.run(cli.parse_config(SURVIVAL), tmp_path / "out")
    out = tmp_path / "out"
    for name in manifest.outputs.values():
        assert (out / name).exists()
    with open(out / "exits.csv", newline="") as f:
        header = next(csv.reader(f))
    assert header == ["rep_id", "exit_time", "exit_position", "overshoot", "side", "censored"]
    records = cli.read_exit_records(out / "exits.csv")
    assert len(records) == 60
    assert manifest.censoring["main"] == sum(rec.censored for _, rec in records)
    assert json.loads((out / "config.json").read_text())["seed"] == 5


def test_phase_diagram_row_count(tmp_path):
    cli.run(cli.parse_config(PHASE), tmp_path)
    lines = (tmp_path / "report.jsonl").read_text().splitlines()
    assert len(lines) == 2 * 3 * 2
    row = json.loads(lines[0])
    assert {"fraction", "half_width", "alpha", "kappa", "epsilon"} <= set(row)
    assert (tmp_path / "exits_alpha_0.6_kappa_0.csv").exists()


@pytest.mark.parametrize("workers", [2, 4])
def test_reruns_are_byte_identical(tmp_path, workers):
    config = cli.parse_config(SCALING)
    cli.run(config, tmp_path / "a", workers=1)
    cli.run(config, tmp_path / "b", workers=workers)
    for name in ("table.csv", "report.jsonl", "summary.json", "config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_exit_records_reload_with_manifest_horizon(tmp_path):
    # pure drift: every replication exits, so no censored row carries the horizon
    manifest = cli.run(cli.parse_config(PURE_DRIFT), tmp_path)
    horizon = manifest.horizons["r_0.1"]
    assert horizon == pytest.approx(4 * 0.05)
    records = cli.load_exit_records(tmp_path, "r_0.1")
    assert len(records) == 5
    assert all(not rec.censored and rec.exit_time < horizon for _, rec in records)
    assert all(rec.horizon == horizon for _, rec in records)
    # without the manifest the latest exit time stands in
    guessed = cli.read_exit_records(tmp_path / "exits_r_0.1.csv")
    assert guessed[0][1].horizon < horizon


def test_load_exit_records_unknown_group(tmp_path):
    cli.run(cli.parse_config(PURE_DRIFT), tmp_path)
    with pytest.raises(StructuralError):
        cli.load_exit_records(tmp_path, "main")


def test_plots_and_index(tmp_path):
    manifest = cli.run(cli.parse_config(SCALING), tmp_path, plots=True)
    assert (tmp_path / "scaling_collapse.svg").exists()
    assert "index.html" in manifest.outputs.values()
    html = (tmp_path / "index.html").read_text()
    assert "scaling_collapse.svg" in html


# ============ main ============
def test_main_exit_codes(tmp_path, capsys):
    ok = write_config(tmp_path, SCALING.replace("n_reps: 300", "n_reps: 50"), "ok.yaml")
    assert cli.main(["run", "--config", ok, "--out", str(tmp_path / "ok")]) == 0
    assert "manifest.json" in capsys.readouterr().out

    regime = write_config(tmp_path, MINIMAL_LIMIT_LAW.replace("kappa: 0", "kappa: 1.0"), "regime.yaml")
    assert cli.main(["run", "--config", regime, "--out", str(tmp_path / "regime")]) == 2

    censored = write_config(
        tmp_path, MINIMAL_LIMIT_LAW + "horizon: 0.001\ngrid_steps: 32\n", "censored.yaml"
    )
    assert cli.main(["run", "--config", censored, "--out", str(tmp_path / "censored")]) == 3

    missing = str(tmp_path / "does_not_exist.yaml")
    assert cli.main(["run", "--config", missing, "--out", str(tmp_path / "missing")]) == 4


def test_history_lists_runs_newest_first(tmp_path, capsys):
    good = write_config(tmp_path, SCALING.replace("n_reps: 300", "n_reps: 50"), "good.yaml")
    bad = write_config(tmp_path, MINIMAL_LIMIT_LAW + "horizon: 0.001\ngrid_steps: 32\n", "bad.yaml")
    out = str(tmp_path / "runs")
    cli.main(["run", "--config", good, "--out", out])
    cli.main(["run", "--config", bad, "--out", out])

    rows = cli.history(out)
    assert [row["experiment"] for row in rows] == ["limit_law", "scaling_collapse"]
    assert rows[0]["status"] == "failed" and rows[0]["exit_code"] == 3
    assert rows[1]["status"] == "completed" and rows[1]["exit_code"] == 0

    capsys.readouterr()
    assert cli.main(["history", "--out", out]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 2


def test_classify_prints_flat_record(capsys):
    assert cli.main(["classify", "--alpha", "1.5", "--kappa", "1.0"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["instantaneous_exit"] == "undetermined"
    assert record["nu"] is None


def test_classify_rejects_bad_alpha():
    assert cli.main(["classify", "--alpha", "2.5", "--kappa", "0"]) == 2


def test_version(capsys):
    assert cli.main(["version"]) == 0
    assert capsys.readouterr().out.strip() == cli.VERSION
