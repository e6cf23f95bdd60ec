"""Report rows, serialization, and the command-line surface."""

import csv
import io
import json
import math

import pytest

from treecast import ReportRow, delta_exact, rows_to_csv, rows_to_json
from treecast.cli import main, parse_k_values
from treecast.report import CSV_COLUMNS
from treecast.verify import CheckResult

MC_ROW = ReportRow(
    experiment="delta",
    params={"r": 2, "eps": 0.1, "depth": 4},
    quantity="delta_n",
    value=0.705,
    provenance="mc",
    lo=0.68,
    hi=0.73,
)
EXACT_ROW = ReportRow(
    experiment="eps-k",
    params={"r": 2, "k": 1, "note": 'needs, "quoting"'},
    quantity="eps_k",
    value=0.3,
    provenance="exact",
    tolerance=1e-12,
)


def test_report_row_validation():
    with pytest.raises(ValueError):
        ReportRow(
            experiment="x", params={}, quantity="delta_n", value=0.5,
            provenance="guess",
        )
    with pytest.raises(ValueError):
        ReportRow(
            experiment="x", params={}, quantity="delta_n", value=0.5,
            provenance="mc",  # interval missing
        )
    with pytest.raises(ValueError):
        ReportRow(
            experiment="x", params={}, quantity="delta_n", value=0.5,
            provenance="mc", lo=0.6, hi=0.4,
        )
    with pytest.raises(ValueError):
        ReportRow(
            experiment="x", params={}, quantity="delta_n", value=0.5,
            provenance="exact",  # tolerance missing
        )


def test_csv_round_trips_through_standard_reader():
    text = rows_to_csv([MC_ROW, EXACT_ROW], reproducible=True)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == 3
    mc = dict(zip(CSV_COLUMNS, rows[1]))
    assert mc["experiment"] == "delta"
    assert float(mc["value"]) == 0.705
    assert float(mc["lo"]) == 0.68
    assert mc["tolerance"] == ""
    exact = dict(zip(CSV_COLUMNS, rows[2]))
    assert exact["params"] == 'r=2 k=1 note=needs, "quoting"'
    assert exact["lo"] == ""
    assert float(exact["tolerance"]) == 1e-12


def test_csv_timestamp_only_outside_reproducible_mode():
    assert rows_to_csv([EXACT_ROW]).startswith("# timestamp=")
    assert not rows_to_csv([EXACT_ROW], reproducible=True).startswith("#")
    # Reproducible output is byte-stable across calls.
    assert rows_to_csv([MC_ROW], reproducible=True) == rows_to_csv(
        [MC_ROW], reproducible=True
    )


def test_json_is_deterministic_and_native():
    text = rows_to_json([MC_ROW, EXACT_ROW])
    assert text == rows_to_json([MC_ROW, EXACT_ROW])
    data = json.loads(text)
    assert [d["experiment"] for d in data] == ["delta", "eps-k"]
    assert data[0]["lo"] == 0.68
    assert data[1]["tolerance"] == 1e-12
    assert data[1]["params"]["k"] == 1


def test_parse_k_values():
    assert parse_k_values("3") == (3,)
    assert parse_k_values("1..4") == (1, 2, 3, 4)
    assert parse_k_values("1,3,9") == (1, 3, 9)
    for bad in ("", "0", "4..2", "a", "1,,2"):
        with pytest.raises(Exception):
            parse_k_values(bad)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_cli_eps_k_exact_value(capsys):
    code, out = run_cli(
        capsys, "eps-k", "--r", "2", "--k", "1", "--eps", "0.3", "--reproducible",
        "--format", "csv",
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    by_quantity = {row["quantity"]: row for row in rows}
    assert math.isclose(float(by_quantity["eps_k"]["value"]), 0.3, abs_tol=1e-12)
    assert by_quantity["eps_k"]["provenance"] == "exact"
    assert math.isclose(float(by_quantity["eps_tilde_k"]["value"]), 0.3)
    assert float(by_quantity["t_stat"]["value"]) == pytest.approx(0.0, abs=1e-12)


def test_cli_eps_k_falls_back_to_mc_when_over_budget(capsys):
    code, out = run_cli(
        capsys, "eps-k", "--r", "2", "--k", "5", "--eps", "0.2",
        "--budget", "10", "--replicates", "400", "--reproducible",
        "--format", "csv",
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    eps_rows = [row for row in rows if row["quantity"] == "eps_k"]
    assert eps_rows and all(row["provenance"] == "mc" for row in eps_rows)
    assert all(row["lo"] != "" and row["hi"] != "" for row in eps_rows)


def test_cli_output_is_byte_deterministic(capsys):
    args = (
        "delta", "--r", "2", "--depth", "4", "--eps", "0.1",
        "--replicates", "400", "--seed", "11", "--reproducible",
        "--format", "csv",
    )
    code_a, out_a = run_cli(capsys, *args)
    code_b, out_b = run_cli(capsys, *args)
    assert code_a == code_b == 0
    assert out_a == out_b


def test_cli_exact_delta(capsys):
    code, out = run_cli(
        capsys, "delta", "--r", "2", "--depth", "4", "--eps", "0.1",
        "--exact", "--reproducible", "--format", "csv",
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert math.isclose(float(rows[0]["value"]), delta_exact(4, 2, 0.1), abs_tol=1e-12)
    assert rows[0]["provenance"] == "exact"


def test_cli_rejects_bad_channel(capsys):
    assert main(["delta", "--r", "2", "--depth", "4", "--eps", "0.6"]) == 2
    assert main(["delta", "--r", "2", "--depth", "4", "--p", "0.0"]) == 2


def test_cli_usage_error_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "not-a-suite"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        # --eps and --p are mutually exclusive at the parser level.
        main(["delta", "--r", "2", "--depth", "4", "--eps", "0.1", "--p", "0.8"])
    assert exc.value.code == 2


def test_cli_budget_exhaustion_exits_three(capsys):
    code = main(["critical", "--r", "2", "--k", "40"])
    assert code == 3


def test_cli_critical_matches_exact(capsys):
    code, out = run_cli(
        capsys, "critical", "--r", "2", "--k", "1", "--reproducible",
        "--format", "csv",
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    p_c = [row for row in rows if row["quantity"] == "p_c_k"][0]
    assert abs(float(p_c["value"]) - 1 / math.sqrt(2)) < 1e-8
    assert float(p_c["lo"]) <= float(p_c["value"]) <= float(p_c["hi"])


def test_cli_verify_passing_suite(capsys, tmp_path):
    out_file = tmp_path / "rows.csv"
    code = main(["verify", "lemma33", "--out", str(out_file), "--reproducible"])
    text = capsys.readouterr().out
    assert code == 0
    assert "[PASS]" in text
    assert "all gates passed" in text
    saved = list(csv.DictReader(io.StringIO(out_file.read_text())))
    assert saved and all(row["experiment"] == "verify:lemma33" for row in saved)


def test_cli_verify_gate_failure_exits_four(capsys, monkeypatch):
    def fake_run_suite(name, seed=None):
        return [
            CheckResult(
                suite=name, name="forced", passed=False,
                measured=1.0, requirement="must be < 0", tolerance=0.0,
            )
        ]

    monkeypatch.setattr("treecast.cli.run_suite", fake_run_suite)
    code = main(["verify", "lemma33"])
    assert code == 4
    assert "GATE FAILURE" in capsys.readouterr().out


def test_cli_sweep_grid(capsys, tmp_path):
    grid = {
        "r": 2,
        "schemes": ["Identity", "WithinDescentMajority{k=2}"],
        "eps": [0.1, 0.2],
        "depths": [2, 4],
        "replicates": 200,
        "seed": 5,
    }
    grid_path = tmp_path / "grid.json"
    grid_path.write_text(json.dumps(grid))
    code_a, out_a = run_cli(
        capsys, "sweep", str(grid_path), "--reproducible", "--format", "csv"
    )
    code_b, out_b = run_cli(
        capsys, "sweep", str(grid_path), "--reproducible", "--format", "csv"
    )
    assert code_a == code_b == 0
    assert out_a == out_b
    rows = list(csv.DictReader(io.StringIO(out_a)))
    assert len(rows) == 8
    assert all(row["quantity"] == "delta_n" for row in rows)


def test_cli_sweep_rejects_incomplete_grid(tmp_path):
    grid_path = tmp_path / "grid.json"
    grid_path.write_text(json.dumps({"r": 2, "schemes": ["Identity"]}))
    assert main(["sweep", str(grid_path)]) == 2
    grid_path.write_text("{not json")
    assert main(["sweep", str(grid_path)]) == 2
    assert main(["sweep", str(tmp_path / "missing.json")]) == 2


def test_cli_config_file_merging(capsys, tmp_path):
    config_path = tmp_path / "run.json"
    config_path.write_text(json.dumps({"r": 2, "depth": 4, "eps": 0.3}))
    code, out = run_cli(
        capsys, "delta", "--config", str(config_path), "--exact",
        "--reproducible", "--format", "csv",
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert math.isclose(float(rows[0]["value"]), delta_exact(4, 2, 0.3), abs_tol=1e-12)
    # A flag overrides the same key from the config file.
    code, out = run_cli(
        capsys, "delta", "--config", str(config_path), "--eps", "0.1", "--exact",
        "--reproducible", "--format", "csv",
    )
    rows = list(csv.DictReader(io.StringIO(out)))
    assert math.isclose(float(rows[0]["value"]), delta_exact(4, 2, 0.1), abs_tol=1e-12)


def test_cli_json_output(capsys):
    code, out = run_cli(
        capsys, "delta", "--r", "2", "--depth", "3", "--eps", "0.2", "--exact",
        "--format", "json", "--reproducible",
    )
    assert code == 0
    data = json.loads(out)
    assert isinstance(data, list)
    assert data[0]["provenance"] == "exact"
    assert math.isclose(data[0]["value"], delta_exact(3, 2, 0.2), abs_tol=1e-12)
