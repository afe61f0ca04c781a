"""End-to-end command-line behavior: outputs, exit codes, determinism."""

import json
import subprocess

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import UNIVERSE_CSV
from prism.cli import main
from prism.duality import save_operator, validate_involution
from prism.graphs import graph_from_edges, laplacian, load_matrix, save_graph, save_matrix


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def path3(tmp_path):
    g = graph_from_edges(["a", "b", "c"], [(0, 1), (1, 2)])
    path = tmp_path / "path3.txt"
    save_graph(g, path)
    return path


@pytest.fixture()
def swap01(tmp_path):
    op = validate_involution(np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
    path = tmp_path / "swap01.txt"
    save_operator(op, path)
    return path


def test_defect_reports_frozen_value(runner, path3, swap01):
    result = runner.invoke(main, ["defect", str(path3), "--operator", str(swap01)])
    assert result.exit_code == 0
    assert "delta=0.7745966692414833" in result.output
    assert "laplacian_norm=" in result.output and "commutator_norm=" in result.output


def test_defect_index_reversal_on_path_is_zero(runner, path3):
    result = runner.invoke(main, ["defect", str(path3), "--index-reversal"])
    assert result.exit_code == 0
    assert "delta=0.0\n" in result.output


def test_defect_identity_operator_literal(runner, path3):
    result = runner.invoke(main, ["defect", str(path3), "--operator", "identity"])
    assert result.exit_code == 0
    assert "delta=0.0\n" in result.output


def test_defect_matrix_input(runner, tmp_path, path3, swap01):
    matrix_path = tmp_path / "lap.txt"
    save_matrix(laplacian(graph_from_edges(["a", "b", "c"], [(0, 1), (1, 2)])), matrix_path)
    result = runner.invoke(
        main, ["defect", str(matrix_path), "--matrix", "--operator", str(swap01)]
    )
    assert result.exit_code == 0
    assert "delta=0.7745966692414833" in result.output
    # a bare matrix has no structure to derive a pairing from
    bare = runner.invoke(main, ["defect", str(matrix_path), "--matrix"])
    assert bare.exit_code == 2


def test_defect_conflicting_operator_modes(runner, path3, swap01):
    result = runner.invoke(
        main, ["defect", str(path3), "--fiedler", "--operator", str(swap01)]
    )
    assert result.exit_code == 2


def test_defect_missing_file_exits_2(runner):
    result = runner.invoke(main, ["defect", "/nonexistent/graph.txt"])
    assert result.exit_code == 2


def test_defect_wrong_operator_dimension_exits_2(runner, tmp_path, path3):
    op = validate_involution(np.eye(5))
    op_path = tmp_path / "op5.txt"
    save_operator(op, op_path)
    result = runner.invoke(main, ["defect", str(path3), "--operator", str(op_path)])
    assert result.exit_code == 2


def test_project_writes_matrix_and_summary(runner, tmp_path, path3, swap01):
    out_matrix = tmp_path / "projected.txt"
    result = runner.invoke(
        main,
        ["project", str(path3), "--operator", str(swap01), "--out-matrix", str(out_matrix)],
    )
    assert result.exit_code == 0
    summary = json.loads(result.output)
    assert summary["defect_after"] <= 1e-9
    assert summary["defect_before"] == pytest.approx(0.7745966692414833, abs=1e-15)
    projected = load_matrix(out_matrix)
    expected = np.array([[1.5, -1.0, -0.5], [-1.0, 1.5, -0.5], [-0.5, -0.5, 1.0]])
    assert np.allclose(projected, expected, atol=1e-15)


def test_learn_exits_immediately_on_symmetric_input(runner, path3):
    result = runner.invoke(main, ["learn", str(path3), "--index-reversal"])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["iterations"] == 0
    assert doc["converged"] is True
    assert doc["trajectory"] == [0.0]


def test_export_operator_writes_pairing(runner, tmp_path):
    g = graph_from_edges(["a", "b", "c", "d"], [(0, 1), (1, 2), (2, 3)])
    graph_path = tmp_path / "p4.txt"
    save_graph(g, graph_path)
    result = runner.invoke(main, ["export-operator", str(graph_path)])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "#pairing n: 4"
    assert set(lines[1:]) == {"0\t3", "1\t2"}


def test_synth_rewire_is_byte_deterministic(runner):
    args = ["synth-rewire", "--group-size", "6", "--intra", "0.5", "--cross", "0.1",
            "--fractions", "0,0.4", "--seeds", "1-3"]
    first = runner.invoke(main, args)
    second = runner.invoke(main, args)
    assert first.exit_code == 0
    assert first.output == second.output


def test_synth_rewire_single_fraction_zero(runner):
    result = runner.invoke(
        main, ["synth-rewire", "--group-size", "6", "--fractions", "0", "--seeds", "1-5"]
    )
    assert result.exit_code == 0
    rows = [
        line for line in result.output.splitlines() if line and not line.startswith("#")
    ]
    assert len(rows) == 2  # header plus the single fraction, no slope footer
    assert float(rows[1].split(",")[1]) <= 1e-10


def test_karate_noise_single_clean_trial_is_perfect(runner):
    result = runner.invoke(
        main, ["karate-noise", "--levels", "0", "--trials", "1", "--format", "json"]
    )
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["rows"][0]["prism_mean"] == 1.0
    assert doc["rows"][0]["baseline_mean"] == pytest.approx(32 / 34, abs=1e-12)


def test_karate_noise_thread_count_does_not_change_bytes(runner):
    args = ["karate-noise", "--levels", "0,0.05", "--trials", "3", "--seed", "9"]
    serial = runner.invoke(main, args, env={"PRISM_THREADS": "1"})
    threaded = runner.invoke(main, args, env={"PRISM_THREADS": "4"})
    assert serial.exit_code == 0
    assert serial.output == threaded.output


def test_finance_window_golden_output(runner):
    result = runner.invoke(
        main,
        ["finance", "window", "--prices", str(UNIVERSE_CSV), "--date", "2021-02-25"],
    )
    assert result.exit_code == 0
    assert "mean_corr=0.4722035310672387" in result.output
    assert "defect=0.19648362047337645" in result.output
    assert "component_size=27" in result.output
    assert "dropped_nodes=0" in result.output


def test_finance_window_snaps_to_prior_trading_day(runner):
    # 2021-02-27 is a Saturday; the window snaps back to Friday the 26th
    result = runner.invoke(
        main,
        ["finance", "window", "--prices", str(UNIVERSE_CSV), "--date", "2021-02-27"],
    )
    assert result.exit_code == 0
    assert "window_end=2021-02-26" in result.output


def test_finance_window_failures(runner, tmp_path):
    missing = runner.invoke(
        main, ["finance", "window", "--prices", str(tmp_path / "no.csv"), "--date", "2021-02-25"]
    )
    assert missing.exit_code == 2
    early = runner.invoke(
        main, ["finance", "window", "--prices", str(UNIVERSE_CSV), "--date", "2020-01-10"]
    )
    assert early.exit_code == 1  # loads fine, but no 60-row window ends there
    bad = tmp_path / "bad.csv"
    bad.write_text("date,AAA\n2021-01-04,oops\n", encoding="utf-8")
    malformed = runner.invoke(
        main, ["finance", "window", "--prices", str(bad), "--date", "2021-01-04"]
    )
    assert malformed.exit_code == 2


def test_finance_rolling_formats_and_threads(runner):
    base = ["finance", "rolling", "--prices", str(UNIVERSE_CSV),
            "--window", "60", "--stride", "60"]
    csv_run = runner.invoke(main, base, env={"PRISM_THREADS": "1"})
    threaded = runner.invoke(main, base, env={"PRISM_THREADS": "4"})
    assert csv_run.exit_code == 0
    assert csv_run.output == threaded.output
    json_run = runner.invoke(main, base + ["--format", "json"], env={"PRISM_THREADS": "1"})
    doc = json.loads(json_run.output)
    csv_rows = [
        line for line in csv_run.output.splitlines() if line and not line.startswith("#")
    ][1:]
    assert len(csv_rows) == len(doc["records"])
    for line, rec in zip(csv_rows, doc["records"]):
        assert float(line.split(",")[3]) == rec["defect"]


def test_finance_communities_reports_fault_line(runner):
    result = runner.invoke(
        main,
        ["finance", "communities", "--prices", str(UNIVERSE_CSV),
         "--date", "2021-02-25", "--window", "120", "--k", "6"],
    )
    assert result.exit_code == 0
    assert "# fault_line=" in result.output
    assert "community,members,internal_coupling" in result.output
    assert "coupling_i,coupling_j,coupling" in result.output


def test_finance_events_release_signature(runner):
    result = runner.invoke(
        main,
        ["finance", "events", "--prices", str(UNIVERSE_CSV),
         "--events", "SPIKE:2021-12-24"],
    )
    assert result.exit_code == 0
    sections = result.output.split("event,window_len,delta_defect,delta_corr")
    delta_rows = [line for line in sections[1].splitlines() if line.startswith("SPIKE")]
    assert len(delta_rows) == 2
    for row in delta_rows:
        _, _, delta_defect, delta_corr = row.split(",")
        assert float(delta_defect) < 0.0
        assert float(delta_corr) > 0.0


def test_finance_events_out_of_range_is_flagged_not_fatal(runner):
    result = runner.invoke(
        main,
        ["finance", "events", "--prices", str(UNIVERSE_CSV), "--events", "X:2019-01-01"],
    )
    assert result.exit_code == 0
    assert "# flags=X:out_of_range" in result.output


def test_output_file_matches_stdout(runner, tmp_path):
    args = ["synth-rewire", "--group-size", "5", "--fractions", "0,0.5", "--seeds", "1-2"]
    piped = runner.invoke(main, args)
    out_path = tmp_path / "report.csv"
    written = runner.invoke(main, args + ["--out", str(out_path)])
    assert written.exit_code == 0
    assert out_path.read_text(encoding="utf-8") == piped.output


def test_installed_entry_point_responds():
    proc = subprocess.run(["prism", "--help"], capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert "Structural-symmetry diagnostics" in proc.stdout
