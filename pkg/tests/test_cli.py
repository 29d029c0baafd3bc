import pytest

from endgame.harness import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_parse_grid():
    assert cli.parse_grid("100,200,400") == [100, 200, 400]
    assert cli.parse_grid("10:30:3") == [10, 20, 30]
    grid = cli.parse_grid("50:800:log8")
    assert grid[0] == 50 and grid[-1] == 800
    assert len(grid) == 8
    assert grid == sorted(grid)


def test_bins_run_prints_one_row(capsys):
    code, out, _ = run_cli(capsys, "bins", "run", "--policy", "dynamic",
                           "--T", "10000", "--N", "5", "--q", "0.1",
                           "--seed", "7")
    assert code == 0
    fields = dict(pair.split("=", 1) for pair in out.strip().split(","))
    assert fields["policy"] == "dynamic"
    assert float(fields["final_gap"]) >= 0
    assert int(fields["flex_count"]) >= 0


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["bins", "run", "--policy", "no_flex", "--T", "10",
                  "--warp", "9"])
    assert exc.value.code == 2


def test_bins_sweep_writes_csvs(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "bins", "sweep", "--policy", "no_flex",
                           "--policy", "static", "--T", "50,100",
                           "--N", "2", "--reps", "3", "--seed", "1",
                           "--out", str(tmp_path))
    assert code == 0
    raw, summary = out.strip().splitlines()
    assert (tmp_path / "bins_raw.csv").exists()
    lines = (tmp_path / "bins_raw.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 2 * 3


def test_opaque_run_and_sweep(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "opaque", "run", "--policy", "static",
                           "--S", "20", "--N", "3", "--cycles", "10",
                           "--seed", "0")
    assert code == 0
    fields = dict(pair.split("=", 1) for pair in out.strip().split(","))
    assert float(fields["cost"]) >= float(fields["lower_bound"]) - 0.05
    code, out, _ = run_cli(capsys, "opaque", "sweep", "--regime",
                           "delta_zero", "--S", "5,10", "--N", "3",
                           "--instances", "2", "--cycles", "2",
                           "--seed", "0", "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "opaque_delta_zero.csv").exists()
    assert (tmp_path / "plot.py").exists()
    assert list(tmp_path.glob("loss-vs-S_*.dat"))


def test_parcel_pipeline(capsys, tmp_path):
    corpus_path = str(tmp_path / "corpus.txt")
    code, out, _ = run_cli(capsys, "parcel", "gen-corpus", "--out",
                           corpus_path, "--zones", "3", "--pool-size",
                           "300", "--epsilon", "20", "--seed", "0")
    assert code == 0
    # patient policy without tables: actionable error
    code, out, err = run_cli(capsys, "parcel", "run", "--corpus",
                             corpus_path, "--policy", "patient_dynamic")
    assert code == 2
    assert "estimate-tables" in err
    # no-flex day runs without tables
    code, out, _ = run_cli(capsys, "parcel", "run", "--corpus", corpus_path,
                           "--policy", "no_flex", "--seed", "0")
    assert code == 0
    fields = dict(pair.split("=", 1) for pair in out.strip().split(","))
    assert fields["flex_count"] == "0"
    tables_path = str(tmp_path / "tables.txt")
    code, out, _ = run_cli(capsys, "parcel", "estimate-tables", "--corpus",
                           corpus_path, "--out", tables_path, "--reps", "2",
                           "--seed", "0")
    assert code == 0
    code, out, _ = run_cli(capsys, "parcel", "run", "--corpus", corpus_path,
                           "--tables", tables_path, "--policy",
                           "patient_dynamic", "--seed", "0")
    assert code == 0
    code, _, _ = run_cli(capsys, "parcel", "cluster", "--corpus",
                         corpus_path, "--epsilon", "20", "--seed", "0")
    assert code == 0


def test_invalid_policy_exits_2(capsys, tmp_path):
    corpus_path = str(tmp_path / "c.txt")
    code, _, _ = run_cli(capsys, "parcel", "gen-corpus", "--out", corpus_path,
                         "--zones", "2", "--pool-size", "100",
                         "--epsilon", "10", "--seed", "0")
    assert code == 0
    code, _, err = run_cli(capsys, "parcel", "run", "--corpus", corpus_path,
                           "--policy", "teleport")
    assert code == 2


def test_missing_corpus_exits_1(capsys):
    code, _, err = run_cli(capsys, "parcel", "run", "--corpus",
                           "/nonexistent/corpus.txt", "--policy", "no_flex")
    assert code == 1


def test_report_roundtrip(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "bins", "sweep", "--policy", "no_flex",
                           "--T", "50", "--reps", "4", "--seed", "2",
                           "--out", str(tmp_path))
    assert code == 0
    report_path = tmp_path / "report.csv"
    code, out, _ = run_cli(capsys, "report", "--raw",
                           str(tmp_path / "bins_raw.csv"), "--out",
                           str(report_path))
    assert code == 0
    text = report_path.read_text()
    assert text.startswith("schema_version")
    assert "final_gap" in text
