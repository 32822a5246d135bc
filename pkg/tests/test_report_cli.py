"""CSV output and the command-line interface."""
import dataclasses
import math
from pathlib import Path

import pytest

from astars_nav import cli, report
from astars_nav.config import ScenarioConfig
from astars_nav.montecarlo import run_monte_carlo

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("v, s", [(1.0, "1"), (0.1 + 0.2, "0.3"), (3, "3"), (True, "true"), ("a", "a"),
                                   (math.nan, "nan"), (1.23456789012e-9, "1.23456789e-09")])
def test_format_value(v, s):
    assert report.format_value(v) == s


def test_render_csv_order():
    text = report.render_csv([{"b": 2, "a": 1.5}], ("a", "b"))
    assert text == "a,b\n1.5,2\n"


def test_emit_csv_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(report.ReportIOError):
        report.emit_csv([], blocker / "x.csv", ("a",))


def test_summary_rows_columns():
    res = run_monte_carlo(dataclasses.replace(ScenarioConfig(), trials=5))
    rows = report.summary_rows(res)
    assert len(rows) == 4
    assert all(set(report.SUMMARY_COLUMNS) <= set(r) for r in rows)
    assert len(report.trial_rows(res)) == 10


def test_budget_rows():
    rows = report.budget_rows(dataclasses.replace(ScenarioConfig(), trials=10))
    assert {(r["rx_name"], r["dop_mode"]) for r in rows} == {
        ("urban", "single"), ("urban", "literal"), ("indoor", "single"), ("indoor", "literal")}
    for r in rows:
        parts = r["phase_shift_m"] + r["beamwidth_m"] + r["timesync_m"] + r["dop_scaled_m"]
        assert r["total_m"] == pytest.approx(parts)


@pytest.mark.parametrize("command, files", [
    ("simulate", ["trials.csv", "summary.csv"]),
    ("dop", ["dop.csv", "dop_trials.csv"]),
    ("beamwidth", ["beamwidth.csv"]),
    ("timesync", ["timesync.csv"]),
    ("budget", ["budget.csv"]),
])
def test_cli_commands(tmp_path, command, files):
    code = cli.main(["--trials", "4", "--out", str(tmp_path), command, str(CONFIGS / "default.toml")])
    assert code == 0
    for f in files:
        assert (tmp_path / f).read_text().count("\n") >= 2


def test_cli_sweep(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text(f'base = "{CONFIGS / "default.toml"}"\nvariable = "sat_count"\nvalues = [6, 8]\n')
    assert cli.main(["sweep", str(p), "--trials", "3", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "sweep.csv").read_text().splitlines()[0] == ",".join(report.SWEEP_COLUMNS)


def test_cli_global_flags_after_command(tmp_path):
    assert cli.main(["timesync", str(CONFIGS / "default.toml"), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "timesync.csv").exists()


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("trials = -1\n")
    assert cli.main(["simulate", str(bad), "--out", str(tmp_path)]) == 1
    assert cli.main(["simulate", str(tmp_path / "missing.toml")]) == 3
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert cli.main(["timesync", str(CONFIGS / "default.toml"), "--out", str(blocker)]) == 3
    masked = tmp_path / "masked.toml"
    masked.write_text("trials = 4\n[constellation]\npdop_mask = 0.5\n")
    assert cli.main(["simulate", str(masked), "--out", str(tmp_path / "m")]) == 2
    assert (tmp_path / "m" / "summary.csv").exists()


def test_cli_requires_command():
    with pytest.raises(SystemExit):
        cli.main([])
