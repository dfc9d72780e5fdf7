"""Command-line contract: exit codes, report schema, artifact round-trips,
and deterministic re-runs."""

import json

import numpy as np
import pytest

from fracground import cli
from fracground.grids import Field, make_grid
from fracground.reports import (
    Report,
    check_leq,
    field_from_csv,
    field_to_csv,
)


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path)])


def test_solve_exit_zero_and_report(tmp_path, capsys):
    code = run(tmp_path, "solve", "--s", "1.0", "--alpha", "2",
               "--L", "128", "--N", "2048")
    assert code == 0
    payload = json.loads((tmp_path / "solve" / "report.json").read_text())
    assert payload["schema_version"] == 1
    assert payload["command"] == "solve"
    assert payload["all_passed"] is True
    assert all(c["status"] == "pass" for c in payload["ledger"])
    assert (tmp_path / "solve" / "solution.csv").exists()
    out = capsys.readouterr().out
    assert out.count("[pass]") == len(payload["ledger"])
    assert "all checks passed" in out


def test_spectrum_exit_zero(tmp_path):
    code = run(tmp_path, "spectrum", "--s", "1.0", "--alpha", "2",
               "--L", "128", "--N", "2048")
    assert code == 0
    payload = json.loads((tmp_path / "spectrum" / "report.json").read_text())
    names = {c["name"] for c in payload["ledger"]}
    assert {"morse_even", "translation_kernel", "odd_zero_mode"} <= names


def test_csv_round_trip_is_exact(tmp_path):
    grid = make_grid(37.5, 256)
    rng = np.random.default_rng(7)
    f = Field(grid, rng.standard_normal(grid.n) * np.exp(-grid.x ** 2 / 9))
    path = tmp_path / "field.csv"
    field_to_csv(f, path)
    g = field_from_csv(path)
    assert g.grid.length == grid.length and g.grid.n == grid.n
    assert np.array_equal(g.values, f.values)


def test_bad_flag_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "solve", "--no-such-flag")
    assert exc.value.code == 2


def test_supercritical_rejected(tmp_path, capsys):
    code = run(tmp_path, "solve", "--s", "0.25", "--alpha", "3")
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_grid_flags_must_pair(tmp_path):
    assert run(tmp_path, "solve", "--s", "1.0", "--L", "64") == 2


def test_deterministic_rerun(tmp_path):
    assert run(tmp_path / "a", "kernels", "--s", "0.5") == 0
    assert run(tmp_path / "b", "kernels", "--s", "0.5") == 0
    first = (tmp_path / "a" / "kernels" / "report.json").read_text()
    second = (tmp_path / "b" / "kernels" / "report.json").read_text()
    assert first == second


def test_solve_rerun_matches_up_to_timings(tmp_path):
    for sub in ("a", "b"):
        assert run(tmp_path / sub, "solve", "--s", "1.0", "--alpha", "1",
                   "--L", "64", "--N", "512") == 0
    payloads = []
    for sub in ("a", "b"):
        p = json.loads((tmp_path / sub / "solve" / "report.json").read_text())
        p["results"].pop("wall_time")
        payloads.append(p)
    assert payloads[0] == payloads[1]


def test_env_var_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("FRACGROUND_OUT", str(tmp_path / "envroot"))
    monkeypatch.chdir(tmp_path)
    assert cli.main(["extend", "--s", "0.5"]) == 0
    assert (tmp_path / "envroot" / "extend" / "report.json").exists()
    assert (tmp_path / "envroot" / "extend" / "extension.csv").exists()


def test_failed_check_exits_one(tmp_path, monkeypatch, capsys):
    def broken(args):
        return Report("solve", {}, {},
                      [check_leq("impossible", "always fails", 2.0, 1.0)])

    monkeypatch.setattr(cli, "cmd_solve", broken)
    assert run(tmp_path, "solve") == 1
    assert "[FAIL] impossible" in capsys.readouterr().out


def test_verify_all(tmp_path):
    assert run(tmp_path, "verify-all") == 0
    payload = (tmp_path / "verify-all" / "report.json").read_text()
    payload = json.loads(payload)
    assert payload["all_passed"] is True
    assert len(payload["ledger"]) == 5
