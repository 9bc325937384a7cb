"""Command-line interface: exit codes, flags, and written artifacts."""

import json
import math
import subprocess
import sys

import pytest

from perplab.census import census_table
from perplab.cli import main
from perplab.convex import point_set
from perplab.lattice import PSL2Z

LOOP_TOML = """
t_grid = [4.0, 5.0]

[set_minus]
kind = "point"
x = 0.0
y = 2.0

[set_plus]
kind = "point"
x = 0.0
y = 2.0
"""


@pytest.fixture
def loop_cfg(tmp_path):
    path = tmp_path / "loops.toml"
    path.write_text(LOOP_TOML)
    return path


def test_help_and_usage_exit_codes(capsys):
    assert main(["--help"]) == 0
    capsys.readouterr()
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    capsys.readouterr()


def test_missing_config_exits_one(tmp_path, capsys):
    code = main(["count", "--config", str(tmp_path / "absent.toml")])
    assert code == 1
    assert "absent.toml" in capsys.readouterr().err


def test_budget_overflow_exits_two(tmp_path, capsys):
    path = tmp_path / "tiny.toml"
    path.write_text("budget = 100\n" + LOOP_TOML)
    code = main(["census", "--config", str(path), "--out", str(tmp_path / "c.csv")])
    assert code == 2
    assert "budget" in capsys.readouterr().err


def test_masses_payload(tmp_path, capsys):
    out = tmp_path / "masses.json"
    assert main(["masses", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    payload = json.loads(out.read_text())
    assert json.loads(printed) == payload
    assert payload["group"] == "PSL2Z"
    assert payload["delta"] == 1.0
    assert payload["bm_total"] == pytest.approx(4 * math.pi**2 / 3, rel=1e-10)
    assert payload["sigma_minus"] == pytest.approx(2 * math.pi)
    assert payload["sigma_plus"] == pytest.approx(2 * math.pi)
    assert "rel_spread" in payload["diagnostics"]


def test_masses_cache_file(tmp_path, capsys):
    cache = tmp_path / "mass_cache.json"
    assert main(["masses", "--cache", str(cache)]) == 0
    assert cache.exists()
    first = json.loads(capsys.readouterr().out)
    assert main(["masses", "--cache", str(cache)]) == 0
    second = json.loads(capsys.readouterr().out)
    assert second == first


def test_census_command_writes_rows(tmp_path, loop_cfg, capsys):
    out = tmp_path / "census.csv"
    code = main(["census", "--config", str(loop_cfg), "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    want = census_table(PSL2Z, point_set(0, 2), point_set(0, 2), 5.0)
    assert len(lines) == 1 + len(want)
    assert str(len(want)) in capsys.readouterr().out


def test_count_with_t_max_override(tmp_path, loop_cfg, capsys):
    out = tmp_path / "count.csv"
    code = main(
        ["count", "--config", str(loop_cfg), "--t-max", "4.5", "--out", str(out)]
    )
    assert code == 0
    capsys.readouterr()
    rows = out.read_text().splitlines()[1:]
    ts = [float(r.split(",")[0]) for r in rows]
    assert ts == [4.0, 4.5]


def test_equi_command_rows(tmp_path, loop_cfg, capsys):
    out = tmp_path / "equi.csv"
    code = main(
        ["equi", "--config", str(loop_cfg), "--threads", "2", "--out", str(out)]
    )
    assert code == 0
    assert "rel_err" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert lines[0].startswith("t,N,")
    # two cutoffs, three default test functions
    assert len(lines) == 1 + 2 * 3


def test_weighted_defaults_to_flat_potential(tmp_path, loop_cfg, capsys):
    equi_out = tmp_path / "equi.csv"
    weighted_out = tmp_path / "weighted.csv"
    assert main(["equi", "--config", str(loop_cfg), "--out", str(equi_out)]) == 0
    assert (
        main(["weighted", "--config", str(loop_cfg), "--out", str(weighted_out)]) == 0
    )
    assert "delta_F=1" in capsys.readouterr().out
    assert weighted_out.read_text() == equi_out.read_text()


def test_directions_command(tmp_path, loop_cfg, capsys):
    out = tmp_path / "dirs.json"
    code = main(["directions", "--config", str(loop_cfg), "--out", str(out)])
    assert code == 0
    assert "tv_initial" in capsys.readouterr().out
    payload = json.loads(out.read_text())
    assert payload["bins"] == 36
    assert len(payload["rows"]) == 2
    for row in payload["rows"]:
        assert sum(row["initial"]) == pytest.approx(row["n"])


def test_loops_svg_command(tmp_path, loop_cfg, capsys):
    out = tmp_path / "loops.svg"
    code = main(
        ["loops-svg", "--config", str(loop_cfg), "--t-max", "0.6", "--out", str(out)]
    )
    assert code == 0
    assert "5 polylines" in capsys.readouterr().out
    text = out.read_text()
    assert text.startswith("<svg")
    assert text.count("<polyline") == 5


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out
    assert "FAIL" not in out


def test_installed_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "perplab.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "loops-svg" in proc.stdout
