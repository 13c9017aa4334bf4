import json
import subprocess
import sys

import pytest

from cosserat.cli import OUTPUT_DIR_ENV, bundled_scenarios, main
from cosserat.report import TIMING_MARKER, comparable_section

BAD_EXPR = """
name = "bad"
kind = "compatibility"

[grid]
extents = [5, 5]

[chi]
translation = ["sin(rho1", "0", "0"]

[checks]
dislocation = 1.0
"""


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_passing_run_exits_zero(capsys):
    code, out, err = run(capsys, "run", "rigid-motion")
    assert code == 0 and err == ""
    assert "overall: PASS" in out
    assert TIMING_MARKER in out


def test_failing_check_exits_one(capsys):
    code, out, _ = run(capsys, "run", "helix", "--tol-scale", "1e-6")
    assert code == 1
    assert "overall: FAIL" in out


def test_malformed_file_exits_two_naming_field(capsys, tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text(BAD_EXPR)
    code, out, err = run(capsys, "run", str(path))
    assert code == 2 and out == ""
    assert err.startswith("error: chi.translation[0]: syntax error")
    assert "at column 4" in err
    code, _, err = run(capsys, "validate", str(path))
    assert code == 2


def test_toml_parse_error_exits_two(capsys, tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text('kind = "compatibility"\n[grid\n')
    code, _, err = run(capsys, "run", str(path))
    assert code == 2 and "line 2" in err


def test_missing_file_exits_two(capsys, tmp_path):
    code, _, err = run(capsys, "run", str(tmp_path / "absent.toml"))
    assert code == 2 and "cannot read" in err


def test_bad_flags_exit_two(capsys):
    assert run(capsys, "run", "rigid-motion", "--tol-scale", "-1")[0] == 2
    assert run(capsys, "study", "chain-study", "--levels", "2")[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["run", "rigid-motion", "--format", "xml"])
    assert info.value.code == 2


def test_numerical_failure_exits_one(capsys, tmp_path):
    path = tmp_path / "singular.toml"
    path.write_text(
        """
name = "singular"
kind = "rod-solve"

[grid]
extents = [5]

[law]
name = "linear-cosserat"
lam = 0.0
mu = 0.0
kappa = 0.0
gamma = 0.0

[bc.start]
kind = "fixed"

[bc.end]
kind = "free"
force = [1.0, 0.0, 0.0]

[checks]
newton_residual = 1e-8
"""
    )
    code, _, err = run(capsys, "run", str(path))
    assert code == 1
    assert "numerical failure" in err and "singular" in err


def test_validate_and_list(capsys):
    code, out, _ = run(capsys, "validate", "rod-manufactured")
    assert code == 0 and "valid rod-solve scenario" in out
    code, out, _ = run(capsys, "list")
    assert code == 0
    assert [line.split("\t")[0] for line in out.splitlines()] == list(bundled_scenarios())


def test_records_format_is_json_lines(capsys):
    code, out, _ = run(capsys, "run", "rod-manufactured", "--format", "records")
    assert code == 0
    recs = [json.loads(line) for line in out.splitlines()]
    kinds = [r["record"] for r in recs]
    assert kinds[0] == "scenario" and kinds[-2:] == ["summary", "timing"]
    assert "trace" in kinds and "row" in kinds
    assert recs[-2]["pass"] is True
    iters = [r["iteration"] for r in recs if r["record"] == "trace"]
    assert iters == list(range(len(iters)))


def test_numbers_use_17_digits(capsys):
    _, out, _ = run(capsys, "run", "helix", "--format", "records")
    check = next(json.loads(line) for line in out.splitlines() if '"check"' in line)
    assert check["tol"] == 1e-3
    # round-tripping through the printed text is exact
    assert float(repr(check["inf"])) == check["inf"]


def test_out_and_output_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    code, out, _ = run(capsys, "run", "rigid-motion", "--out", "reports/r.txt")
    assert code == 0 and out == ""
    text = (tmp_path / "reports" / "r.txt").read_text()
    assert "overall: PASS" in text
    absolute = tmp_path / "abs.txt"
    run(capsys, "run", "rigid-motion", "--out", str(absolute))
    assert absolute.exists()


def test_study_command(capsys):
    code, out, _ = run(capsys, "study", "constant-study", "--levels", "3")
    assert code == 0
    assert "exact,exact" in out and "PASS (exact)" in out
    code, out, _ = run(capsys, "study", "chain-study")
    assert code == 0
    assert "# columns" in out and "level h dislocation disclination" in out


def test_repeated_runs_identical(capsys):
    for fmt in ("table", "records"):
        a = run(capsys, "run", "rod-cantilever", "--format", fmt)[1]
        b = run(capsys, "run", "rod-cantilever", "--format", fmt)[1]
        assert comparable_section(a) == comparable_section(b)
        assert len(comparable_section(a)) < len(a)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cosserat", "list"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "rigid-motion" in proc.stdout
