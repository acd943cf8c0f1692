import json
import math
import subprocess
import sys

import pytest

from sdspace.cli import EXIT_FAILED, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_integrate_catalog_function(capsys, tmp_path):
    report = tmp_path / "r.jsonl"
    code, out, _ = run(capsys, "integrate", "hk_osc", "0", "1", "--probe", "--out", str(report))
    assert code == EXIT_OK
    value = float(out.split()[0])
    assert abs(value - math.sin(1)) <= 2e-6
    assert "exceed 10" in out
    lines = [json.loads(x) for x in report.read_text().splitlines()]
    assert lines[0]["kind"] == "header" and lines[-1]["failed"] == 0


def test_integrate_inline_expression(capsys):
    code, out, _ = run(capsys, "integrate", "1/sqrt(x1)", "0", "1", "--sing", "0", "--tol", "1e-9")
    assert code == EXIT_OK and abs(float(out.split()[0]) - 2.0) <= 1e-8
    code, out, _ = run(capsys, "integrate", "exp(-x1^2)", "--", "-1", "1")
    assert code == EXIT_OK and abs(float(out.split()[0]) - math.sqrt(math.pi) * math.erf(1)) <= 1e-6
    assert run(capsys, "integrate", "exp(-x1^2)", "0", "inf")[0] == EXIT_USAGE


def test_integrate_errors(capsys):
    assert run(capsys, "integrate", "x1 +", "0", "1")[0] == EXIT_USAGE
    assert run(capsys, "integrate", "1/x1", "-1", "1", "--sing", "0")[0] == EXIT_NUMERIC
    assert run(capsys, "integrate", "bump2", "0", "1")[0] == EXIT_USAGE
    assert run(capsys, "integrate", "x1", "0", "abc")[0] == EXIT_USAGE
    assert run(capsys)[0] == EXIT_USAGE


def test_sdnorm(capsys):
    code, out, _ = run(capsys, "sdnorm", "indicator_01", "--K", "10")
    assert code == EXIT_OK and "tail <= 0.000977" in out
    code, out, _ = run(capsys, "sdnorm", "hk_osc")
    assert code == EXIT_OK and "0.1647173884" in out and "non-L1 input" in out
    code, out, _ = run(capsys, "sdnorm", "x1*x2", "--support", "0,1;0,1", "--K", "8")
    assert code == EXIT_OK and "truncated, uncertified" in out
    assert run(capsys, "sdnorm", "x1*x2", "--support", "0,1")[0] == EXIT_USAGE
    assert run(capsys, "sdnorm", "tent", "--m", "1")[0] == EXIT_USAGE
    assert run(capsys, "sdnorm", "no_such_thing(")[0] == EXIT_USAGE


def test_sdnorm_derivatives(capsys):
    code, out, _ = run(capsys, "sdnorm", "bump", "--m", "1", "--p", "3", "--K", "10")
    assert code == EXIT_OK and "SD^3" in out


def test_verify_exit_codes(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "kuelbs")
    assert code == EXIT_OK and out.splitlines()[-1] == '{"failed":0,"kind":"summary","passed":100}'
    out_file = tmp_path / "ws.jsonl"
    code, out, _ = run(capsys, "verify", "weakstrong", "--out", str(out_file))
    assert code == EXIT_FAILED and "failed" in out and out_file.exists()


def test_extra_catalog(capsys, tmp_path):
    cat = tmp_path / "cat.txt"
    cat.write_text("ramp = x1 @ order=1 support=[0,2] sup=2\n")
    code, out, _ = run(capsys, "integrate", "ramp", "0", "2", "--catalog", str(cat))
    assert code == EXIT_OK and float(out.split()[0]) == pytest.approx(2.0)
    bad = tmp_path / "bad.txt"
    bad.write_text("ramp x1\n")
    assert run(capsys, "sdnorm", "ramp", "--catalog", str(bad))[0] == EXIT_USAGE
    assert run(capsys, "sdnorm", "ramp", "--catalog", str(tmp_path / "missing"))[0] == EXIT_USAGE


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "sdspace.cli", "integrate", "sin_pi", "0", "pi"],
                       capture_output=True, text=True, timeout=60)
    assert r.returncode == 0 and r.stdout.startswith("2 ")
