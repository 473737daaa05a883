import json
import subprocess
import sys

import pytest

from supq.cli import main
from supq.threshold import load_published


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_n0_published_cells(capsys):
    code, out, _ = run(capsys, "n0", "--p", "1", "--q", "1", "--m", "3", "--l", "0")
    assert code == 0 and out.splitlines()[0] == "n0=7"
    code, out, _ = run(capsys, "n0", "--p", "2", "--q", "2", "--m", "20", "--l", "12", "--json")
    assert code == 0 and json.loads(out)["n0"] == 7


def test_n0_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["n0", "--p", "1", "--q", "1", "--m", "2", "--l", "0", "--bogus"])
    assert info.value.code == 64
    assert run(capsys, "n0", "--p", "1", "--q", "1", "--m", "2", "--l", "0")[0] == 64
    assert run(capsys, "n0", "--p", "2", "--q", "1", "--m", "7", "--l", "1")[0] == 64
    assert run(capsys, "n0", "--p", "1", "--q", "2", "--m", "7", "--l", "1")[0] == 64
    with pytest.raises(SystemExit) as info:
        main(["n0", "--p", "1", "--m", "3"])
    assert info.value.code == 64


def test_n0_undecided_exit_code(capsys):
    code, out, _ = run(capsys, "n0", "--p", "1", "--q", "1", "--m", "3", "--l", "11")
    assert code == 2 and out.startswith("undecided")
    code, out, _ = run(capsys, "n0", "--p", "1", "--q", "1", "--m", "3", "--l", "11", "--margin", "1e-7")
    assert code == 0 and out.startswith("n0=56")


def test_n0_general_polynomial(capsys):
    code, out, _ = run(capsys, "n0", "--p", "2", "--q", "1", "--m", "7", "--f", "sum: z[1][1]")
    assert code == 0 and out.startswith("n0=6")


def test_table_subset_csv(capsys):
    code, out, _ = run(capsys, "table", "--p", "1", "--m", "3..4", "--l", "0..1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "l,m,n0" and len(lines) == 5
    gold = load_published(1)
    assert lines[1:] == [f"{l},{m},{gold[(l, m)]}" for l in (0, 1) for m in (3, 4)]


def test_table_check_against_published_p1(capsys):
    code, out, _ = run(capsys, "table", "--p", "1", "--check-paper", "--margin", "1e-7")
    assert code == 0 and out.splitlines()[0] == "169/169 match"
    # at the default margin one cell stays within 1e-6 of 1/2 and is reported, not guessed
    code, out, _ = run(capsys, "table", "--p", "1", "--check-paper")
    assert code == 2 and "168/169 match" in out and "l=11 m=3" in out


def test_table_json(capsys):
    code, out, _ = run(capsys, "table", "--p", "2", "--m", "7..8", "--l", "0", "--format", "json")
    rows = json.loads(out)
    assert code == 0 and [r["m"] for r in rows] == [7, 8]


def test_table_usage(capsys):
    assert run(capsys, "table", "--p", "3")[0] == 64
    assert run(capsys, "table", "--p", "2", "--m", "5..7", "--l", "0")[0] == 64


def test_verify_rootdata(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "rootdata")
    assert code == 0 and "FAIL" not in out
    assert out.splitlines()[-1].endswith("0 failed")


def test_verify_deterministic(capsys):
    first = run(capsys, "verify", "--suite", "quadrature", "--seed", "7")
    second = run(capsys, "verify", "--suite", "quadrature", "--seed", "7")
    assert first == second and first[0] == 0


def test_poincare(capsys):
    code, out, _ = run(capsys, "poincare", "--p", "1", "--q", "1", "--N", "3", "--m", "4", "--l", "0",
                       "--z", "0,0", "--bounds", "2,200")
    lines = [json.loads(s) for s in out.splitlines()]
    assert code == 0 and lines[0]["partial_value"] == [1.0, 0.0] and lines[0]["terms_used"] == 1
    assert lines[1]["bound"] == 200 and lines[1]["terms_used"] > 1
    assert run(capsys, "poincare", "--p", "1", "--q", "1", "--N", "3", "--m", "4",
               "--z", "1.5,0", "--bounds", "2")[0] == 64
    assert run(capsys, "poincare", "--p", "1", "--q", "1", "--N", "2", "--m", "4",
               "--z", "0,0", "--bounds", "2")[0] == 64


def test_poincare_z_json(capsys):
    z = json.dumps([[[0.1, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.1, 0.2]]])
    code, out, _ = run(capsys, "poincare", "--p", "2", "--q", "2", "--N", "3", "--m", "7",
                       "--z-json", z, "--bounds", "4")
    assert code == 0 and json.loads(out)["terms_used"] == 1


def test_enumerate(capsys):
    code, out, _ = run(capsys, "enumerate", "--p", "1", "--q", "1", "--N", "3", "--bound", "38")
    recs = [json.loads(s) for s in out.splitlines()]
    assert code == 0 and recs[0]["norm_sq"] == 2 and all(r["level"] == 3 for r in recs)
    assert {r["norm_sq"] for r in recs} == {2, 38}
    assert run(capsys, "enumerate", "--p", "2", "--q", "1", "--N", "1", "--bound", "200", "--cap", "10")[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "supq", "n0", "--p", "1", "--m", "4", "--l", "0"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("n0=3")
