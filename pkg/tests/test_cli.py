import json
import subprocess
import sys

import pytest

from sawperc.cli import COMMANDS, main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_enum_csv(capsys):
    code, out = run(capsys, "enum", "--d", "2", "--n", "4")
    assert code == 0
    lines = out.out.splitlines()
    assert lines[0] == "N,count,root,castor_term"
    assert [int(l.split(",")[1]) for l in lines[1:]] == [4, 12, 36, 100]


def test_enum_json(capsys):
    code, out = run(capsys, "enum", "--d", "3", "--n", "3", "--format", "json")
    data = json.loads(out.out)
    assert code == 0 and [r["count"] for r in data["rows"]] == [6, 30, 150]


def test_thresholds(capsys):
    code, out = run(capsys, "thresholds", "--d", "10", "--eps", "0", "--format", "json")
    rows = json.loads(out.out)["rows"]
    assert code == 0 and len(rows) == 9
    assert rows[-1]["threshold_bound"] == pytest.approx(0.0530099, abs=5e-8)
    assert all(r["gap"] > 0 for r in rows)


def test_thresholds_large_eps_gap_is_negative(capsys):
    code, out = run(capsys, "thresholds", "--d", "4", "--eps", "1.0")
    assert code == 0
    assert all(float(l.split(",")[3]) < 0 for l in out.out.splitlines()[1:])


def test_bridges_and_out_file(capsys, tmp_path):
    dest = tmp_path / "b.csv"
    code, _ = run(capsys, "bridges", "--n", "100", "--trials", "3", "--out", str(dest))
    assert code == 0
    lines = dest.read_text().splitlines()
    assert lines[0] == "trial,N,p,d,sizeA,sizeB,sizeC,floor_log2" and len(lines) == 4


def test_census_and_quenched(capsys):
    code, out = run(capsys, "census", "--n", "60", "--trials", "4", "--format", "json")
    assert code == 0 and "p_good" in json.loads(out.out)["summary"]
    code, out = run(capsys, "quenched", "--d", "2", "--n", "5", "--p", "0.9", "--trials", "2")
    assert code == 0 and out.out.startswith("trial,attempt,n,Z")


def test_bad_input_exits_two(capsys):
    code, out = run(capsys, "enum", "--d", "6", "--n", "40")
    assert code == 2 and "budget" in out.err
    code, out = run(capsys, "quenched", "--p", "1.5")
    assert code == 2


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_module_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "sawperc", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert all(name in res.stdout for name in COMMANDS)
