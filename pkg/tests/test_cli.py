import json
import shutil
import subprocess
import xml.etree.ElementTree as ET

import pytest

from flatlens.cli import main

from test_covers import TORUS_CENSUS


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_covers_table(capsys):
    code, out, _ = run(capsys, "covers", "table")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0] == "d,w_h,w_v,n1,n2,n3,genus"
    rows = [tuple(map(int, l.split(",")))[:6] for l in lines[1:]]
    assert rows == TORUS_CENSUS
    code, out, _ = run(capsys, "covers", "table", "--format", "md")
    assert code == 0 and out.count("\n") >= 12


def test_covers_oracle(capsys):
    code, out, _ = run(capsys, "covers", "oracle", "--dmax", "12")
    assert code == 0
    assert out.strip() == "OK 0 mismatches"


def test_covers_orbit_and_genus(capsys):
    code, out, _ = run(capsys, "covers", "orbit", "6", "3", "1")
    assert code == 0 and "6,4,1" in out.splitlines()
    code, out, _ = run(capsys, "covers", "genus", "6", "3", "1")
    assert code == 0 and "1" in out


def test_config_commands(capsys, tmp_path):
    f = tmp_path / "g.json"
    code, _, _ = run(capsys, "config", "gamma-w", "--theta", "0.125", "--out", str(f))
    assert code == 0
    data = json.loads(f.read_text())
    assert len(data["lenses"]) == 3
    code, out, _ = run(capsys, "config", "check-admissible", str(f))
    assert code == 0 and json.loads(out)["admissible"] is True
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"lattice": [[1, 0], [0, 1]], "lenses": [{"c": [0, 0], "r": 0.6}]}))
    code, _, _ = run(capsys, "config", "check-admissible", str(bad))
    assert code == 2
    code, out, _ = run(capsys, "config", "to-slits", str(f), "--theta", "0.125")
    assert code == 0 and len(json.loads(out)["folds"]) == 3
    code, out, _ = run(capsys, "config", "separated")
    assert code == 0 and json.loads(out)["separated"] is True


def test_trace(capsys, tmp_path):
    prefix = str(tmp_path / "t")
    code, _, _ = run(capsys, "trace", "--builtin", "wollmilchsau", "--theta", "0.3",
                     "--path", "1000", "--out", prefix)
    assert code == 0
    head = open(prefix + ".csv").readline().strip()
    assert head == "path_length,x,y,deck_i,deck_j,event_kind"
    assert ET.parse(prefix + ".svg").getroot().tag.endswith("svg")


def test_trace_errors(capsys):
    code, _, err = run(capsys, "trace", "--builtin", "nonesuch", "--theta", "0.3")
    assert code == 1 and "unknown model" in err
    code, _, _ = run(capsys, "trace", "--theta", "0.3", "--bogus")
    assert code == 1


def test_iet_commands(capsys):
    code, out, _ = run(capsys, "iet", "extract", "--theta", "0.1024")
    assert code == 0
    d = json.loads(out)
    assert {"lengths", "images", "tau", "xi"} <= set(d)
    code, out, _ = run(capsys, "iet", "rigidity", "--theta", "0.1024", "--hmax", "100")
    assert code == 0
    assert "candidates" in json.loads(out)


def test_experiment_exit_code(capsys, tmp_path):
    out = tmp_path / "s.json"
    code, _, _ = run(capsys, "experiment", "trapping", "--thetas", "2", "--path", "2000",
                     "--out", str(out))
    summary = json.loads(out.read_text())
    assert code == (0 if summary["pass"] else 2)
    assert len(summary["records"]) == 2


@pytest.mark.skipif(shutil.which("flatlens") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["flatlens", "covers", "table"], capture_output=True, text=True)
    assert res.returncode == 0
    assert len(res.stdout.strip().splitlines()) == 11
