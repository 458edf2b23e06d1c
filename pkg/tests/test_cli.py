import json
import subprocess
import sys

import pytest


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "grpdim.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture(scope="module")
def instances(tmp_path_factory):
    root = tmp_path_factory.mktemp("instances")
    p7 = root / "p7.json"
    p7g = root / "p7.graphing.json"
    assert run_cli("build", "--family", "pair", "--n", "7",
                   "--out", str(p7), "--graphing-out", str(p7g)).returncode == 0
    t3 = root / "t3.json"
    t3g = root / "t3.graphing.json"
    assert run_cli("build", "--family", "tree", "--shape", "binary:3",
                   "--out", str(t3), "--graphing-out", str(t3g)).returncode == 0
    return root


def test_validate_ok_and_corrupt(instances, tmp_path):
    res = run_cli("validate", str(instances / "p7.json"))
    assert res.returncode == 0 and "ok" in res.stdout

    obj = json.loads((instances / "p7.json").read_text())
    obj["comp"][0][2] = (obj["comp"][0][2] + 1) % (obj["units"] + len(obj["arrows"]))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(obj))
    res = run_cli("validate", str(bad))
    assert res.returncode == 1 and "invalid" in res.stdout


def test_validate_directory_sweep(instances):
    # graphing sidecars are not instances, so the sweep flags them
    res = run_cli("validate", str(instances))
    assert res.returncode == 1
    lines = [l for l in res.stdout.splitlines() if l.strip()]
    assert len(lines) == 4
    assert sum("\tok\t" in l for l in lines) == 2
    assert sum("invalid" in l for l in lines) == 2


def test_dad_exit_codes(instances, tmp_path):
    p7 = str(instances / "p7.json")
    p7g = str(instances / "p7.graphing.json")
    found = run_cli("dad", p7, "--graphing", p7g, "--out", str(tmp_path / "w"))
    assert found.returncode == 0 and "d=1" in found.stdout
    none = run_cli("dad", p7, "--graphing", p7g, "--l-spec", "power:K:2",
                   "--d-max", "0")
    assert none.returncode == 1 and "none" in none.stdout
    bad = run_cli("dad", p7, "--k-spec", "nonsense")
    assert bad.returncode == 2
    trivial = run_cli("dad", p7, "--graphing", p7g, "--l-spec", "all")
    assert trivial.returncode == 0 and "d=0" in trivial.stdout


def test_dad_recheck(instances, tmp_path):
    p7 = str(instances / "p7.json")
    p7g = str(instances / "p7.graphing.json")
    out = tmp_path / "w"
    assert run_cli("dad", p7, "--graphing", p7g, "--out", str(out)).returncode == 0
    res = run_cli("dad", p7, "--recheck", str(out / "dad-witness.json"))
    assert res.returncode == 0 and "certified" in res.stdout


def test_asdim_fiber_and_tree(instances, tmp_path):
    p7 = str(instances / "p7.json")
    p7g = str(instances / "p7.graphing.json")
    res = run_cli("asdim", p7, "--points", "fiber:0", "--e-spec", "ball:1",
                  "--f-spec", "power:K:2", "--graphing", p7g, "--d-max", "1")
    assert res.returncode == 0 and "d=1" in res.stdout
    t3 = str(instances / "t3.json")
    t3g = str(instances / "t3.graphing.json")
    res = run_cli("asdim", t3, "--mode", "tree:1", "--graphing", t3g,
                  "--out", str(tmp_path / "tree"))
    assert res.returncode == 0 and "certified" in res.stdout


def test_theorem_bridge_and_morita(instances, tmp_path):
    p7 = str(instances / "p7.json")
    p7g = str(instances / "p7.graphing.json")
    res = run_cli("theorem", "bridge", "--path", p7, "--graphing", p7g,
                  "--out", str(tmp_path / "b"))
    assert res.returncode == 0 and "certified=True" in res.stdout
    res = run_cli("theorem", "morita", "--path", p7, "--graphing", p7g,
                  "--l-spec", "power:K:1", "--multiplicity", "2",
                  "--out", str(tmp_path / "m"))
    assert res.returncode == 0


def test_theorem_union(instances, tmp_path):
    p7 = str(instances / "p7.json")
    p7g = str(instances / "p7.graphing.json")
    res = run_cli("theorem", "union", "--path", p7, "--graphing", p7g,
                  "--parts", "0-3;4-6", "--out", str(tmp_path / "u"))
    assert res.returncode == 0 and "certified=True" in res.stdout


def test_sweep_line(instances):
    p7 = str(instances / "p7.json")
    p7g = str(instances / "p7.graphing.json")
    res = run_cli("sweep", p7, "--windows", "4-7", "--graphing", p7g)
    assert res.returncode == 0
    rows = [l for l in res.stdout.splitlines() if "\td=" in l]
    assert [r.split("\t")[1] for r in rows] == ["d=1"] * 4


def test_artifacts_are_deterministic(instances, tmp_path):
    p7 = str(instances / "p7.json")
    p7g = str(instances / "p7.graphing.json")
    outs = []
    for name in ("one", "two"):
        out = tmp_path / name
        res = run_cli("dad", p7, "--graphing", p7g, "--out", str(out))
        assert res.returncode == 0
        outs.append((out / "dad-witness.json").read_bytes())
    assert outs[0] == outs[1]

    trees = []
    for name in ("t1", "t2"):
        out = tmp_path / name
        res = run_cli("theorem", "bridge", "--path", p7, "--graphing", p7g,
                      "--out", str(out))
        assert res.returncode == 0
        trees.append(sorted(
            (p.name, p.read_bytes()) for p in out.iterdir()
        ))
    assert trees[0] == trees[1]


def test_asdim_diagonal_gauges_zero_dim(instances):
    p7 = str(instances / "p7.json")
    res = run_cli("asdim", p7, "--points", "fiber:0", "--e-spec", "units",
                  "--f-spec", "units", "--d-max", "1")
    assert res.returncode == 0 and "d=0" in res.stdout


def test_asdim_arrow_space(instances):
    p7 = str(instances / "p7.json")
    p7g = str(instances / "p7.graphing.json")
    res = run_cli("asdim", p7, "--points", "arrows", "--e-spec", "ball:1",
                  "--f-spec", "power:K:3", "--graphing", p7g, "--d-max", "1")
    assert res.returncode == 0 and "d=1" in res.stdout
