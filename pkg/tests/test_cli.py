import json

import numpy as np
import pytest

from johncentroid.cli import run
from johncentroid.geom import HPolytope

from conftest import cube


@pytest.fixture
def cube_file(tmp_path):
    path = tmp_path / "cube.json"
    cube(3).save(path)
    return str(path)


def _result(path):
    return json.load(open(path))["result"]


def test_construct_roundtrips_into_john(tmp_path):
    out = tmp_path / "q.json"
    assert run(["construct", "--body", "q", "--n", "5", "--out", str(out)]) == 0
    assert HPolytope.load(out).n_rows == 9
    assert json.load(open(f"{out}.config.json"))["command"] == "construct"
    rep = tmp_path / "j.json"
    assert run(["john", "--in", str(out), "--out", str(rep)]) == 0
    assert _result(rep)["is_john_position"]


def test_profile_grid(tmp_path):
    out = tmp_path / "p.csv"
    assert run(["construct", "--body", "p", "--n", "64", "--profile-grid", "5", "--out", str(out)]) == 0
    lines = open(out).read().splitlines()
    assert lines[0] == "theta_seed,t,rho" and len(lines) == 6


def test_cone_centroid(tmp_path):
    out = tmp_path / "c.json"
    assert run(["centroid", "--body", "cone", "--n", "50", "--samples", "10", "--out", str(out)]) == 0
    res = _result(out)
    assert res["t_hat"] == pytest.approx(50.0, rel=1e-12) and res["stderr"] == 0.0


def test_exit_codes(tmp_path, capsys, cube_file):
    assert run(["nonsense"]) == 1
    assert "usage" in capsys.readouterr().err
    assert run(["centroid", "--body", "k"]) == 1
    assert run(["john", "--in", str(tmp_path / "missing.json")]) == 1
    assert run(["halfvolume", "--body", "k", "--n", "64", "--R", "21", "--samples", "2000",
                "--out", str(tmp_path / "h.json")]) == 3
    assert run(["halfvolume", "--body", "k", "--n", "64", "--R", "5", "--samples", "2000",
                "--out", str(tmp_path / "h.json")]) == 0


def test_sample_command(tmp_path, cube_file):
    out = tmp_path / "pts.csv"
    assert run(["sample", "--in", cube_file, "--count", "50", "--method", "har", "--out", str(out)]) == 0
    pts = np.loadtxt(out, delimiter=",", skiprows=1)
    assert pts.shape == (50, 3) and np.all(np.abs(pts) <= 1)


def test_replay_and_threads(tmp_path):
    a, b, c = (str(tmp_path / f"{k}.csv") for k in "abc")
    args = ["sweep", "--body", "k", "--n-list", "64,128", "--samples", "1000", "--seed", "7"]
    assert run(args + ["--out", a]) == 0
    assert run(args + ["--out", b, "--threads", "8"]) == 0
    assert run(["replay", "--config", a + ".config.json", "--out", c]) == 0
    assert open(a).read() == open(b).read() == open(c).read()


@pytest.mark.parametrize("test", ["cap", "lipschitz", "badsets", "gaussian", "borell", "smallball", "moments"])
def test_concentration_commands(tmp_path, test):
    out = tmp_path / "r.json"
    assert run(["concentration", "--test", test, "--n", "64" if test not in ("borell", "smallball", "moments") else "4",
                "--samples", "2000", "--out", str(out)]) == 0
    assert "result" in json.load(open(out))
