import csv
import json

import pytest

from metricgraph.cli import run_command
from metricgraph.graph import load_graph, validate

TABLE = (0.2347645148, 0.4657835674, 0.480197067, 0.8078723081, 1.3322287766, 1.379308786)


@pytest.fixture
def g14_file(tmp_path):
    path = tmp_path / "g14.json"
    assert run_command(["generate", "g14", "--out", str(path)]).exit_code == 0
    return path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_spectrum_csv(tmp_path, g14_file):
    out = tmp_path / "s.csv"
    res = run_command(["spectrum", "--graph", str(g14_file), "--kmin", "0", "--kmax", "1.4", "--out", str(out)])
    assert res.exit_code == 0 and res.artifacts == [str(out)]
    rows = _rows(out)
    assert list(rows[0]) == ["q", "k", "multiplicity", "residual"]
    ks = [float(r["k"]) for r in rows]
    for k in TABLE:
        assert min(abs(k - x) for x in ks) < 1e-6


def test_missing_graph_is_domain_error(tmp_path):
    out = tmp_path / "s.csv"
    res = run_command(["spectrum", "--graph", str(tmp_path / "missing.json"), "--kmax", "1", "--out", str(out)])
    assert res.exit_code == 1 and res.artifacts == []
    assert "IO_ERROR" in res.summary
    assert not out.exists()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["nonsense"],
        ["spectrum", "--graph", "g.json"],
        ["spectrum", "--graph", "g.json", "--kmax", "abc"],
        ["certify", "hexagon", "--length", "1", "--k", "1"],
        ["resonance", "--graph", "g.json", "--arcs", "1,2", "--shape", "blob"],
        ["spectrum", "-g", "g.json", "--kmax", "1"],
    ],
)
def test_usage_errors(argv):
    assert run_command(argv).exit_code == 2


def test_certify():
    res = run_command(["certify", "single_arc", "--length", "1.7", "--k", "2.3"])
    assert res.exit_code == 0
    assert res.summary == "rank 2/2: no localized eigenvector"
    res = run_command(["certify", "degree3_star", "--length", "1,1.3", "--length", "2.1", "--k", "0.7"])
    assert res.summary == "rank 6/6: no localized eigenvector"
    assert run_command(["certify", "degree3_star", "--length", "1", "--k", "1"]).exit_code == 1


def test_modes_and_localize(tmp_path, g14_file):
    modes = tmp_path / "m.json"
    res = run_command(["modes", "--graph", str(g14_file), "--k", repr(0.2347645148174597), "--out", str(modes)])
    assert res.exit_code == 0
    data = json.loads(modes.read_text())
    assert set(data) == {"k", "modes"} and len(data["modes"][0]) == 28
    rep, summ, hist = tmp_path / "r.csv", tmp_path / "r.json", tmp_path / "h.csv"
    res = run_command(["localize", "--graph", str(g14_file), "--modes", str(modes),
                       "--out-csv", str(rep), "--out-json", str(summ), "--hist", str(hist)])
    assert res.exit_code == 0 and len(res.artifacts) == 3
    rows = _rows(rep)
    assert list(rows[0]) == ["q", "k", "j", "e_qj", "E_qj", "band"]
    assert len(rows) == 14
    assert sum(float(r["e_qj"]) for r in rows) == pytest.approx(1.0, abs=1e-10)
    s = json.loads(summ.read_text())[0]
    assert {"q", "k", "criterion", "ipr", "active_edges"} <= set(s)
    assert sum(int(v) for key, v in _rows(hist)[0].items() if key.startswith("band")) == 14


def test_modes_not_resonant(tmp_path, g14_file):
    out = tmp_path / "m.json"
    res = run_command(["modes", "--graph", str(g14_file), "--k", "0.3", "--out", str(out)])
    assert res.exit_code == 1 and "NOT_RESONANT" in res.summary
    assert not out.exists()


def test_tune_then_resonance(tmp_path, g14_file):
    tuned = tmp_path / "t.json"
    res = run_command(["tune", "--graph", str(g14_file), "--arcs", "1,3,5", "--shape", "cycle",
                       "--k", "1.133761002", "--out", str(tuned)])
    assert res.exit_code == 0
    spec = tmp_path / "spec.json"
    res = run_command(["resonance", "--graph", str(tuned), "--arcs", "1,3,5", "--shape", "cycle",
                       "--out", str(spec)])
    assert res.exit_code == 0
    data = json.loads(spec.read_text())
    # the primitive tuple (4, 2, 2) / 2 already has an even sum, so the
    # lowest resonance of the tuned triangle sits at half the target
    assert data["kind"] == "cycle" and sorted(data["n"]) == [1, 1, 2]
    assert data["k"] == pytest.approx(1.133761002 / 2, rel=1e-9)


def test_resonance_absent(g14_file):
    res = run_command(["resonance", "--graph", str(g14_file), "--arcs", "6,7,13", "--shape", "cycle"])
    assert res.exit_code == 0 and res.summary.startswith("absent")
    res = run_command(["resonance", "--graph", str(g14_file), "--arcs", "1,2,12", "--shape", "cycle"])
    assert res.exit_code == 1 and "SHAPE_MISMATCH" in res.summary


def test_generate_buffon_roundtrip(tmp_path):
    path = tmp_path / "b.json"
    argv = ["generate", "buffon", "--needles", "80", "--box", "4", "--seed", "5", "--out", str(path)]
    assert run_command(argv).exit_code == 0
    first = path.read_text()
    assert run_command(argv).exit_code == 0
    assert path.read_text() == first
    assert validate(load_graph(path)).ok
    out = tmp_path / "s.csv"
    assert run_command(["spectrum", "--graph", str(path), "--kmax", "1", "--out", str(out)]).exit_code == 0
    assert _rows(out)[0]["k"] == "0.0"


def test_wave(tmp_path, g14_file):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "dx": 0.2, "cfl": 0.9, "t_end": 5.0, "snapshot_every": 2.5,
        "initial": {"type": "gaussian", "edge": 5, "width": 0.5, "velocity": 1.0},
        "boundaries": {"6": {"radiation": 1.0}},
    }))
    traj, snaps = tmp_path / "traj.csv", tmp_path / "snaps.json"
    res = run_command(["wave", "--graph", str(g14_file), "--config", str(cfg),
                       "--out", str(traj), "--snapshots", str(snaps)])
    assert res.exit_code == 0
    rows = _rows(traj)
    assert list(rows[0])[0] == "t" and list(rows[0])[-1] == "E_total" and len(rows[0]) == 16
    data = json.loads(snaps.read_text())
    assert len(data) == 3 and set(data[0]["arcs"]) == {str(j) for j in range(1, 15)}


def test_wave_bad_config(tmp_path, g14_file):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dx": 0.2, "boundaries": {"1": {"radiation": 1.0}}}))
    res = run_command(["wave", "--graph", str(g14_file), "--config", str(cfg), "--out", str(tmp_path / "t.csv")])
    assert res.exit_code == 1 and "INVALID_BOUNDARY" in res.summary


def test_spectrum_deterministic(tmp_path, g14_file):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        run_command(["spectrum", "--graph", str(g14_file), "--kmax", "0.6", "--out", str(out)])
    assert a.read_text() == b.read_text()


def test_global_flags_either_side(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    base = ["buffon", "--needles", "60", "--box", "4"]
    assert run_command(["--seed", "4", "generate", *base, "--out", str(a)]).exit_code == 0
    assert run_command(["generate", *base, "--seed", "4", "--out", str(b)]).exit_code == 0
    assert a.read_text() == b.read_text()
