import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oqrw import cli
from oqrw import constructors as c
from oqrw import walk as w
from oqrw.analysis import total_variation


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(p)


@pytest.fixture
def sqrt3(tmp_path):
    return write(tmp_path, "z.json", {"walk": {"preset": "z_sqrt3"}})


def read_csv(path):
    rows = [ln for ln in open(path).read().splitlines() if not ln.startswith("#")]
    return rows[0], {int(a): float(b) for a, b in (ln.split(",") for ln in rows[1:])}


def test_validate(sqrt3, tmp_path, capsys):
    assert cli.main(["validate", sqrt3]) == 0
    bad = write(
        tmp_path,
        "bad.json",
        {"walk": {"kind": "lattice_z", "chirality_dim": 2, "B": [[1, 0], [0, 1]], "C": [[1, 0], [0, 1]]},
         "initial": {"vertex": 0, "block": [[1, 0], [0, 0]]}},
    )
    capsys.readouterr()
    assert cli.main(["validate", bad]) == 1
    assert "1.0" in capsys.readouterr().out
    assert cli.main(["validate", sqrt3, "--unitary-condition"]) == 1
    had = write(tmp_path, "h.json", {"walk": {"preset": "hadamard_unitary"}})
    assert cli.main(["validate", had, "--unitary-condition"]) == 0


@pytest.mark.parametrize(
    "doc,where",
    [
        ("{oops", "line 1"),
        ({"walk": {"kind": "torus", "chirality_dim": 1}}, "walk.kind"),
        ({"walk": {"kind": "graph", "chirality_dim": 1, "vertices": 2, "edges": [{"source": 1, "target": 2}]}}, "walk.edges[0]"),
        ({"walk": {"kind": "lattice_z", "chirality_dim": 2, "B": [[1, 2], [3]], "C": [[1]]}}, "walk.B"),
        ({"nowalk": 1}, "missing key 'walk'"),
    ],
)
def test_parse_errors_exit_2(tmp_path, capsys, doc, where):
    path = write(tmp_path, "bad.json", doc)
    assert cli.main(["validate", path]) == 2
    assert where in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path):
    assert cli.main(["validate", str(tmp_path / "none.json")]) == 2


def test_evolve_csv(sqrt3, tmp_path):
    out = tmp_path / "e.csv"
    assert cli.main(["evolve", sqrt3, "--steps", "4", "--out", str(out)]) == 0
    header, probs = read_csv(out)
    assert header == "vertex,probability"
    assert abs(probs[4] - 17 / 81) <= 1e-12 and abs(probs[-4] - 1 / 81) <= 1e-12
    assert abs(sum(probs.values()) - 1) <= 1e-9
    assert "-4,0.01234567901234" in out.read_text()
    assert cli.main(["evolve", sqrt3, "--steps", "0", "--out", str(out)]) == 0
    assert read_csv(out)[1] == {0: 1.0}


def test_evolve_snapshots(sqrt3, tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["evolve", sqrt3, "--steps", "5", "--snapshot-every", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "step,vertex,probability"
    assert sorted({int(ln.split(",")[0]) for ln in lines[1:]}) == [0, 2, 4, 5]
    assert cli.main(["evolve", sqrt3, "--steps", "5", "--snapshot-every", "0"]) == 2


def test_evolve_json_round_trip(sqrt3, tmp_path):
    n = 7
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["evolve", sqrt3, "--steps", str(n), "--format", "json", "--out", str(a)]) == 0
    assert cli.main(["evolve", sqrt3, "--steps", "1", "--format", "json", "--initial-state", str(a), "--out", str(b)]) == 0
    cfg = cli.load_config(sqrt3)
    got = cli.state_from_json(json.loads(b.read_text()), cfg.ops)
    ref = w.evolve(cfg.initial, cfg.ops, n + 1)
    for v in ref.blocks:
        assert np.max(np.abs(got.block(v) - ref.block(v))) <= 1e-12


def test_evolve_window_overflow(sqrt3, monkeypatch, capsys):
    monkeypatch.setenv("OQRW_WINDOW_CAP", "4")
    assert cli.main(["evolve", sqrt3, "--steps", "3"]) == 1
    assert "OQRW_WINDOW_CAP" in capsys.readouterr().err


def test_refuses_invalid_walk(tmp_path):
    bad = write(
        tmp_path,
        "bad.json",
        {"walk": {"kind": "lattice_z", "chirality_dim": 1, "B": [[1]], "C": [[1]]}, "initial": {"vertex": 0, "block": [[1]]}},
    )
    assert cli.main(["evolve", bad, "--steps", "1"]) == 1
    nostart = write(tmp_path, "ns.json", {"walk": {"kind": "lattice_z", "chirality_dim": 1, "B": [[0.6]], "C": [[0.8]]}})
    assert cli.main(["evolve", nostart, "--steps", "1"]) == 2


def test_trajectory_determinism_and_accuracy(sqrt3, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["trajectory", sqrt3, "--steps", "4", "--samples", "20000", "--seed", "1"]
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--workers", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.startswith("# seed=1\n# samples=20000\n# steps=4\n")
    est = cli.read_distribution(a)
    pre = c.preset("z_sqrt3")
    assert total_variation(est, w.distribution(w.evolve(pre.initial, pre.ops, 4))) <= 0.02


def test_trajectory_deterministic_walk(tmp_path):
    shift = write(
        tmp_path,
        "shift.json",
        {"walk": {"kind": "lattice_z", "chirality_dim": 1, "B": [[0]], "C": [[1]]}, "initial": {"vertex": 3, "block": [[1]]}},
    )
    out = tmp_path / "t.csv"
    assert cli.main(["trajectory", shift, "--steps", "5", "--samples", "1", "--seed", "0", "--out", str(out)]) == 0
    assert read_csv(out)[1] == {8: 1.0}


def test_realize(tmp_path, capsys):
    tv = write(tmp_path, "tv.json", {"walk": {"preset": "two_vertex"}})
    assert cli.main(["realize", tv, "--steps", "5", "--compare"]) == 0
    out = capsys.readouterr().out
    dev = float(out.strip().splitlines()[-1].split(",")[1])
    assert dev <= 1e-10
    had = write(tmp_path, "h.json", {"walk": {"preset": "hadamard_unitary"}})
    res = tmp_path / "r.csv"
    assert cli.main(["realize", had, "--steps", "1", "--skip-decoherence", "--compare", "--out", str(res)]) == 0
    rows = res.read_text().splitlines()
    last = {int(v): float(p) for s, v, p in (ln.split(",") for ln in rows[1:]) if s == "1"}
    assert last == {-1: pytest.approx(0.5, abs=1e-15), 1: pytest.approx(0.5, abs=1e-15)}
    assert float(capsys.readouterr().out.split(",")[1]) <= 1e-12
    z = write(tmp_path, "z.json", {"walk": {"preset": "z_sqrt3"}})
    assert cli.main(["realize", z, "--steps", "1", "--skip-decoherence"]) == 1
    assert cli.main(["realize", z, "--steps", "3", "--window", "-2", "2"]) == 1
    assert cli.main(["realize", z, "--steps", "3", "--window", "-4", "4", "--compare", "--out", str(res)]) == 0


def test_realize_mixed_unitary_compare(tmp_path, capsys):
    had = write(
        tmp_path,
        "h.json",
        {"walk": {"preset": "hadamard_unitary"}, "initial": {"blocks": [{"vertex": 0, "block": [[0.3, 0], [0, 0.2]]}, {"vertex": 1, "block": [[0.25, [0, 0.1]], [[0, -0.1], 0.25]]}]}},
    )
    assert cli.main(["realize", had, "--steps", "6", "--skip-decoherence", "--compare", "--out", str(tmp_path / "o.csv")]) == 0
    assert float(capsys.readouterr().out.split(",")[1]) <= 1e-12


def test_stats(tmp_path, capsys, sqrt3):
    pm = write(tmp_path, "pm.csv", "vertex,probability\n0,1.0\n")
    assert cli.main(["stats", pm]) == 0
    out = capsys.readouterr().out
    assert "mean,0.0" in out and "variance,0.0" in out
    assert cli.main(["stats", pm, "--konno", "0.7071", "0"]) == 0
    row = capsys.readouterr().out.strip().splitlines()[-1].split(",")
    assert float(row[1]) == pytest.approx(1 / np.pi, rel=1e-4)
    assert cli.main(["stats", pm, "--gaussian"]) == 1
    for n in (20, 200):
        cli.main(["evolve", sqrt3, "--steps", str(n), "--out", str(tmp_path / f"e{n}.csv")])
    capsys.readouterr()
    vals = []
    for n in (20, 200):
        assert cli.main(["stats", str(tmp_path / f"e{n}.csv"), "--gaussian"]) == 0
        vals.append(float(capsys.readouterr().out.strip().splitlines()[-1].split(",")[1]))
    assert vals[1] < vals[0]
    bad = write(tmp_path, "bad.csv", "vertex,probability\nx,1\n")
    assert cli.main(["stats", bad]) == 2
    bad = write(tmp_path, "bad2.csv", "a,b\n1,1\n")
    assert cli.main(["stats", bad]) == 2


def test_stats_reads_json_state(sqrt3, tmp_path, capsys):
    out = tmp_path / "s.json"
    cli.main(["evolve", sqrt3, "--steps", "1", "--format", "json", "--out", str(out)])
    capsys.readouterr()
    assert cli.main(["stats", str(out)]) == 0
    assert "mean,0.33333333333333" in capsys.readouterr().out


def test_argparse_errors_exit_2(sqrt3):
    with pytest.raises(SystemExit) as exc:
        cli.main(["evolve", sqrt3])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["evolve", sqrt3, "--steps", "-1"])
    assert exc.value.code == 2


def _ops_equal(a, b, tol=1e-15):
    if a.is_stationary != b.is_stationary or a.chirality_dim != b.chirality_dim:
        return False
    if a.is_stationary:
        return all(np.max(np.abs(x - y)) <= tol for x, y in zip(a.stationary, b.stationary))
    return a.edges.keys() == b.edges.keys() and all(np.max(np.abs(a.edges[k] - b.edges[k])) <= tol for k in a.edges)


@pytest.mark.parametrize("name", c.PRESET_NAMES)
def test_config_round_trip(name):
    ops = c.preset(name).ops
    text = json.dumps(cli.walk_to_json(ops))
    back, _ = cli.parse_walk(json.loads(text))
    assert _ops_equal(ops, back, 0.0)
    again, _ = cli.parse_walk(json.loads(json.dumps(cli.walk_to_json(back))))
    assert _ops_equal(back, again, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_graph_config_round_trip(seed):
    rng = np.random.default_rng(seed)
    V = int(rng.integers(1, 5))
    P = rng.random((V, V))
    P /= P.sum(axis=1, keepdims=True)
    ops = c.from_classical(P, chirality_dim=2)
    back, _ = cli.parse_walk(json.loads(json.dumps(cli.walk_to_json(ops))))
    assert _ops_equal(ops, back, 1e-15)
