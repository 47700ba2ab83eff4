import csv
import json

import numpy as np
import pytest

from hamqaoa import cli, formula_finite as F
from hamqaoa.params import ParamSchedule

TABLE_N6 = [(0.4440, 0.5794, -1.5708, 0), (-0.8367, -0.7445, -0.7854, 0.7854), (1.4894, -1.2421, 1.1202, -1.5686),
            (1.5708, 1.0088, 1.0335, -1.9968), (-0.4696, 0, -0.0025, -1.3673), (-1.0117, -0.7854, -1.5708, 0.3109),
            (-0.1558, 0, -0.7854, 0.7854)]


def run_json(capsys, *argv):
    assert cli.main(list(argv)) == 0
    return json.loads(capsys.readouterr().out)


def write(path, data):
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture
def ring(tmp_path, capsys):
    def make(n):
        out = tmp_path / f"ring{n}.json"
        assert cli.main(["--out", str(out), "gen-graph", "--kind", "ring", "--n", str(n)]) == 0
        return str(out)
    return make


def test_gen_graph(capsys):
    g = run_json(capsys, "gen-graph", "--kind", "ring", "--n", "5")
    assert g["n"] == 5 and len(g["edges"]) == 5 and g["seed"] == 0


def test_gen_graph_missing_degree(capsys):
    assert cli.main(["gen-graph", "--kind", "random_regular", "--n", "8"]) == 2
    assert "--degree" in capsys.readouterr().err


def test_maxcut(ring, capsys):
    out = run_json(capsys, "maxcut", "--graph", ring(6))
    assert out["cut"] == 6
    assert out["signs"][0] != out["signs"][1]


def test_exact_ring4(ring, capsys):
    out = run_json(capsys, "exact", "--spec", "qmc", "--graph", ring(4))
    assert out["lambda_max"] == pytest.approx(6.0)
    assert out["degeneracy"] == 1


def test_formula_infinite_from_optimized_params(tmp_path, capsys):
    res = run_json(capsys, "optimize", "--objective", "formula-infinite", "--p", "1", "--restarts", "5")
    params = write(tmp_path / "p1.json", res["params"])
    out = run_json(capsys, "formula-infinite", "--params", params)
    assert out["objective"] == pytest.approx(0.3033, abs=1e-3)
    assert out["objective"] == pytest.approx(out["nu_yy"] + out["nu_zz"])


def test_simulate_tabulated_ring6(ring, tmp_path, capsys):
    params = write(tmp_path / "t6.json", {"rows": TABLE_N6})
    signs = write(tmp_path / "alt.json", {"signs": [1, -1] * 3})
    out = run_json(capsys, "simulate", "--graph", ring(6), "--signs", signs, "--params", params, "--mirrored")
    assert out["fidelity"] >= 0.999
    assert out["norm_residual"] < 1e-12


def test_optimize_then_simulate(ring, tmp_path, capsys):
    g = ring(4)
    signs = write(tmp_path / "alt.json", {"signs": [1, -1, 1, -1]})
    rep = run_json(capsys, "optimize", "--graph", g, "--signs", signs, "--p", "4", "--restarts", "12")
    assert -rep["levels"][0]["value"] >= 6 - 1e-3
    params = write(tmp_path / "best.json", rep["levels"][0]["params"])
    out = run_json(capsys, "simulate", "--graph", g, "--signs", signs, "--params", params)
    assert out["fidelity"] >= 0.9999


def test_formula_finite(tmp_path, capsys):
    theta = ParamSchedule([np.pi / 8], [0], [0], [np.pi / 8])
    params = write(tmp_path / "t.json", theta.to_dict())
    out = run_json(capsys, "formula-finite", "--params", params, "--d", "1", "--p", "1")
    assert out["edge_energy"] == pytest.approx(F.objective_energy(F.QMC_COEFFS, theta, 1), abs=1e-12)
    assert set(out["expectations"]) == {"XX", "YY", "ZZ"}


def test_formula_finite_custom_coeffs(tmp_path, capsys):
    params = write(tmp_path / "t.json", ParamSchedule.zeros(1).to_dict())
    coeffs = write(tmp_path / "c.json", {"c_I": 0.25, "c_XX": 1, "c_YY": 1, "c_ZZ": 0})
    out = run_json(capsys, "formula-finite", "--params", params, "--d", "2", "--coeffs", f"custom:{coeffs}")
    assert out["edge_energy"] == pytest.approx(0.25)


def test_gauge_fix(tmp_path, capsys):
    params = write(tmp_path / "t.json", {"alpha": [0.2, 0.1], "beta": [-0.3, 0.4], "gamma": [0.5, 0.2],
                                         "delta": [0.3, 0.6]})
    out = run_json(capsys, "gauge-fix", "--params", params, "--d", "3")
    assert out["beta"][0] == pytest.approx(np.pi / 2 - 0.3)


def test_agm(ring, capsys):
    out = run_json(capsys, "agm", "--graph", ring(6))
    assert out["energy"] > 0 and len(out["signs"]) == 6


@pytest.mark.parametrize("argv,field", [
    (["exact", "--graph", "missing.json"], "--graph"),
    (["formula-infinite", "--params", "missing.json"], "--params"),
])
def test_missing_files_exit_2(capsys, argv, field):
    assert cli.main(argv) == 2
    assert field in capsys.readouterr().err


def test_xxz_needs_both_parameters(ring, capsys):
    assert cli.main(["exact", "--spec", "xxz", "--delta", "0.5", "--graph", ring(4)]) == 2
    assert "--delta/--h" in capsys.readouterr().err


def test_sign_length_mismatch(ring, tmp_path, capsys):
    signs = write(tmp_path / "s.json", {"signs": [1, -1]})
    params = write(tmp_path / "t.json", ParamSchedule.zeros(1).to_dict())
    assert cli.main(["simulate", "--graph", ring(4), "--signs", signs, "--params", params]) == 2
    assert "--signs" in capsys.readouterr().err


def test_depth_mismatch(tmp_path, capsys):
    params = write(tmp_path / "t.json", ParamSchedule.zeros(2).to_dict())
    assert cli.main(["formula-finite", "--params", params, "--d", "1", "--p", "3"]) == 2


def test_bad_worker_env(monkeypatch, capsys):
    monkeypatch.setenv(cli.WORKERS_ENV, "many")
    assert cli.main(["gen-graph", "--kind", "ring", "--n", "4"]) == 2
    assert cli.WORKERS_ENV in capsys.readouterr().err


def test_optimize_byte_reproducible(ring, tmp_path):
    g = ring(4)
    outs = []
    for k, workers in enumerate(("1", "1", "2")):
        path = tmp_path / f"o{k}.json"
        argv = ["--out", str(path), "--seed", "3", "--workers", workers,
                "optimize", "--graph", g, "--p", "2", "--restarts", "3"]
        assert cli.main(argv) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["levels"][0]["value"] == json.loads(outs[2])["levels"][0]["value"]
    assert json.loads(outs[0])["seed"] == 3


def test_optimize_formula_gi(capsys):
    rep = run_json(capsys, "optimize", "--objective", "formula-finite", "--d", "2", "--strategy", "gi",
                   "--p", "2", "--restarts", "2")
    vals = [lvl["value"] for lvl in rep["levels"]]
    assert len(vals) == 2 and vals[1] <= vals[0]


def test_bench_writes_csv_and_manifest(tmp_path):
    out, table, side = tmp_path / "b.json", tmp_path / "b.csv", tmp_path / "m.json"
    argv = ["--out", str(out), "--csv", str(table), "--manifest", str(side), "--seed", "1",
            "bench", "--suite", "fig3"]
    assert cli.main(argv) == 0
    with open(table) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["series", "x", "y", "yerr", "n", "seed"]
    diffs = [float(r["y"]) for r in rows if r["series"].endswith("absdiff")]
    assert diffs and max(diffs) < 1e-8
    manifest = json.loads(side.read_text())
    assert manifest["seed"] == 1 and manifest["suite"]["failures"] == []
