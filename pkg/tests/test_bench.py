import pytest

from hamqaoa import bench


def by_series(rows):
    out = {}
    for r in rows:
        out.setdefault(r["series"], []).append(r)
    return out


def test_unknown_suite():
    with pytest.raises(ValueError, match="unknown suite"):
        bench.run_suite("fig9")


def test_guard_records_failure_and_continues():
    rows, failures = [], []
    bench._guarded(rows, failures, "bad", lambda: (_ for _ in ()).throw(ValueError("too big")))
    bench._guarded(rows, failures, "good", lambda: [bench._row("s", 1, 2.0)])
    assert failures == [{"point": "bad", "error": "too big"}]
    assert rows == [{"series": "s", "x": 1, "y": 2.0, "yerr": 0.0, "n": 1, "seed": ""}]


def test_fig3_small():
    rows, manifest = bench.run_suite("fig3", seed=2, ring_ps=(1, 2), heawood_ps=(), samples=2)
    series = by_series(rows)
    assert len(series["ring_absdiff"]) == 4
    assert max(r["y"] for r in series["ring_absdiff"]) < 1e-8
    assert manifest["wall_time"] >= 0 and manifest["seed"] == 2


def test_fig4_small():
    rows, _ = bench.run_suite("fig4", ns=(4,), p_max=2, samples_level1=2)
    series = by_series(rows)
    assert series["gi_p2"][0]["y"] >= series["gi_p1"][0]["y"]
    assert 0 < series["agm"][0]["y"] <= 1


def test_fig6_small():
    rows, manifest = bench.run_suite("fig6", ns=(4,), restarts=3)
    series = by_series(rows)
    assert series["xy_min_depth"][0]["y"] >= 1
    assert series["xy_fidelity"][0]["y"] >= manifest["threshold"]
