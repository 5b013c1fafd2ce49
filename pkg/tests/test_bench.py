import statistics

import numpy as np
import pytest

import relaqd.bench as bench
from relaqd.bench import BenchPlan, bench_case, run_bench, scaling_slope, time_case, write_bench_csv
from relaqd.dirac import propagate_dirac
from relaqd.kg import propagate_kg


def test_plan_validation():
    with pytest.raises(ValueError):
        BenchPlan(solver="fdtd")
    with pytest.raises(ValueError):
        BenchPlan(sizes=(64, 32))
    with pytest.raises(ValueError):
        BenchPlan(sizes=(64, 64))
    with pytest.raises(ValueError):
        BenchPlan(steps=8)
    with pytest.raises(ValueError):
        BenchPlan(dims=3)
    assert BenchPlan(threads=2).threads == (2,)


@pytest.mark.parametrize("solver", ["dirac", "kg"])
def test_timed_loop_reproduces_propagator(solver):
    plan = BenchPlan(solver=solver, sizes=(64,), steps=16, repetitions=2)
    raw, out = time_case(plan, 64)
    psi, cfg = bench_case(plan, 64)
    ref, _ = (propagate_dirac if solver == "dirac" else propagate_kg)(psi, cfg)
    np.testing.assert_array_equal(out.data, ref.data)
    assert len(raw) == 2 and min(raw) > 0


def test_rows_report_median_of_raw_timings(tmp_path):
    plan = BenchPlan(solver="kg", dims=2, sizes=(8, 16), steps=16, repetitions=3)
    rows = run_bench(plan)
    for r in rows:
        assert r["median_seconds"] == statistics.median(r["raw"])
        assert r["points_times_steps_per_second"] == pytest.approx(r["steps_per_second"] * r["N"] ** 2)
    assert np.isfinite(scaling_slope(rows))
    write_bench_csv(rows, tmp_path / "b.csv")
    assert len((tmp_path / "b.csv").read_text().splitlines()) == 3


def test_allocation_failure_is_reported_per_size(monkeypatch):
    real = bench._dry_allocate

    def fake(plan, n):
        if n > 32:
            raise MemoryError("simulated")
        real(plan, n)

    monkeypatch.setattr(bench, "_dry_allocate", fake)
    rows = run_bench(BenchPlan(sizes=(32, 64, 128), steps=16, repetitions=1))
    assert "error" not in rows[0]
    assert all("allocation failed" in r["error"] and np.isnan(r["median_seconds"]) for r in rows[1:])
    with pytest.raises(ValueError):
        scaling_slope(rows)
