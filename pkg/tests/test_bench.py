import pandas as pd
import pytest

from fishnet.cli.bench import MIN_RUNS, BenchPoint, BenchReport, bench_client, bench_server
from fishnet.core.exceptions import UsageError


def test_runs_below_the_floor_are_refused():
    with pytest.raises(UsageError):
        bench_client(sizes=(1_000,), runs=MIN_RUNS - 1)
    with pytest.raises(UsageError):
        bench_server(rows=(10,), runs=5)


def test_client_tagging_costs_something():
    report = bench_client(sizes=(1_000, 20_000), runs=MIN_RUNS)
    assert [p.size for p in report.points] == [1_000, 20_000]
    for point in report.points:
        assert point.baseline > 0
        assert point.tagging > 0
        # signing happens on top of the same dispatch
        assert point.with_consent > point.baseline


def test_server_points_per_row_count_and_cache_mode(tmp_path):
    report = bench_server(rows=(20, 60), runs=MIN_RUNS, workdir=tmp_path)
    assert [(p.size, p.cache) for p in report.points] == [(20, False), (20, True), (60, False), (60, True)]
    assert all(p.baseline > 0 and p.with_consent > 0 for p in report.points)


def test_cached_pages_cost_about_the_same(tmp_path):
    report = bench_server(rows=(50,), runs=MIN_RUNS, cache_modes=(True,), workdir=tmp_path)
    [point] = report.points
    assert abs(point.overhead) <= max(0.5 * point.baseline, 0.5e-3)


def test_report_csv(tmp_path):
    report = BenchReport("demo", MIN_RUNS, [BenchPoint(100, 0.001, 0.0015, cache=True)])
    frame = pd.read_csv(report.write_csv(tmp_path / "out" / "demo.csv"))
    assert list(frame.columns) == ["size", "cache", "baseline_ms", "with_consent_ms", "overhead_ms", "tagging_ms"]
    assert frame.loc[0, "overhead_ms"] == pytest.approx(0.5)
    assert report.table().row_count == 1
