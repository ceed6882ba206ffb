import io
import math

import pytest

from llfba.bench import (
    MethodSpec,
    ParseError,
    aggregate,
    format_summary,
    make_performance_profile,
    read_report,
    run_benchmark,
    shifted_geomean,
    write_report,
)
from llfba.benders import SolveReport
from llfba.model import Status, build_example_loop_model, build_two_cycle_model


def instances():
    return [("example", build_example_loop_model()), ("two_cycles", build_two_cycle_model())]


def test_grid_rows_and_order():
    methods = [MethodSpec("bigm"), MethodSpec("hull"), MethodSpec("benders")]
    reports = run_benchmark(instances(), methods)
    assert [(r.instance, r.method) for r in reports] == [
        (i, m) for i in ("example", "two_cycles") for m in ("bigm", "hull", "benders")
    ]
    assert all(r.status == Status.OPTIMAL for r in reports)
    assert [r.objective for r in reports[:3]] == pytest.approx([20.0] * 3, abs=1e-6)


def test_parallel_matches_serial():
    methods = [MethodSpec("bigm"), MethodSpec("no_good")]
    serial = run_benchmark(instances(), methods)
    parallel = run_benchmark(instances(), methods, workers=3)
    key = lambda r: (r.instance, r.method, r.status, round(r.objective, 6))
    assert [key(r) for r in serial] == [key(r) for r in parallel]


def test_fault_is_isolated():
    bad = build_example_loop_model()
    spec = MethodSpec("bigm", big_M=1.0)  # invalid: below the flux bound
    reports = run_benchmark([("bad", bad), ("ok", bad)], [spec, MethodSpec("fba")])
    assert reports[0].status == Status.NUMERICAL_ERROR and reports[0].error
    assert reports[1].status == Status.OPTIMAL


def test_unknown_method():
    with pytest.raises(ValueError):
        MethodSpec("simplex")


def test_csv_roundtrip():
    buf = io.StringIO()
    run_benchmark(instances()[:1], [MethodSpec("benders", pct=30)], out=buf)
    rows = read_report(buf.getvalue())
    assert rows[0]["method"] == "benders" and rows[0]["pct"] == "30.0"
    assert rows[0]["time_limit"] == 1800.0


def test_shifted_geomean():
    assert shifted_geomean([0.0, 0.0]) == pytest.approx(0.0)
    assert shifted_geomean([1.0, 3.0], shift=1.0) == pytest.approx(math.sqrt(8) - 1)
    assert math.isnan(shifted_geomean([]))


def report_text(rows):
    buf = io.StringIO()
    reps = []
    for inst, method, status, t in rows:
        reps.append(SolveReport(instance=inst, method=method, status=status, wall_time=t, time_limit=100.0))
    write_report(reps, buf)
    return buf.getvalue()


def test_aggregate_charges_time_limit():
    text = report_text([
        ("i1", "bigm", Status.OPTIMAL, 1.0),
        ("i2", "bigm", Status.TIME_LIMIT, 100.0),
        ("i1", "hull", Status.OPTIMAL, 3.0),
        ("i2", "hull", Status.OPTIMAL, 70.0),
    ])
    by = {s.method: s for s in aggregate(text)}
    assert by["bigm"].solved == 1 and by["bigm"].pct_solved == 50.0
    assert by["bigm"].geomean_all == pytest.approx(shifted_geomean([1.0, 100.0]))
    assert by["bigm"].geomean_solved == pytest.approx(1.0)
    # i1 falls in 0-10 (fastest 1 s), i2 in 60-100 (fastest 70 s)
    assert set(by["hull"].buckets) == {"0-10", "60-100"}
    assert "shift = 1 s" in format_summary(list(by.values()))


def test_aggregate_needs_limit_for_unsolved():
    text = "instance,method,status,wall_time\ni1,bigm,TimeLimit,5\n"
    with pytest.raises(ParseError):
        aggregate(text)
    assert aggregate(text, time_limit=60)[0].geomean_all == pytest.approx(60.0)


def test_missing_columns():
    with pytest.raises(ParseError):
        read_report("instance,method\na,b\n")


def test_performance_profile():
    text = report_text([
        ("i1", "bigm", Status.OPTIMAL, 2.0),
        ("i2", "bigm", Status.OPTIMAL, 1.0),
        ("i1", "hull", Status.TIME_LIMIT, 100.0),
    ])
    prof = make_performance_profile(text)
    assert prof["bigm"] == [(1.0, 1), (2.0, 2)]
    assert prof["hull"] == [(0.0, 0)]
