"""Method x instance benchmark grids, aggregation and performance profiles."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import backend as bk
from .backend import SolveSettings
from .benders import BendersConfig, SolveReport, solve_llfba_benders
from .formulations import (
    BIGM,
    HULL,
    INDICATOR,
    LooplessConfig,
    solve_fba,
    solve_llfba_bigm,
    solve_llfba_hull,
    solve_llfba_indicator,
)
from .model import Status

logger = logging.getLogger(__name__)

METHODS = ("fba", "bigm", "indicator", "hull", "benders", "no_good")
CSV_FIELDS = SolveReport.CSV_FIELDS + ("time_limit",)
# bucket edges in seconds, by fastest solve time over all methods
BUCKETS = ((0, 10), (10, 60), (60, 100), (100, 600), (600, 1800))
GEOMEAN_SHIFT = 1.0


class ParseError(ValueError):
    pass


@dataclass
class MethodSpec:
    method: str = "benders"
    formulation: str = BIGM
    pct: float = 0.0
    strategy: str = "All"
    epsilon: float = 1.0
    big_M: Optional[float] = None
    time_limit: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        self.pct = float(self.pct)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.method in ("benders", "no_good"):
            return f"{self.method}({self.formulation}, {self.pct:g}%, {self.strategy})"
        return self.method


def run_method(model, spec: MethodSpec, settings: SolveSettings, backend=None, instance: str = ""):
    """Solve one instance with one method; never raises for solver trouble."""
    if spec.time_limit is not None:
        settings = SolveSettings(spec.time_limit, settings.feasibility_tol, settings.integrality_tol,
                                 settings.optimality_gap, settings.seed)
    report = SolveReport(instance=instance or getattr(model, "name", ""), method=spec.method,
                         formulation=spec.formulation if spec.method in ("benders", "no_good") else "",
                         pct=spec.pct, strategy=spec.strategy)
    t0 = time.perf_counter()
    try:
        if spec.method in ("benders", "no_good"):
            cfg = BendersConfig(master_formulation=spec.formulation, cuts_per_iter_pct=spec.pct,
                                cut_strategy=spec.strategy, no_good_only=spec.method == "no_good",
                                epsilon=spec.epsilon, big_M=spec.big_M)
            sol, rep = solve_llfba_benders(model, cfg, settings, backend, instance=report.instance)
            report.iterations, report.cuts = rep.iterations, rep.cuts
        elif spec.method == "fba":
            sol = solve_fba(model, settings, backend)
        else:
            solver = {"bigm": solve_llfba_bigm, "indicator": solve_llfba_indicator, "hull": solve_llfba_hull}[spec.method]
            form = {"bigm": BIGM, "indicator": INDICATOR, "hull": HULL}[spec.method]
            sol = solver(model, LooplessConfig(spec.epsilon, spec.big_M, form), settings, backend)
        status = sol.status
        objective = sol.objective_value if sol.v is not None else float("nan")
    except Exception as exc:  # fault isolation: one bad row must not kill the grid
        logger.exception("%s on %s failed", spec.name, report.instance)
        sol, status, objective = None, Status.NUMERICAL_ERROR, float("nan")
        report.error = str(exc)
    report.wall_time = time.perf_counter() - t0
    if report.wall_time > settings.time_limit_s and status == Status.OPTIMAL:
        status = Status.TIME_LIMIT
    report.status = status
    report.objective = objective
    report.time_limit = settings.time_limit_s
    return sol, report


def _format(value):
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(round(value, 9))
    return str(value)


def write_report(reports: Iterable[SolveReport], fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rep in reports:
        row = rep.row()
        row["time_limit"] = rep.time_limit
        writer.writerow({k: _format(v) for k, v in row.items()})


def run_benchmark(instances: Sequence, methods: Sequence[MethodSpec], settings: Optional[SolveSettings] = None,
                  backend=None, workers: int = 1, out=None) -> List[SolveReport]:
    """Run every method on every instance; one report per pair.

    ``instances`` holds model paths or ``(name, model)`` pairs. Rows come
    back in instance-major, method-minor order regardless of ``workers``.
    """
    from .io import load_model

    settings = settings or SolveSettings()
    loaded = []
    for inst in instances:
        if isinstance(inst, tuple):
            loaded.append(inst)
        else:
            model = load_model(inst)
            loaded.append((model.name, model))
    jobs = [(name, model, spec) for name, model in loaded for spec in methods]

    def work(job):
        name, model, spec = job
        # one backend handle per job: solves never share engine state
        handle = backend or bk.get_backend()
        _, rep = run_method(model, spec, settings, handle, instance=name)
        rep.method = spec.name if spec.label else rep.method
        return rep

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            reports = list(pool.map(work, jobs))
    else:
        reports = [work(job) for job in jobs]
    if out is not None:
        write_report(reports, out)
    return reports


# ----------------------------------------------------------------------
# aggregation


def read_report(source) -> List[dict]:
    """Rows of a report CSV (path, file object or CSV text)."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and "\n" in source:
        text = source
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    reader = csv.DictReader(io.StringIO(text))
    missing = {"instance", "method", "status", "wall_time"} - set(reader.fieldnames or ())
    if missing:
        raise ParseError(f"report lacks columns {sorted(missing)}")
    rows = []
    for n, row in enumerate(reader, start=2):
        try:
            row["wall_time"] = float(row["wall_time"])
            tl = row.get("time_limit") or ""
            row["time_limit"] = float(tl) if tl else None
        except ValueError as exc:
            raise ParseError(f"line {n}: {exc}") from None
        rows.append(row)
    return rows


def method_key(row) -> str:
    if row["method"] in ("benders", "no_good"):
        return f"{row['method']}({row.get('formulation', '')}, {row.get('pct', '')}%, {row.get('strategy', '')})"
    return row["method"]


def shifted_geomean(values, shift: float = GEOMEAN_SHIFT) -> float:
    values = np.asarray(list(values), dtype=float)
    if values.size == 0:
        return float("nan")
    return float(np.exp(np.mean(np.log(values + shift))) - shift)


@dataclass
class MethodSummary:
    method: str
    n: int
    solved: int
    pct_solved: float
    geomean_all: float
    geomean_solved: float
    buckets: dict = field(default_factory=dict)


def aggregate(source, time_limit: Optional[float] = None, shift: float = GEOMEAN_SHIFT) -> List[MethodSummary]:
    """Per-method solve rate and shifted geometric mean time.

    ``geomean_all`` charges unsolved rows at the time limit (row column,
    else ``time_limit``); ``geomean_solved`` uses solved rows only. Buckets
    group instances by the fastest Optimal time of any method.
    """
    rows = read_report(source)
    by_method = {}
    for row in rows:
        by_method.setdefault(method_key(row), []).append(row)

    fastest = {}
    for row in rows:
        if row["status"] == Status.OPTIMAL:
            t = fastest.get(row["instance"], math.inf)
            fastest[row["instance"]] = min(t, row["wall_time"])

    def charged(row):
        if row["status"] == Status.OPTIMAL:
            return row["wall_time"]
        limit = row["time_limit"] if row["time_limit"] is not None else time_limit
        if limit is None:
            raise ParseError("unsolved row without a time limit; pass time_limit")
        return limit

    summaries = []
    for method, group in by_method.items():
        solved = [r for r in group if r["status"] == Status.OPTIMAL]
        summary = MethodSummary(
            method=method,
            n=len(group),
            solved=len(solved),
            pct_solved=100.0 * len(solved) / len(group),
            geomean_all=shifted_geomean([charged(r) for r in group], shift),
            geomean_solved=shifted_geomean([r["wall_time"] for r in solved], shift),
        )
        for lo, hi in BUCKETS:
            members = [r for r in group if lo <= fastest.get(r["instance"], math.inf) < hi]
            if members:
                ok = [r for r in members if r["status"] == Status.OPTIMAL]
                summary.buckets[f"{lo}-{hi}"] = (
                    len(members), 100.0 * len(ok) / len(members),
                    shifted_geomean([charged(r) for r in members], shift),
                )
        summaries.append(summary)
    return summaries


def format_summary(summaries: Sequence[MethodSummary], shift: float = GEOMEAN_SHIFT) -> str:
    out = io.StringIO()
    out.write(f"# shifted geometric mean, shift = {shift:g} s\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["method", "bucket", "instances", "pct_solved", "geomean_all_s", "geomean_solved_s"])
    for s in summaries:
        writer.writerow([s.method, "all", s.n, f"{s.pct_solved:.1f}", f"{s.geomean_all:.3f}",
                         "" if math.isnan(s.geomean_solved) else f"{s.geomean_solved:.3f}"])
        for bucket, (n, pct, gm) in s.buckets.items():
            writer.writerow([s.method, bucket, n, f"{pct:.1f}", f"{gm:.3f}", ""])
    return out.getvalue()


def make_performance_profile(source) -> dict:
    """Cumulative solved-instance counts over time, per method.

    Returns ``{method: [(time, solved_so_far), ...]}``; methods without a
    solve get ``[(0.0, 0)]``.
    """
    rows = read_report(source)
    curves = {}
    for row in rows:
        curves.setdefault(method_key(row), [])
        if row["status"] == Status.OPTIMAL:
            curves[method_key(row)].append(row["wall_time"])
    profile = {}
    for method, times in curves.items():
        times.sort()
        profile[method] = [(t, k) for k, t in enumerate(times, start=1)] or [(0.0, 0)]
    return profile


def write_profile(profile: dict, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["method", "time_s", "solved"])
    for method, points in profile.items():
        for t, k in points:
            writer.writerow([method, repr(t), k])
