"""A small method x instance grid, summarized the way the benchmark tables are.

Run from the repository root; writes bench_demo.csv next to this script.
The same grid can be run from the command line with
``llfba bench demos/grid.toml -o report.csv`` followed by
``llfba aggregate report.csv``.
"""

import os

from llfba.bench import MethodSpec, aggregate, format_summary, make_performance_profile, run_benchmark
from llfba.backend import SolveSettings
from llfba.model import build_example_loop_model, build_two_cycle_model, random_model

here = os.path.dirname(os.path.abspath(__file__))
instances = [("example", build_example_loop_model()), ("two_cycles", build_two_cycle_model())]
instances += [(f"random_{s}", random_model(s)) for s in range(10)]
methods = [
    MethodSpec("bigm"),
    MethodSpec("hull"),
    MethodSpec("benders"),
    MethodSpec("benders", pct=25, strategy="KSmallest(2)"),
    MethodSpec("no_good"),
]

out_path = os.path.join(here, "bench_demo.csv")
with open(out_path, "w", newline="") as fh:
    reports = run_benchmark(instances, methods, SolveSettings(time_limit_s=30), out=fh)
print(f"{len(reports)} runs written to {out_path}\n")
print(format_summary(aggregate(out_path)))

for method, points in make_performance_profile(out_path).items():
    print(f"{method:40s} solved {points[-1][1]:2d}, last at {points[-1][0]:.3f}s")
