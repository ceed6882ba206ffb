"""Combinatorial Benders decomposition of loopless FBA.

The master problem is FBA plus direction binaries linked to the flux signs.
Each master optimum fixes a direction assignment ``a``; the subproblem asks
for potentials ``mu`` with ``dmu = S_I^T mu`` of the matching signs. When no
such ``mu`` exists, minimal infeasible subsystems (MIS) of the subproblem are
read off vertices of a Farkas-type LP and turned into cuts on ``a``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import backend as bk
from .backend import BINARY, EQ, GE, LE, LinearConstraint, LinearProblem, SolveSettings
from .formulations import (
    BIGM,
    INDICATOR,
    _apply_polish,
    _flux_model,
    add_flux_core,
    aname,
    solve_fba,
    vname,
)
from .model import FluxSolution, MetabolicModel, Status, internal_submatrix

logger = logging.getLogger(__name__)

BOTH = "Both"
MASTER_FORMULATIONS = (BIGM, INDICATOR, BOTH)

ALL, DISTINCT, KSMALLEST, DENSITY = "All", "Distinct", "KSmallest", "DensityLimit"

SUPPORT_TOL = 1e-9
# internal fluxes at or below this magnitude leave their direction free
ACTIVE_FLUX_TOL = 1e-6
FBA_MATCH_TOL = 1e-3


class NumericalError(RuntimeError):
    pass


# ----------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class InfeasibleSubsystem:
    """Internal-reaction positions whose signed energy rows are jointly infeasible.

    ``indices`` are positions into ``model.internal`` (sorted); ``directions``
    holds the refuted ``a`` values on those positions.
    """

    indices: tuple
    directions: tuple
    weights: tuple = ()

    def __len__(self):
        return len(self.indices)

    @property
    def key(self) -> tuple:
        return self.indices, self.directions


@dataclass(frozen=True)
class CutStrategy:
    kind: str = ALL
    k: int = 1
    density: float = 1.0

    def __post_init__(self):
        if self.kind not in (ALL, DISTINCT, KSMALLEST, DENSITY):
            raise ValueError(f"unknown cut strategy {self.kind!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")

    @classmethod
    def parse(cls, text: str) -> "CutStrategy":
        """``All``, ``Distinct``, ``KSmallest(3)`` or ``DensityLimit(0.2)``."""
        text = text.strip()
        if "(" in text:
            kind, arg = text.rstrip(")").split("(", 1)
            if kind == KSMALLEST:
                return cls(KSMALLEST, k=int(arg))
            if kind == DENSITY:
                return cls(DENSITY, density=float(arg))
            raise ValueError(f"strategy {kind!r} takes no argument")
        return cls(text)

    def __str__(self):
        if self.kind == KSMALLEST:
            return f"{KSMALLEST}({self.k})"
        if self.kind == DENSITY:
            return f"{DENSITY}({self.density:g})"
        return self.kind


@dataclass
class BendersConfig:
    master_formulation: str = BIGM
    cuts_per_iter_pct: float = 0.0
    cut_strategy: CutStrategy = field(default_factory=CutStrategy)
    no_good_only: bool = False
    epsilon: float = 1.0
    big_M: Optional[float] = None
    max_iterations: int = 100_000
    time_limit_s: Optional[float] = None
    check_minimality: bool = True
    check_fba_match: bool = True

    def __post_init__(self):
        if isinstance(self.cut_strategy, str):
            self.cut_strategy = CutStrategy.parse(self.cut_strategy)
        if not 0 <= self.cuts_per_iter_pct <= 100:
            raise ValueError("cuts_per_iter_pct must lie in [0, 100]")
        if self.master_formulation not in MASTER_FORMULATIONS:
            raise ValueError(f"unknown master formulation {self.master_formulation!r}")

    def cuts_per_iteration(self, n_reactions: int) -> int:
        if self.cuts_per_iter_pct == 0:
            return 1
        return max(1, math.ceil(self.cuts_per_iter_pct / 100.0 * n_reactions))


@dataclass
class SolveReport:
    instance: str = ""
    method: str = ""
    formulation: str = ""
    pct: float = 0.0
    strategy: str = ""
    status: str = ""
    objective: float = float("nan")
    iterations: int = 0
    cuts: int = 0
    wall_time: float = 0.0
    master_time: float = 0.0
    mis_time: float = 0.0
    time_limit: float = float("nan")
    error: str = ""
    master_objectives: list = field(default_factory=list)
    # (refuted assignment, [InfeasibleSubsystem, ...]) per iteration with cuts
    subsystems: list = field(default_factory=list)

    CSV_FIELDS = ("instance", "method", "formulation", "pct", "strategy", "status",
                  "objective", "iterations", "cuts", "wall_time")

    def row(self) -> dict:
        return {k: getattr(self, k) for k in self.CSV_FIELDS}


# ----------------------------------------------------------------------
# master


def build_master(model, config: BendersConfig, backend=None) -> LinearProblem:
    """FBA plus direction binaries tied to the flux signs of internal reactions."""
    fm = _flux_model(model)
    form = config.master_formulation
    if form in (INDICATOR, BOTH) and backend is not None and not bk.supports_indicators(backend):
        raise bk.CapabilityError(f"{backend!r} cannot build an indicator master")
    M = config.big_M if config.big_M is not None else max(fm.max_abs_bound, 2.0 * config.epsilon)
    problem = LinearProblem(name=f"master_{form}")
    add_flux_core(problem, model)
    for k, j in enumerate(fm.internal):
        a, v = aname(k), vname(j)
        problem.add_variable(a, BINARY)
        if form in (BIGM, BOTH):
            problem.add_constraint({v: 1.0, a: -M}, GE, -M, name=f"v_lo[{k}]")
            problem.add_constraint({v: 1.0, a: -M}, LE, 0.0, name=f"v_hi[{k}]")
        if form in (INDICATOR, BOTH):
            problem.add_indicator(a, 1, {v: 1.0}, GE, 0.0, name=f"fwd[{k}]")
            problem.add_indicator(a, 0, {v: 1.0}, LE, 0.0, name=f"bwd[{k}]")
    return problem


# ----------------------------------------------------------------------
# subproblem and MIS


def _signed_rows(S_I, a: Sequence[int], rows: Optional[Sequence[int]] = None):
    """Rows of A~ (one per selected internal position): +col if forward, -col if backward."""
    S_I = sp.csc_matrix(S_I)
    a = np.asarray(a)
    rows = np.arange(S_I.shape[1]) if rows is None else np.asarray(rows, dtype=int)
    signs = np.where(a[rows] == 1, 1.0, -1.0)
    return (S_I[:, rows] @ sp.diags(signs)).T.tocsr(), rows


def check_subproblem(S_I, a, epsilon: float = 1.0, settings=None, backend=None, rows=None):
    """Feasibility of the signed potential system for assignment ``a``.

    Returns ``(mu, dmu)`` if some ``mu`` satisfies ``dmu_k <= -eps`` for
    forward and ``dmu_k >= eps`` for backward positions, otherwise None.
    ``rows`` restricts the signed constraints to a subset of positions
    (``dmu`` is still returned for all of them).
    """
    S_I = sp.csc_matrix(S_I)
    m, nI = S_I.shape
    A, rows = _signed_rows(S_I, a, rows)
    problem = LinearProblem(name="subproblem", maximize=False)
    for i in range(m):
        problem.add_variable(f"mu[{i}]")
    for r in range(A.shape[0]):
        lo, hi = A.indptr[r], A.indptr[r + 1]
        coeffs = {f"mu[{i}]": float(c) for i, c in zip(A.indices[lo:hi], A.data[lo:hi])}
        problem.add_constraint(coeffs, LE, -epsilon, name=f"sp[{rows[r]}]")
    result = (backend or bk.get_backend()).solve(problem, settings)
    if result.status == Status.INFEASIBLE:
        return None
    if result.status != Status.OPTIMAL:
        raise NumericalError(f"subproblem ended with status {result.status}")
    mu = np.array([result[f"mu[{i}]"] for i in range(m)])
    return mu, S_I.T @ mu


def _is_infeasible(S_I, a, rows, epsilon, settings, backend) -> bool:
    if len(rows) == 0:
        return False
    return check_subproblem(S_I, a, epsilon, settings, backend, rows=rows) is None


def find_mis(S_I, a, epsilon: float = 1.0, weights=None, rows=None, settings=None,
             backend=None, check_minimality: bool = True) -> Optional[InfeasibleSubsystem]:
    """One MIS from a vertex of ``{lam >= 0, A~^T lam = 0, b~^T lam = -1}``.

    Maximizes ``sum w_k lam_k``; the support of the basic optimal ``lam`` is
    the subsystem. Returns None when the LP has no solution, i.e. the signed
    system is feasible.
    """
    S_I = sp.csc_matrix(S_I)
    A, rows = _signed_rows(S_I, a, rows)
    nrow = A.shape[0]
    if nrow == 0:
        return None
    w = np.ones(nrow) if weights is None else np.asarray(weights, dtype=float)
    problem = LinearProblem(name="mis_lp", maximize=True)
    for r in range(nrow):
        problem.add_variable(f"lam[{r}]", lb=0.0)
        if w[r]:
            problem.objective[f"lam[{r}]"] = float(w[r])
    At = A.T.tocsr()
    for i in range(At.shape[0]):
        lo, hi = At.indptr[i], At.indptr[i + 1]
        if hi > lo:
            problem.add_constraint(
                {f"lam[{r}]": float(c) for r, c in zip(At.indices[lo:hi], At.data[lo:hi])},
                EQ, 0.0, name=f"farkas[{i}]",
            )
    # b~ = -eps * 1, normalized so that b~^T lam = -1
    problem.add_constraint({f"lam[{r}]": epsilon for r in range(nrow)}, EQ, 1.0, name="norm")
    result = (backend or bk.get_backend()).solve(problem, settings)
    if result.status != Status.OPTIMAL:
        return None
    lam = np.array([result[f"lam[{r}]"] for r in range(nrow)])
    support = np.flatnonzero(lam > SUPPORT_TOL * max(1.0, lam.max()))
    positions = tuple(int(p) for p in sorted(rows[support]))
    a = np.asarray(a)
    mis = InfeasibleSubsystem(positions, tuple(int(a[p]) for p in positions),
                              tuple(float(x) for x in lam[support]))
    if check_minimality and not is_minimal(S_I, a, mis, epsilon, settings, backend):
        raise NumericalError(f"MIS support {positions} failed the minimality re-check")
    return mis


def is_minimal(S_I, a, mis: InfeasibleSubsystem, epsilon=1.0, settings=None, backend=None) -> bool:
    """True iff the subsystem is infeasible and every one-smaller subset is feasible."""
    idx = list(mis.indices)
    if not _is_infeasible(S_I, a, idx, epsilon, settings, backend):
        return False
    for drop in idx:
        rest = [p for p in idx if p != drop]
        if _is_infeasible(S_I, a, rest, epsilon, settings, backend):
            return False
    return True


def enumerate_mis(S_I, a, epsilon: float = 1.0, max_count: int = 1, rows=None, settings=None,
                  backend=None, check_minimality: bool = True) -> List[InfeasibleSubsystem]:
    """Up to ``max_count`` distinct MIS via objective-weight variation.

    Run 0 uses unit weights; run r >= 1 zeroes the weight of the (r-1)-th
    row of A~ (row order = internal-reaction order). Duplicates are dropped
    by sorted index set; output order is by discovery.
    """
    if max_count < 1:
        raise ValueError("max_count must be >= 1")
    S_I = sp.csc_matrix(S_I)
    nrow = S_I.shape[1] if rows is None else len(rows)
    found, seen = [], set()
    for run in range(min(max_count, nrow + 1)):
        w = np.ones(nrow)
        if run >= 1:
            w[run - 1] = 0.0
        mis = find_mis(S_I, a, epsilon, w, rows, settings, backend, check_minimality)
        if mis is None:
            break
        if mis.key not in seen:
            seen.add(mis.key)
            found.append(mis)
    return found


# ----------------------------------------------------------------------
# cuts


def cb_cut(mis: InfeasibleSubsystem) -> LinearConstraint:
    """sum_{k in C, a_k=0} a_k + sum_{k in C, a_k=1} (1 - a_k) >= 1, in standard form."""
    coeffs = {}
    ones = 0
    for k, d in zip(mis.indices, mis.directions):
        if d == 1:
            coeffs[aname(k)] = -1.0
            ones += 1
        else:
            coeffs[aname(k)] = 1.0
    return LinearConstraint(coeffs, GE, 1.0 - ones, name="cb")


def no_good_cut(a) -> LinearConstraint:
    """Excludes exactly the assignment ``a`` over all internal reactions."""
    a = tuple(int(x) for x in a)
    return cb_cut(InfeasibleSubsystem(tuple(range(len(a))), a))


def select_cuts(pool: Iterable[InfeasibleSubsystem], strategy: CutStrategy, n_internal: int):
    pool = list(pool)
    if not pool:
        raise ValueError("empty cut pool")
    if strategy.kind == ALL:
        return pool
    distinct = list({m.key: m for m in pool}.values())
    if strategy.kind == DISTINCT:
        return distinct
    ordered = sorted(distinct, key=lambda m: (len(m), m.indices, m.directions))
    if strategy.kind == KSMALLEST:
        return ordered[: strategy.k]
    dense_ok = [m for m in ordered if len(m) / max(n_internal, 1) <= strategy.density]
    return dense_ok or ordered[:1]


# ----------------------------------------------------------------------
# main loop


def complete_assignment(S_I, a, v_internal, epsilon: float = 1.0, settings=None, backend=None,
                        tol: float = ACTIVE_FLUX_TOL) -> Optional[np.ndarray]:
    """Re-choose the directions of zero-flux reactions so that ``a`` becomes feasible.

    The master fixes ``a_k`` even where ``v_k = 0``, and an unlucky choice
    there makes the full subproblem infeasible although ``v`` itself has no
    loop. Returns a feasible assignment agreeing with ``a`` on the active
    reactions, or None if ``a`` is already feasible, has no free entries, or
    the active part is infeasible (a real cut is needed then).
    """
    a = np.asarray(a, dtype=int)
    v_internal = np.asarray(v_internal, dtype=float)
    active = np.flatnonzero(np.abs(v_internal) > tol)
    free = np.setdiff1d(np.arange(a.size), active)
    if free.size == 0:
        return None
    if check_subproblem(S_I, a, epsilon, settings, backend) is not None:
        return None
    found = check_subproblem(S_I, a, epsilon, settings, backend, rows=active)
    if found is None:
        return None
    dmu = found[1]
    b = a.copy()
    b[free] = np.where(dmu[free] < 0, 1, np.where(dmu[free] > 0, 0, a[free]))
    if check_subproblem(S_I, b, epsilon, settings, backend) is not None:
        return b
    # some energies sat exactly at zero: fix free directions one at a time;
    # each step has a feasible choice unless the column of S_I is empty
    rows = list(active)
    for k in free:
        for choice in (b[k], 1 - b[k]):
            b[k] = choice
            if check_subproblem(S_I, b, epsilon, settings, backend, rows=sorted(rows + [k])) is not None:
                rows.append(k)
                break
        else:
            return None
    return b


def _round_assignment(values, n_internal, tol) -> np.ndarray:
    a = np.array([values[aname(k)] for k in range(n_internal)])
    rounded = np.round(a)
    if np.any(np.abs(a - rounded) > tol):
        logger.warning("master binaries off integrality by %.2g", np.abs(a - rounded).max())
    return rounded.astype(int)


def solve_llfba_benders(model, config: Optional[BendersConfig] = None, settings: Optional[SolveSettings] = None,
                        backend=None, instance: str = ""):
    """Solve loopless FBA by combinatorial Benders cuts.

    Returns ``(FluxSolution, SolveReport)``. The solution carries ``mu`` and
    ``delta_mu`` from a final subproblem solve.
    """
    config = config or BendersConfig()
    settings = settings or SolveSettings()
    backend = backend or bk.get_backend()
    fm = _flux_model(model)
    limit = min(settings.time_limit_s, config.time_limit_s or math.inf)
    t0 = time.perf_counter()
    deadline = t0 + limit
    report = SolveReport(
        instance=instance or fm.name,
        method="no_good" if config.no_good_only else "benders",
        formulation=config.master_formulation,
        pct=config.cuts_per_iter_pct,
        strategy=str(config.cut_strategy),
    )
    S_I = internal_submatrix(fm)
    nI = fm.n_internal
    per_iter = config.cuts_per_iteration(fm.n_reactions)

    def finish(status, sol=None):
        report.status = status
        report.wall_time = time.perf_counter() - t0
        if sol is None:
            sol = FluxSolution(status)
        sol.status = status
        report.objective = sol.objective_value
        sol.extra["report"] = report
        return sol, report

    form = config.master_formulation
    if form != BIGM and not bk.supports_indicators(backend):
        # same contract as the monolithic indicator model: linearize with big-M
        logger.warning("%r lacks indicator support; using the big-M master", backend)
        form = BIGM
    master = build_master(model, replace(config, master_formulation=form))

    fba_obj = None
    if config.check_fba_match:
        fba = solve_fba(model, settings.remaining(deadline), backend)
        if fba.status == Status.INFEASIBLE:
            return finish(Status.INFEASIBLE)
        if fba.optimal:
            fba_obj = fba.objective_value

    while True:
        if time.perf_counter() >= deadline:
            return finish(Status.TIME_LIMIT)
        if report.iterations >= config.max_iterations:
            return finish(Status.TIME_LIMIT)
        tm = time.perf_counter()
        result = backend.solve(master, settings.remaining(deadline))
        report.master_time += time.perf_counter() - tm
        report.iterations += 1
        if result.status != Status.OPTIMAL:
            return finish(result.status)
        report.master_objectives.append(result.objective)
        if report.iterations == 1 and fba_obj is not None:
            if abs(result.objective - fba_obj) > FBA_MATCH_TOL * max(1.0, abs(fba_obj)):
                logger.error("first master objective %.6g deviates from FBA %.6g", result.objective, fba_obj)
                return finish(Status.NUMERICAL_ERROR)
        a = _round_assignment(result.values, nI, settings.integrality_tol)

        tm = time.perf_counter()
        sub_settings = settings.remaining(deadline)
        try:
            completed = None
            if nI:
                vI = np.array([result[vname(j)] for j in fm.internal])
                completed = complete_assignment(S_I, a, vI, config.epsilon, sub_settings, backend)
            if completed is not None:
                # the master flux is already loopless; only directions of zero fluxes were off
                a = completed
                cuts = []
            elif nI == 0:
                cuts = []
            elif config.no_good_only:
                feasible = check_subproblem(S_I, a, config.epsilon, sub_settings, backend)
                cuts = [] if feasible is not None else [no_good_cut(a)]
            else:
                pool = enumerate_mis(S_I, a, config.epsilon, per_iter, settings=sub_settings,
                                     backend=backend, check_minimality=config.check_minimality)
                cuts = [cb_cut(m) for m in select_cuts(pool, config.cut_strategy, nI)] if pool else []
                if pool:
                    report.subsystems.append((tuple(int(x) for x in a), pool))
        except NumericalError as exc:
            logger.error("%s", exc)
            return finish(Status.NUMERICAL_ERROR)
        report.mis_time += time.perf_counter() - tm
        if not cuts:
            break
        for cut in cuts:
            master.constraints.append(cut)
        report.cuts += len(cuts)
        logger.debug("iteration %d: objective %.6g, %d cuts", report.iterations, result.objective, len(cuts))

    v = np.array([result[vname(j)] for j in range(fm.n_reactions)])
    sol = FluxSolution(Status.OPTIMAL, v=v, objective_value=float(fm.c @ v))
    sol.extra["a"] = a
    if hasattr(model, "enzyme_usage"):
        sol.extra["e"] = model.enzyme_usage(result.values)
    _apply_polish(model, sol, settings, backend)
    if nI:
        certificate = check_subproblem(S_I, a, config.epsilon, settings, backend)
        if certificate is None:
            return finish(Status.NUMERICAL_ERROR)
        sol.mu, sol.delta_mu = certificate
    else:
        sol.mu = np.zeros(fm.n_metabolites)
        sol.delta_mu = np.zeros(0)
    return finish(Status.OPTIMAL, sol)
