"""FBA and the monolithic loopless-FBA MIP reformulations.

Variable naming used throughout (``j`` is a column of S, ``i`` a metabolite,
``k`` a position in ``model.internal``)::

    v[j]        flux
    mu[i]       metabolite potential
    dmu[k]      reaction energy of internal reaction k
    a[k]        direction binary, 1 = forward
    e[p]        enzyme usage (enzyme models only)
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import backend as bk
from .backend import BINARY, EQ, GE, LE, CapabilityError, LinearProblem, SolveSettings
from .model import FluxSolution, MetabolicModel, Status, internal_submatrix

logger = logging.getLogger(__name__)

BIGM, INDICATOR, HULL = "BigM", "Indicator", "Hull"
FORMULATIONS = (BIGM, INDICATOR, HULL)


def vname(j):
    return f"v[{j}]"


def aname(k):
    return f"a[{k}]"


def dname(k):
    return f"dmu[{k}]"


def mname(i):
    return f"mu[{i}]"


def ename(p):
    return f"e[{p}]"


@dataclass
class LooplessConfig:
    epsilon: float = 1.0
    big_M: Optional[float] = None
    formulation: str = BIGM
    allow_fallback: bool = True

    def resolved_big_M(self, model) -> float:
        if self.big_M is not None:
            return float(self.big_M)
        return max(_flux_model(model).max_abs_bound, 2.0 * self.epsilon)

    def validate(self, model, settings: Optional[SolveSettings] = None) -> None:
        tol = settings.feasibility_tol if settings else 1e-6
        if not self.epsilon > tol:
            raise ValueError(f"epsilon={self.epsilon} must exceed the feasibility tolerance {tol}")
        M = self.resolved_big_M(model)
        if M < _flux_model(model).max_abs_bound:
            raise ValueError(f"big_M={M} is below the largest flux bound")
        if not M > self.epsilon:
            raise ValueError("big_M must exceed epsilon")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")


def required_big_M(model, epsilon: float = 1.0, max_internal: int = 16,
                   settings: Optional[SolveSettings] = None, backend=None) -> float:
    """Smallest M for which the big-M box on dmu loses no sign pattern.

    The default M (largest flux bound) also caps |dmu|, i.e. it caps the
    ratio max|dmu| / epsilon a certificate may need. That ratio depends on
    S only, so a tight network can need more than the flux bounds suggest.
    This enumerates 2^(|I|-1) direction patterns, so it is meant for small
    models and for certifying test instances.
    """
    fm = _flux_model(model)
    nI = fm.n_internal
    if nI > max_internal:
        raise ValueError(f"{nI} internal reactions; pattern enumeration capped at {max_internal}")
    backend = backend or bk.get_backend()
    settings = settings or SolveSettings()
    S_I = internal_submatrix(fm).tocsc()
    columns = []
    for k in range(nI):
        lo, hi = S_I.indptr[k], S_I.indptr[k + 1]
        columns.append({mname(i): float(c) for i, c in zip(S_I.indices[lo:hi], S_I.data[lo:hi])})
    need = 0.0
    if nI == 0:
        return max(fm.max_abs_bound, 2.0 * epsilon)
    # a and 1 - a need the same ratio (negate mu), so fix the first sign
    for rest in itertools.product((1, 0), repeat=nI - 1):
        signs = (1,) + rest
        problem = LinearProblem(name="dmu_ratio", maximize=False)
        for i in range(fm.n_metabolites):
            problem.add_variable(mname(i))
        problem.add_variable("t", lb=0.0)
        problem.objective["t"] = 1.0
        for k, a in enumerate(signs):
            coeffs = columns[k]
            if a:  # dmu_k <= -eps and dmu_k >= -t
                problem.add_constraint(coeffs, LE, -epsilon)
                problem.add_constraint({**coeffs, "t": 1.0}, GE, 0.0)
            else:  # dmu_k >= eps and dmu_k <= t
                problem.add_constraint(coeffs, GE, epsilon)
                problem.add_constraint({**{m: -c for m, c in coeffs.items()}, "t": 1.0}, GE, 0.0)
        res = backend.solve(problem, settings)
        if res.status == Status.OPTIMAL:
            need = max(need, res.objective)
    return max(fm.max_abs_bound, need, 2.0 * epsilon)


def _flux_model(model) -> MetabolicModel:
    """The MetabolicModel carrying the fluxes (enzyme models wrap one)."""
    return getattr(model, "base", model)


def add_flux_core(problem: LinearProblem, model) -> None:
    """Flux variables, steady state rows and, for enzyme models, the enzyme block."""
    fm = _flux_model(model)
    for j in range(fm.n_reactions):
        problem.add_variable(vname(j), lb=fm.lb[j], ub=fm.ub[j])
    S = fm.S.tocsr()
    for i in range(fm.n_metabolites):
        lo, hi = S.indptr[i], S.indptr[i + 1]
        coeffs = {vname(j): float(c) for j, c in zip(S.indices[lo:hi], S.data[lo:hi])}
        problem.add_constraint(coeffs, EQ, 0.0, name=f"mb[{i}]")
    if hasattr(model, "add_enzyme_block"):
        model.add_enzyme_block(problem)
    for j in np.flatnonzero(fm.c):
        problem.objective[vname(j)] = float(fm.c[j])
    problem.maximize = True


def add_potentials(problem: LinearProblem, model, dmu_bound: Optional[float] = None) -> None:
    """mu (free) and dmu with the Kirchhoff rows dmu = S_I^T mu."""
    fm = _flux_model(model)
    S_I = internal_submatrix(fm)
    for i in range(fm.n_metabolites):
        problem.add_variable(mname(i))
    bound = math.inf if dmu_bound is None else dmu_bound
    for k in range(fm.n_internal):
        problem.add_variable(dname(k), lb=-bound, ub=bound)
        col = S_I[:, k]
        coeffs = {mname(i): float(c) for i, c in zip(col.indices, col.data)}
        coeffs[dname(k)] = -1.0
        problem.add_constraint(coeffs, EQ, 0.0, name=f"kirchhoff[{k}]")


def build_fba(model) -> LinearProblem:
    problem = LinearProblem(name="fba")
    add_flux_core(problem, model)
    return problem


def build_llfba_bigm(model, config: LooplessConfig) -> LinearProblem:
    fm = _flux_model(model)
    M, eps = config.resolved_big_M(model), config.epsilon
    problem = LinearProblem(name="llfba_bigm")
    add_flux_core(problem, model)
    add_potentials(problem, model)
    for k, j in enumerate(fm.internal):
        a, d, v = aname(k), dname(k), vname(j)
        problem.add_variable(a, BINARY)
        # -M a + eps (1 - a) <= dmu <= -eps a + M (1 - a)
        problem.add_constraint({d: 1.0, a: M + eps}, GE, eps, name=f"dmu_lo[{k}]")
        problem.add_constraint({d: 1.0, a: M + eps}, LE, M, name=f"dmu_hi[{k}]")
        # -M (1 - a) <= v <= M a
        problem.add_constraint({v: 1.0, a: -M}, GE, -M, name=f"v_lo[{k}]")
        problem.add_constraint({v: 1.0, a: -M}, LE, 0.0, name=f"v_hi[{k}]")
    return problem


def build_llfba_indicator(model, config: LooplessConfig) -> LinearProblem:
    fm = _flux_model(model)
    M, eps = config.resolved_big_M(model), config.epsilon
    problem = LinearProblem(name="llfba_indicator")
    add_flux_core(problem, model)
    # dmu boxed at +-M so the indicator rows have finite activity
    add_potentials(problem, model, dmu_bound=M)
    for k, j in enumerate(fm.internal):
        a, d, v = aname(k), dname(k), vname(j)
        problem.add_variable(a, BINARY)
        problem.add_indicator(a, 1, {v: 1.0}, GE, 0.0, name=f"fwd_v[{k}]")
        problem.add_indicator(a, 1, {d: 1.0}, LE, -eps, name=f"fwd_dmu[{k}]")
        problem.add_indicator(a, 0, {v: 1.0}, LE, 0.0, name=f"bwd_v[{k}]")
        problem.add_indicator(a, 0, {d: 1.0}, GE, eps, name=f"bwd_dmu[{k}]")
    return problem


def build_llfba_hull(model, config: LooplessConfig) -> LinearProblem:
    """Hull reformulation with two binaries and a 2-way split per disjunction.

    Per internal reaction: y1 + y2 = 1, v = v1 + v2, dmu = d1 + d2,
    0 <= v1 <= u*y1, l*y2 <= v2 <= 0, -M*y1 <= d1 <= -eps*y1,
    eps*y2 <= d2 <= M*y2.
    """
    fm = _flux_model(model)
    M, eps = config.resolved_big_M(model), config.epsilon
    nI = fm.n_internal
    problem = LinearProblem(name="llfba_hull")
    add_flux_core(problem, model)
    add_potentials(problem, model)
    for k, j in enumerate(fm.internal):
        v, d = vname(j), dname(k)
        y1, y2 = f"y[{k}]", f"y[{k + nI}]"
        v1, v2 = f"v1[{k}]", f"v2[{k}]"
        d1, d2 = f"dmu1[{k}]", f"dmu2[{k}]"
        problem.add_variable(y1, BINARY)
        problem.add_variable(y2, BINARY)
        problem.add_variable(v1, lb=0.0, ub=max(fm.ub[j], 0.0))
        problem.add_variable(v2, lb=min(fm.lb[j], 0.0), ub=0.0)
        problem.add_variable(d1, lb=-M, ub=0.0)
        problem.add_variable(d2, lb=0.0, ub=M)
        problem.add_constraint({y1: 1.0, y2: 1.0}, EQ, 1.0, name=f"one_of[{k}]")
        problem.add_constraint({v: 1.0, v1: -1.0, v2: -1.0}, EQ, 0.0, name=f"v_split[{k}]")
        problem.add_constraint({d: 1.0, d1: -1.0, d2: -1.0}, EQ, 0.0, name=f"dmu_split[{k}]")
        problem.add_constraint({v1: 1.0, y1: -max(fm.ub[j], 0.0)}, LE, 0.0, name=f"v1_hi[{k}]")
        problem.add_constraint({v2: 1.0, y2: -min(fm.lb[j], 0.0)}, GE, 0.0, name=f"v2_lo[{k}]")
        problem.add_constraint({d1: 1.0, y1: eps}, LE, 0.0, name=f"d1_hi[{k}]")
        problem.add_constraint({d1: 1.0, y1: M}, GE, 0.0, name=f"d1_lo[{k}]")
        problem.add_constraint({d2: 1.0, y2: -eps}, GE, 0.0, name=f"d2_lo[{k}]")
        problem.add_constraint({d2: 1.0, y2: -M}, LE, 0.0, name=f"d2_hi[{k}]")
    return problem


def hull_size(model) -> tuple:
    """Closed-form (variables, constraints) of :func:`build_llfba_hull`.

    Variables: n fluxes, m potentials, |I| reaction energies, 4|I| split
    continuous and 2|I| binaries. Constraints: m steady-state rows, |I|
    Kirchhoff rows and 9 rows per disjunction (choice, two splits, six hull
    inequalities).
    """
    fm = _flux_model(model)
    n, m, nI = fm.n_reactions, fm.n_metabolites, fm.n_internal
    p = getattr(model, "n_extra_variables", 0)
    r = getattr(model, "n_extra_constraints", 0)
    return n + p + m + nI + 4 * nI + 2 * nI, m + r + nI + 9 * nI


# ----------------------------------------------------------------------
# solving


def _to_solution(model, result, problem, with_potentials: bool) -> FluxSolution:
    fm = _flux_model(model)
    if result.values is None or result.status not in (Status.OPTIMAL, Status.TIME_LIMIT):
        return FluxSolution(result.status, extra={"wall_time": result.wall_time})
    v = np.array([result[vname(j)] for j in range(fm.n_reactions)])
    sol = FluxSolution(result.status, v=v, objective_value=float(fm.c @ v))
    if with_potentials:
        sol.mu = np.array([result[mname(i)] for i in range(fm.n_metabolites)])
        sol.delta_mu = np.array([result[dname(k)] for k in range(fm.n_internal)])
    if problem.has_variable(aname(0)):
        sol.extra["a"] = np.array([round(result[aname(k)]) for k in range(fm.n_internal)], dtype=int)
    elif problem.has_variable("y[0]"):
        sol.extra["a"] = np.array([round(result[f"y[{k}]"]) for k in range(fm.n_internal)], dtype=int)
    if hasattr(model, "enzyme_usage"):
        sol.extra["e"] = model.enzyme_usage(result.values)
    sol.extra["wall_time"] = result.wall_time
    return sol


def solve_fba(model, settings: Optional[SolveSettings] = None, backend=None) -> FluxSolution:
    """Maximize c^T v subject to S v = 0 and the flux bounds."""
    problem = build_fba(model)
    result = (backend or bk.get_backend()).solve(problem, settings)
    return _to_solution(model, result, problem, with_potentials=False)


def polish(model, a, settings=None, backend=None) -> Optional[FluxSolution]:
    """Re-solve FBA with every internal flux sign fixed by ``a``.

    The MIP optimum is a point of this LP's feasible set, so the LP returns
    the same objective up to tolerance but at a clean simplex vertex.
    """
    fm = _flux_model(model)
    problem = build_fba(model)
    for k, j in enumerate(fm.internal):
        var = problem.variable(vname(j))
        if a[k] == 1:
            var.lb = max(var.lb, 0.0)
        else:
            var.ub = min(var.ub, 0.0)
    result = (backend or bk.get_backend()).solve(problem, settings)
    if not result.optimal:
        return None
    return _to_solution(model, result, problem, with_potentials=False)


def _solve_llfba(model, builder, config, settings, backend) -> FluxSolution:
    config.validate(model, settings)
    problem = builder(model, config)
    backend = backend or bk.get_backend()
    t0 = time.perf_counter()
    result = backend.solve(problem, settings)
    sol = _to_solution(model, result, problem, with_potentials=True)
    if sol.optimal and "a" in sol.extra:
        _apply_polish(model, sol, settings, backend)
    sol.extra["wall_time"] = time.perf_counter() - t0
    sol.extra["formulation"] = problem.name
    return sol


def _apply_polish(model, sol, settings, backend) -> None:
    tol = settings.feasibility_tol if settings else 1e-6
    clean = polish(model, sol.extra["a"], settings, backend)
    if clean is not None and clean.objective_value >= sol.objective_value - tol * max(1.0, abs(sol.objective_value)):
        sol.v = clean.v
        sol.objective_value = clean.objective_value
        if "e" in clean.extra:
            sol.extra["e"] = clean.extra["e"]


def solve_llfba_bigm(model, config: Optional[LooplessConfig] = None, settings=None, backend=None) -> FluxSolution:
    return _solve_llfba(model, build_llfba_bigm, config or LooplessConfig(), settings, backend)


def solve_llfba_indicator(model, config: Optional[LooplessConfig] = None, settings=None, backend=None) -> FluxSolution:
    """Indicator formulation; linearized with big-M on incapable backends.

    The fallback uses exactly the big-M reformulation with the configured M.
    Set ``config.allow_fallback = False`` to get a CapabilityError instead.
    """
    config = config or LooplessConfig(formulation=INDICATOR)
    backend = backend or bk.get_backend()
    if not bk.supports_indicators(backend):
        if not config.allow_fallback:
            raise CapabilityError(f"{backend!r} cannot handle indicator constraints")
        logger.info("backend lacks indicator support, falling back to big-M")
        sol = _solve_llfba(model, build_llfba_bigm, config, settings, backend)
        sol.extra["fallback"] = True
        return sol
    return _solve_llfba(model, build_llfba_indicator, config, settings, backend)


def solve_llfba_hull(model, config: Optional[LooplessConfig] = None, settings=None, backend=None) -> FluxSolution:
    return _solve_llfba(model, build_llfba_hull, config or LooplessConfig(formulation=HULL), settings, backend)


def solve_llfba(model, config: Optional[LooplessConfig] = None, settings=None, backend=None) -> FluxSolution:
    config = config or LooplessConfig()
    solver = {BIGM: solve_llfba_bigm, INDICATOR: solve_llfba_indicator, HULL: solve_llfba_hull}[config.formulation]
    return solver(model, config, settings, backend)


def solve_enzyme_fba(enzyme_model, settings: Optional[SolveSettings] = None, backend=None) -> FluxSolution:
    """FBA over the enzyme-extended system; ``extra['e']`` holds enzyme usage."""
    return solve_fba(enzyme_model, settings, backend)
