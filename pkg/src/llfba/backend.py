"""Engine-neutral LP/MIP problem container and the HiGHS backend behind it.

Formulations never talk to an engine directly: they assemble a
:class:`LinearProblem` and hand it to a backend's ``solve``. The default
backend drives HiGHS through :func:`scipy.optimize.milp` (MIPs) and
:func:`scipy.optimize.linprog` with dual simplex (pure LPs, which need a
basic solution and duals).
"""

from __future__ import annotations

import logging
import math
import os
import time
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint as ScipyLinearConstraint, linprog, milp

from .model import Status

logger = logging.getLogger(__name__)

__all__ = [
    "BackendError",
    "CapabilityError",
    "Variable",
    "LinearConstraint",
    "IndicatorConstraint",
    "LinearProblem",
    "SolveSettings",
    "SolveResult",
    "HighsBackend",
    "get_backend",
    "supports_indicators",
    "solve",
]

CONTINUOUS = "Continuous"
BINARY = "Binary"

LE, EQ, GE = "<=", "==", ">="


class BackendError(RuntimeError):
    """The engine failed in a way that is not a solve status."""


class CapabilityError(BackendError):
    """The problem needs a feature the backend does not offer."""


@dataclass
class Variable:
    name: str
    kind: str = CONTINUOUS
    lb: float = -math.inf
    ub: float = math.inf


@dataclass
class LinearConstraint:
    coeffs: Dict[str, float]
    sense: str
    rhs: float
    name: str = ""

    def activity(self, values: Dict[str, float]) -> float:
        return sum(c * values[k] for k, c in self.coeffs.items())

    def is_satisfied(self, values: Dict[str, float], tol: float = 1e-9) -> bool:
        lhs = self.activity(values)
        if self.sense == LE:
            return lhs <= self.rhs + tol
        if self.sense == GE:
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= tol


@dataclass
class IndicatorConstraint:
    """``binary == active_value`` implies ``constraint``."""

    binary: str
    active_value: int
    constraint: LinearConstraint


@dataclass
class LinearProblem:
    variables: List[Variable] = field(default_factory=list)
    constraints: List[LinearConstraint] = field(default_factory=list)
    indicators: List[IndicatorConstraint] = field(default_factory=list)
    objective: Dict[str, float] = field(default_factory=dict)
    maximize: bool = True
    name: str = "problem"

    def __post_init__(self):
        self._index = {v.name: i for i, v in enumerate(self.variables)}

    # -- building ---------------------------------------------------------
    def add_variable(self, name, kind=CONTINUOUS, lb=-math.inf, ub=math.inf) -> str:
        if name in self._index:
            raise ValueError(f"duplicate variable {name!r}")
        if kind == BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        self._index[name] = len(self.variables)
        self.variables.append(Variable(name, kind, float(lb), float(ub)))
        return name

    def add_constraint(self, coeffs, sense, rhs, name="") -> LinearConstraint:
        con = LinearConstraint(dict(coeffs), sense, float(rhs), name)
        self.constraints.append(con)
        return con

    def add_indicator(self, binary, active_value, coeffs, sense, rhs, name="") -> IndicatorConstraint:
        ind = IndicatorConstraint(binary, int(active_value), LinearConstraint(dict(coeffs), sense, float(rhs), name))
        self.indicators.append(ind)
        return ind

    def variable(self, name) -> Variable:
        return self.variables[self._index[name]]

    def index(self, name) -> int:
        return self._index[name]

    def has_variable(self, name) -> bool:
        return name in self._index

    @property
    def is_mip(self) -> bool:
        return any(v.kind == BINARY for v in self.variables)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints) + len(self.indicators)

    def validate(self) -> None:
        for con in self.constraints + [i.constraint for i in self.indicators]:
            for k in con.coeffs:
                if k not in self._index:
                    raise ValueError(f"constraint {con.name!r} references undeclared {k!r}")
            if con.sense not in (LE, EQ, GE):
                raise ValueError(f"bad sense {con.sense!r}")
        for ind in self.indicators:
            if self.variable(ind.binary).kind != BINARY:
                raise ValueError(f"indicator on non-binary {ind.binary!r}")
        for k in self.objective:
            if k not in self._index:
                raise ValueError(f"objective references undeclared {k!r}")

    def copy(self) -> "LinearProblem":
        return LinearProblem(
            variables=[Variable(v.name, v.kind, v.lb, v.ub) for v in self.variables],
            constraints=list(self.constraints),
            indicators=list(self.indicators),
            objective=dict(self.objective),
            maximize=self.maximize,
            name=self.name,
        )

    # -- export -----------------------------------------------------------
    def to_lp_string(self) -> str:
        """Human-readable CPLEX-LP-style dump, for debugging only."""

        def expr(coeffs):
            if not coeffs:
                return "0"
            parts = []
            for k, c in coeffs.items():
                sign = "-" if c < 0 else "+"
                parts.append(f"{sign} {abs(c):.17g} {k}")
            text = " ".join(parts)
            return text[2:] if text.startswith("+ ") else text

        sense_lp = {LE: "<=", GE: ">=", EQ: "="}
        lines = ["\\ " + self.name, "Maximize" if self.maximize else "Minimize", " obj: " + expr(self.objective)]
        lines.append("Subject To")
        for i, con in enumerate(self.constraints):
            lines.append(f" {con.name or f'c{i}'}: {expr(con.coeffs)} {sense_lp[con.sense]} {con.rhs:.17g}")
        for i, ind in enumerate(self.indicators):
            con = ind.constraint
            lines.append(
                f" {con.name or f'ind{i}'}: {ind.binary} = {ind.active_value} -> "
                f"{expr(con.coeffs)} {sense_lp[con.sense]} {con.rhs:.17g}"
            )
        lines.append("Bounds")
        for v in self.variables:
            if v.kind == BINARY:
                continue
            lo = "-inf" if v.lb == -math.inf else f"{v.lb:.17g}"
            hi = "+inf" if v.ub == math.inf else f"{v.ub:.17g}"
            lines.append(f" {lo} <= {v.name} <= {hi}")
        binaries = [v.name for v in self.variables if v.kind == BINARY]
        if binaries:
            lines.append("Binaries")
            lines.append(" " + " ".join(binaries))
        lines.append("End")
        return "\n".join(lines) + "\n"

    def write_lp(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_lp_string())


@dataclass
class SolveSettings:
    time_limit_s: float = 1800.0
    feasibility_tol: float = 1e-6
    integrality_tol: float = 1e-6
    optimality_gap: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        for name in ("feasibility_tol", "integrality_tol", "optimality_gap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.time_limit_s > 0:
            raise ValueError("time_limit_s must be positive")

    def remaining(self, deadline: Optional[float]) -> "SolveSettings":
        """Copy with the time limit cut down to what is left before ``deadline``."""
        if deadline is None:
            return self
        left = max(deadline - time.perf_counter(), 1e-3)
        return SolveSettings(min(self.time_limit_s, left), self.feasibility_tol,
                             self.integrality_tol, self.optimality_gap, self.seed)


@dataclass
class SolveResult:
    status: str
    values: Optional[Dict[str, float]] = None
    objective: float = float("nan")
    duals: Optional[np.ndarray] = None
    x: Optional[np.ndarray] = None
    wall_time: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL

    def __getitem__(self, name) -> float:
        return self.values[name]


class HighsBackend:
    """HiGHS via scipy.

    With ``indicators=True`` indicator constraints are accepted and rewritten
    internally with the tightest big-M implied by the variable bounds of the
    implied row (the row's activity range when the binary is inactive).
    This needs every variable in an implied row to be bounded; otherwise a
    CapabilityError is raised. With ``indicators=False`` the backend refuses
    them and callers must linearize themselves.
    """

    def __init__(self, indicators: bool = True):
        self.indicators = indicators
        self.name = "highs" if indicators else "highs-bigm"

    def __repr__(self):
        return f"HighsBackend(indicators={self.indicators})"

    def supports_indicators(self) -> bool:
        return self.indicators

    # ------------------------------------------------------------------
    def _linearize_indicators(self, problem: LinearProblem) -> List[LinearConstraint]:
        rows = []
        for ind in problem.indicators:
            con = ind.constraint
            lo = hi = 0.0
            for k, c in con.coeffs.items():
                var = problem.variable(k)
                a, b = c * var.lb, c * var.ub
                lo += min(a, b)
                hi += max(a, b)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise CapabilityError(
                    f"indicator row {con.name!r} has unbounded activity; cannot derive big-M"
                )
            # slack term s(z) is 0 when z == active_value, 1 otherwise
            if ind.active_value == 1:
                z_coef, z_const = -1.0, 1.0
            else:
                z_coef, z_const = 1.0, 0.0
            senses = [LE, GE] if con.sense == EQ else [con.sense]
            for sense in senses:
                coeffs = dict(con.coeffs)
                if sense == LE:
                    M = max(hi - con.rhs, 0.0)
                    # sum <= rhs + M * s(z)
                    coeffs[ind.binary] = coeffs.get(ind.binary, 0.0) - M * z_coef
                    rows.append(LinearConstraint(coeffs, LE, con.rhs + M * z_const, con.name))
                else:
                    M = max(con.rhs - lo, 0.0)
                    coeffs[ind.binary] = coeffs.get(ind.binary, 0.0) + M * z_coef
                    rows.append(LinearConstraint(coeffs, GE, con.rhs - M * z_const, con.name))
        return rows

    def _matrices(self, problem: LinearProblem, rows: List[LinearConstraint]):
        nvar = problem.n_variables
        data, ri, ci = [], [], []
        lo = np.empty(len(rows))
        hi = np.empty(len(rows))
        for r, con in enumerate(rows):
            for k, c in con.coeffs.items():
                if c != 0.0:
                    data.append(c)
                    ri.append(r)
                    ci.append(problem.index(k))
            lo[r] = con.rhs if con.sense in (GE, EQ) else -np.inf
            hi[r] = con.rhs if con.sense in (LE, EQ) else np.inf
        A = sp.csr_matrix((data, (ri, ci)), shape=(len(rows), nvar))
        return A, lo, hi

    def solve(self, problem: LinearProblem, settings: Optional[SolveSettings] = None) -> SolveResult:
        settings = settings or SolveSettings()
        problem.validate()
        if problem.indicators and not self.indicators:
            raise CapabilityError(f"{self.name} does not support indicator constraints")
        t0 = time.perf_counter()
        nvar = problem.n_variables
        if nvar == 0:
            return SolveResult(Status.OPTIMAL, {}, 0.0, np.zeros(len(problem.constraints)), np.zeros(0), 0.0)

        rows = list(problem.constraints)
        if problem.indicators:
            rows += self._linearize_indicators(problem)
        sign = -1.0 if problem.maximize else 1.0
        cost = np.zeros(nvar)
        for k, c in problem.objective.items():
            cost[problem.index(k)] = sign * c
        lb = np.array([v.lb for v in problem.variables])
        ub = np.array([v.ub for v in problem.variables])
        integrality = np.array([1 if v.kind == BINARY else 0 for v in problem.variables])
        if np.any(lb > ub):
            return SolveResult(Status.INFEASIBLE, wall_time=time.perf_counter() - t0)
        A, rlo, rhi = self._matrices(problem, rows)

        try:
            if integrality.any():
                result = self._solve_mip(cost, A, rlo, rhi, lb, ub, integrality, settings)
            else:
                result = self._solve_lp(cost, A, rlo, rhi, lb, ub, settings, n_rows=len(problem.constraints))
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise BackendError(str(exc)) from exc
        result.wall_time = time.perf_counter() - t0
        if result.x is not None:
            result.values = {v.name: float(result.x[i]) for i, v in enumerate(problem.variables)}
            result.objective = float(sign * (cost @ result.x))
        if result.wall_time > settings.time_limit_s and result.status == Status.OPTIMAL:
            # answers that arrive after the deadline do not count as solved
            result.status = Status.TIME_LIMIT
        return result

    def _solve_mip(self, cost, A, rlo, rhi, lb, ub, integrality, settings):
        cons = [ScipyLinearConstraint(A, rlo, rhi)] if A.shape[0] else []
        with warnings.catch_warnings():
            # tolerance keys are forwarded to HiGHS verbatim, scipy warns about that
            warnings.simplefilter("ignore", RuntimeWarning)
            res = self._milp(cost, cons, integrality, lb, ub, settings)
        x = None if res.x is None else np.asarray(res.x, dtype=float)
        if res.status == 0:
            return SolveResult(Status.OPTIMAL, x=x)
        if res.status == 1:
            return SolveResult(Status.TIME_LIMIT, x=x)
        if res.status == 2:
            return SolveResult(Status.INFEASIBLE)
        if res.status == 3:
            return SolveResult(Status.UNBOUNDED)
        logger.warning("HiGHS MIP returned status %s: %s", res.status, res.message)
        return SolveResult(Status.NUMERICAL_ERROR, x=x)

    @staticmethod
    def _milp(cost, cons, integrality, lb, ub, settings):
        return milp(
            cost,
            constraints=cons,
            integrality=integrality,
            bounds=Bounds(lb, ub),
            options={
                "time_limit": settings.time_limit_s,
                "mip_rel_gap": settings.optimality_gap,
                "primal_feasibility_tolerance": settings.feasibility_tol,
                "dual_feasibility_tolerance": settings.feasibility_tol,
                "mip_feasibility_tolerance": settings.integrality_tol,
                "random_seed": settings.seed,
                "disp": False,
                "presolve": True,
            },
        )

    def _solve_lp(self, cost, A, rlo, rhi, lb, ub, settings, n_rows):
        # linprog wants separate equality / <= blocks
        eq = np.isfinite(rlo) & np.isfinite(rhi) & (rlo == rhi)
        le_hi = ~eq & np.isfinite(rhi)
        ge_lo = ~eq & np.isfinite(rlo)
        A = A.tocsr()
        A_ub = sp.vstack([A[le_hi], -A[ge_lo]]).tocsr() if (le_hi.any() or ge_lo.any()) else None
        b_ub = np.concatenate([rhi[le_hi], -rlo[ge_lo]]) if A_ub is not None else None
        A_eq = A[eq] if eq.any() else None
        b_eq = rhi[eq] if eq.any() else None
        res = linprog(
            cost,
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=A_eq,
            b_eq=b_eq,
            bounds=np.column_stack([lb, ub]),
            method="highs-ds",
            options={
                "time_limit": settings.time_limit_s,
                "primal_feasibility_tolerance": settings.feasibility_tol,
                "dual_feasibility_tolerance": settings.feasibility_tol,
                "presolve": True,
            },
        )
        if res.status == 0:
            duals = np.zeros(n_rows)
            if A_eq is not None:
                duals[np.flatnonzero(eq)] = res.eqlin.marginals
            if A_ub is not None:
                k = int(le_hi.sum())
                duals[np.flatnonzero(le_hi)] = res.ineqlin.marginals[:k]
                duals[np.flatnonzero(ge_lo)] = -res.ineqlin.marginals[k:]
            return SolveResult(Status.OPTIMAL, x=np.asarray(res.x, dtype=float), duals=duals)
        if res.status == 1:
            x = None if res.x is None else np.asarray(res.x, dtype=float)
            return SolveResult(Status.TIME_LIMIT, x=x)
        if res.status == 2:
            return SolveResult(Status.INFEASIBLE)
        if res.status == 3:
            return SolveResult(Status.UNBOUNDED)
        logger.warning("HiGHS LP returned status %s: %s", res.status, res.message)
        return SolveResult(Status.NUMERICAL_ERROR)


_BACKENDS = {
    "highs": lambda: HighsBackend(indicators=True),
    "highs-bigm": lambda: HighsBackend(indicators=False),
}

BACKEND_ENV = "LLFBA_BACKEND"


def get_backend(name: Optional[str] = None) -> HighsBackend:
    """Backend by name; falls back to $LLFBA_BACKEND, then ``"highs"``."""
    name = name or os.environ.get(BACKEND_ENV) or "highs"
    try:
        return _BACKENDS[name]()
    except KeyError:
        raise BackendError(f"unknown backend {name!r}; choose from {sorted(_BACKENDS)}") from None


def supports_indicators(backend) -> bool:
    return bool(backend.supports_indicators())


def solve(problem: LinearProblem, settings: Optional[SolveSettings] = None, backend=None) -> SolveResult:
    return (backend or get_backend()).solve(problem, settings)
