"""Independent thermodynamic checks of a flux vector.

Two routes that must agree:

* :func:`verify_loopless` looks for potentials ``mu`` whose reaction
  energies oppose every nonzero internal flux (and names a minimal cycle
  when none exist);
* :func:`verify_via_nullspace` looks directly for a sign-compatible cycle
  inside null(S_I) spanned by an explicit basis.

By Gordan's alternative exactly one of "potentials exist" and "a
sign-compatible cycle exists" holds, so the two verdicts coincide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import backend as bk
from .backend import EQ, GE, LE, LinearProblem
from .benders import check_subproblem, find_mis
from .model import MetabolicModel, Status, internal_submatrix, nullspace_basis

ZERO_FLUX_TOL = 1e-6


class InvalidInput(ValueError):
    pass


@dataclass
class Certified:
    mu: np.ndarray
    delta_mu: np.ndarray

    def __bool__(self):
        return True


@dataclass
class CycleFound:
    """``indices`` are column indices of S; ``reaction_ids`` their names."""

    indices: tuple
    reaction_ids: tuple

    def __bool__(self):
        return False


def _check_steady_state(model, v, tol):
    v = np.asarray(v, dtype=float)
    if v.shape != (model.n_reactions,):
        raise InvalidInput(f"flux vector has shape {v.shape}, expected ({model.n_reactions},)")
    residual = np.abs(model.S @ v).max(initial=0.0)
    if residual > tol * max(1.0, np.abs(v).max(initial=0.0)):
        raise InvalidInput(f"S v is not zero (residual {residual:.3g})")
    return v


def verify_loopless(model: MetabolicModel, v, epsilon: float = 1.0, tol: float = ZERO_FLUX_TOL,
                    backend=None):
    """Certify ``v`` with potentials or return a minimal offending cycle.

    Internal reactions with ``|v| <= tol`` are unconstrained; the remaining
    ones get ``dmu <= -eps`` (forward) or ``dmu >= eps`` (backward).
    """
    v = _check_steady_state(model, v, tol)
    S_I = internal_submatrix(model)
    vI = v[model.internal]
    a = (vI > 0).astype(int)
    active = np.flatnonzero(np.abs(vI) > tol)
    if active.size == 0:
        mu = np.zeros(model.n_metabolites)
        return Certified(mu, S_I.T @ mu)
    found = check_subproblem(S_I, a, epsilon, backend=backend, rows=active)
    if found is not None:
        return Certified(*found)
    mis = find_mis(S_I, a, epsilon, rows=active, backend=backend)
    cols = tuple(int(model.internal[k]) for k in mis.indices)
    return CycleFound(cols, tuple(model.reaction_ids[j] for j in cols))


def verify_via_nullspace(model: MetabolicModel, v, tol: float = ZERO_FLUX_TOL, backend=None,
                         basis: Optional[np.ndarray] = None) -> bool:
    """True iff no nonzero cycle in null(S_I) follows the signs of ``v``.

    Searches ``l = B x`` with ``l_k = 0`` off the support of ``v_I``,
    ``sign(l_k)`` matching ``sign(v_k)`` on it and ``sum_k sign(v_k) l_k = 1``.
    """
    v = _check_steady_state(model, v, tol)
    vI = v[model.internal]
    active = np.abs(vI) > tol
    if not active.any():
        return True
    B = nullspace_basis(internal_submatrix(model)) if basis is None else basis
    if B.shape[1] == 0:
        return True
    sgn = np.sign(vI) * active
    problem = LinearProblem(name="cycle_search", maximize=False)
    xs = [problem.add_variable(f"x[{t}]") for t in range(B.shape[1])]

    def row(k):
        return {xs[t]: float(B[k, t]) for t in range(B.shape[1]) if B[k, t] != 0.0}

    for k in range(B.shape[0]):
        coeffs = row(k)
        if not active[k]:
            if coeffs:
                problem.add_constraint(coeffs, EQ, 0.0, name=f"off[{k}]")
        elif coeffs:
            problem.add_constraint(coeffs, GE if sgn[k] > 0 else LE, 0.0, name=f"sign[{k}]")
    norm = {}
    for k in np.flatnonzero(active):
        for name, c in row(k).items():
            norm[name] = norm.get(name, 0.0) + sgn[k] * c
    if not norm:
        return True
    problem.add_constraint(norm, EQ, 1.0, name="norm")
    result = (backend or bk.get_backend()).solve(problem)
    if result.status == Status.OPTIMAL:
        return False
    if result.status == Status.INFEASIBLE:
        return True
    raise RuntimeError(f"cycle search ended with status {result.status}")
