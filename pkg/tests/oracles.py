"""Reference computations that share no code path with the solvers under test.

Everything here uses :func:`scipy.optimize.linprog` on dense arrays or plain
enumeration; nothing imports the library's problem builders or backend.
"""

import itertools

import numpy as np
from scipy.optimize import linprog


def lp_max(c, A_eq, b_eq, lb, ub):
    """max c^T v, A_eq v = b_eq, lb <= v <= ub; returns (objective, v) or None."""
    res = linprog(-np.asarray(c, float), A_eq=A_eq, b_eq=b_eq,
                  bounds=list(zip(lb, ub)), method="highs")
    if res.status != 0:
        return None
    return -res.fun, res.x


def potentials_exist(S_I, a, rows, eps=1.0):
    """Is there mu with sign-compatible energies on ``rows`` (dense LP)?"""
    rows = list(rows)
    if not rows:
        return True
    S_I = np.asarray(S_I, float)
    signs = np.array([1.0 if a[k] == 1 else -1.0 for k in rows])
    A = (S_I[:, rows] * signs).T
    res = linprog(np.zeros(S_I.shape[0]), A_ub=A, b_ub=-eps * np.ones(len(rows)),
                  bounds=[(None, None)] * S_I.shape[0], method="highs")
    return res.status == 0


def brute_force_llfba(model, eps=1.0):
    """Loopless optimum by enumerating every direction assignment.

    For each assignment whose potential system is feasible, solve FBA with
    the internal flux signs fixed; return the best objective (None if no
    assignment is feasible).
    """
    S = model.S.toarray()
    S_I = S[:, model.internal]
    nI = len(model.internal)
    best = None
    # a and its complement have the same potential feasibility (negate mu)
    feasible = {}
    for a in itertools.product((0, 1), repeat=nI):
        lb = model.lb.copy()
        ub = model.ub.copy()
        for k, j in enumerate(model.internal):
            if a[k] == 1:
                lb[j] = max(lb[j], 0.0)
            else:
                ub[j] = min(ub[j], 0.0)
        if np.any(lb > ub):
            continue
        flip = tuple(1 - x for x in a)
        if flip in feasible:
            feasible[a] = feasible[flip]
        else:
            feasible[a] = potentials_exist(S_I, a, range(nI), eps)
        if not feasible[a]:
            continue
        res = lp_max(model.c, S, np.zeros(S.shape[0]), lb, ub)
        if res is not None and (best is None or res[0] > best):
            best = res[0]
    return best


def fba_by_vertex_enumeration(model):
    """FBA optimum by enumerating basic solutions (tiny models only).

    A vertex of {S v = 0, lb <= v <= ub} fixes n - rank(S) fluxes at a bound
    and solves S v = 0 for the rest. Every bounded LP attains its optimum at
    such a point.
    """
    S = model.S.toarray()
    m, n = S.shape
    lb, ub, c = model.lb, model.ub, model.c
    best = None
    for r in range(n + 1):
        for fixed in itertools.combinations(range(n), r):
            free = [j for j in range(n) if j not in fixed]
            A = S[:, free]
            if free and np.linalg.matrix_rank(A) < len(free):
                continue
            for choice in itertools.product((0, 1), repeat=r):
                v = np.zeros(n)
                for j, up in zip(fixed, choice):
                    v[j] = ub[j] if up else lb[j]
                if free:
                    rhs = -S[:, list(fixed)] @ v[list(fixed)] if fixed else np.zeros(m)
                    x, *_ = np.linalg.lstsq(A, rhs, rcond=None)
                    v[free] = x
                if np.abs(S @ v).max(initial=0) > 1e-9:
                    continue
                if np.any(v < lb - 1e-9) or np.any(v > ub + 1e-9):
                    continue
                val = float(c @ v)
                if best is None or val > best:
                    best = val
    return best


def subsets_infeasible(S_I, a, eps=1.0):
    """All index subsets whose signed potential system is infeasible."""
    nI = np.asarray(S_I).shape[1]
    out = []
    for r in range(1, nI + 1):
        for sub in itertools.combinations(range(nI), r):
            if not potentials_exist(S_I, a, sub, eps):
                out.append(sub)
    return out


def minimal_infeasible_subsets(S_I, a, eps=1.0):
    bad = [set(s) for s in subsets_infeasible(S_I, a, eps)]
    return sorted(tuple(sorted(s)) for s in bad if not any(o < s for o in bad))
