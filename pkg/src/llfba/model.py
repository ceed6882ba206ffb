"""Constraint-based metabolic model and the linear-algebra queries on it."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

__all__ = [
    "MetabolicModel",
    "FluxSolution",
    "Status",
    "ValidationError",
    "internal_submatrix",
    "nullspace_basis",
    "build_example_loop_model",
    "build_two_cycle_model",
    "random_model",
]

RANK_TOL = 1e-9


class ValidationError(ValueError):
    """A model or document violates a structural invariant."""


class Status:
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    TIME_LIMIT = "TimeLimit"
    NUMERICAL_ERROR = "NumericalError"

    ALL = (OPTIMAL, INFEASIBLE, UNBOUNDED, TIME_LIMIT, NUMERICAL_ERROR)


@dataclass(frozen=True, eq=False)
class MetabolicModel:
    """Stoichiometric matrix, flux bounds, objective and internal reactions.

    ``internal`` holds the column indices of internal reactions in sorted
    order. Every loopless quantity indexed by internal reaction (direction
    binaries, ``delta_mu``) uses positions into this array, never raw column
    numbers.
    """

    metabolite_ids: tuple
    reaction_ids: tuple
    S: sp.csc_matrix
    lb: np.ndarray
    ub: np.ndarray
    c: np.ndarray
    internal: np.ndarray
    name: str = "model"

    def __post_init__(self):
        S = sp.csc_matrix(self.S, dtype=float)
        S.eliminate_zeros()
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "metabolite_ids", tuple(self.metabolite_ids))
        object.__setattr__(self, "reaction_ids", tuple(self.reaction_ids))
        for attr in ("lb", "ub", "c"):
            arr = np.array(getattr(self, attr), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        internal = np.array(self.internal, dtype=int).reshape(-1)
        internal.setflags(write=False)
        object.__setattr__(self, "internal", internal)
        self._validate()

    def _validate(self):
        m, n = self.S.shape
        if len(self.metabolite_ids) != m or len(self.reaction_ids) != n:
            raise ValidationError(
                f"id lists ({len(self.metabolite_ids)}, {len(self.reaction_ids)}) "
                f"do not match S shape {self.S.shape}"
            )
        for name, arr in (("lb", self.lb), ("ub", self.ub), ("c", self.c)):
            if arr.shape != (n,):
                raise ValidationError(f"{name} has shape {arr.shape}, expected ({n},)")
        bad = np.flatnonzero(self.lb > self.ub)
        if bad.size:
            raise ValidationError(
                f"lower bound exceeds upper bound for {self.reaction_ids[bad[0]]!r}"
            )
        idx = self.internal
        if idx.size:
            if idx.min() < 0 or idx.max() >= n:
                raise ValidationError("internal index out of range")
            if np.any(np.diff(idx) <= 0):
                raise ValidationError("internal indices must be unique and sorted")
        if m:
            row_nnz = np.diff(self.S.tocsr().indptr)
            empty = np.flatnonzero(row_nnz == 0)
            if empty.size:
                raise ValidationError(
                    f"metabolite {self.metabolite_ids[empty[0]]!r} takes part in no reaction"
                )

    @property
    def n_metabolites(self) -> int:
        return self.S.shape[0]

    @property
    def n_reactions(self) -> int:
        return self.S.shape[1]

    @property
    def n_internal(self) -> int:
        return int(self.internal.size)

    @property
    def exchange(self) -> np.ndarray:
        mask = np.ones(self.n_reactions, dtype=bool)
        mask[self.internal] = False
        return np.flatnonzero(mask)

    @property
    def reversible(self) -> np.ndarray:
        """Boolean mask of reactions whose bounds allow both directions."""
        return (self.lb < 0) & (self.ub > 0)

    @property
    def max_abs_bound(self) -> float:
        if self.n_reactions == 0:
            return 0.0
        return float(max(np.abs(self.lb).max(), np.abs(self.ub).max()))

    def reaction_index(self, rid: str) -> int:
        return self.reaction_ids.index(rid)

    def replace(self, **changes) -> "MetabolicModel":
        fields = dict(
            metabolite_ids=self.metabolite_ids,
            reaction_ids=self.reaction_ids,
            S=self.S,
            lb=self.lb,
            ub=self.ub,
            c=self.c,
            internal=self.internal,
            name=self.name,
        )
        fields.update(changes)
        return MetabolicModel(**fields)

    def __eq__(self, other):
        if not isinstance(other, MetabolicModel):
            return NotImplemented
        return (
            self.metabolite_ids == other.metabolite_ids
            and self.reaction_ids == other.reaction_ids
            and self.S.shape == other.S.shape
            and (self.S != other.S).nnz == 0
            and np.array_equal(self.lb, other.lb)
            and np.array_equal(self.ub, other.ub)
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.internal, other.internal)
        )

    __hash__ = None


@dataclass
class FluxSolution:
    """Result of one FBA/ll-FBA solve.

    ``delta_mu`` is indexed by position in ``model.internal``; ``mu`` by
    metabolite. Both are None when no thermodynamic certificate exists.
    """

    status: str
    v: Optional[np.ndarray] = None
    objective_value: float = float("nan")
    delta_mu: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL

    def check(self, model: MetabolicModel, tol: float = 1e-6) -> None:
        """Raise AssertionError if the solution breaks its invariants."""
        if self.optimal:
            v = np.asarray(self.v)
            assert np.abs(model.S @ v).max(initial=0.0) <= tol, "steady state violated"
            assert np.all(v >= model.lb - tol) and np.all(v <= model.ub + tol), "bounds violated"
        if self.delta_mu is not None and self.mu is not None:
            expected = internal_submatrix(model).T @ self.mu
            assert np.allclose(self.delta_mu, expected, atol=tol), "delta_mu != S_I^T mu"


def internal_submatrix(model: MetabolicModel) -> sp.csc_matrix:
    """Columns of S that belong to internal reactions, in ``model.internal`` order."""
    return model.S[:, model.internal].tocsc()


def nullspace_basis(S_I, rel_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of null(S_I), one column per basis vector.

    Uses column-pivoted QR of S_I^T: the trailing columns of Q beyond the
    numerical rank span the orthogonal complement of the row space.
    """
    A = S_I.toarray() if sp.issparse(S_I) else np.asarray(S_I, dtype=float)
    m, k = A.shape
    if k == 0:
        return np.zeros((0, 0))
    if m == 0 or not np.any(A):
        return np.eye(k)
    Q, R, _ = scipy.linalg.qr(A.T, mode="full", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > rel_tol * diag.max())) if diag.size else 0
    return Q[:, rank:]


def build_example_loop_model() -> MetabolicModel:
    """Three-metabolite, five-reaction network with one internal loop.

    r1 feeds A, r5 drains C; r2: A -> B, r3: B -> C, r4: A -> C are the
    reversible internal reactions that close the cycle A -> B -> C -> A.
    """
    S = np.array(
        [
            [1, -1, 0, -1, 0],
            [0, 1, -1, 0, 0],
            [0, 0, 1, 1, -1],
        ],
        dtype=float,
    )
    return MetabolicModel(
        metabolite_ids=("A", "B", "C"),
        reaction_ids=("r1", "r2", "r3", "r4", "r5"),
        S=sp.csc_matrix(S),
        lb=np.array([0, -30, -30, -30, 0], dtype=float),
        ub=np.array([10, 30, 30, 30, 10], dtype=float),
        c=np.array([0, 1, 1, 1, 0], dtype=float),
        internal=np.array([1, 2, 3]),
        name="example_loop",
    )


def build_two_cycle_model() -> MetabolicModel:
    """Eight reactions containing two reaction-disjoint internal triangles.

    Uptake -> A; triangle A->B->C with shortcut A->C; triangle C->D->E with
    shortcut C->E; E -> secretion. Maximizing all internal fluxes makes
    plain FBA run both loops.
    """
    mets = ("A", "B", "C", "D", "E")
    rxns = ("EX_in", "t1_AB", "t1_BC", "t1_AC", "t2_CD", "t2_DE", "t2_CE", "EX_out")
    S = np.zeros((5, 8))
    S[0, 0] = 1
    for col, (src, dst) in enumerate([(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)], start=1):
        S[src, col] = -1
        S[dst, col] = 1
    S[4, 7] = -1
    lb = np.array([0] + [-30] * 6 + [0], dtype=float)
    ub = np.array([10] + [30] * 6 + [10], dtype=float)
    c = np.array([0] + [1] * 6 + [0], dtype=float)
    return MetabolicModel(mets, rxns, sp.csc_matrix(S), lb, ub, c, np.arange(1, 7), name="two_cycles")


def random_model(
    seed,
    n_metabolites: Optional[int] = None,
    n_internal: Optional[int] = None,
    max_reactions: int = 12,
    max_metabolites: int = 8,
) -> MetabolicModel:
    """Small random network with a few exchanges and a random objective.

    Internal columns have 2-3 nonzeros drawn from {-2,-1,1,2}; one uptake and
    one or two secretion reactions keep the flux cone nontrivial. Bounds are
    integers so every solve has an exactly representable optimum.
    """
    rng = np.random.default_rng(seed)
    m = int(n_metabolites or rng.integers(3, max_metabolites + 1))
    n_ex = int(rng.integers(2, 4))
    if n_internal is None:
        n_internal = int(rng.integers(3, max_reactions - n_ex + 1))
    n = n_internal + n_ex
    if n > max_reactions:
        raise ValueError(f"{n} reactions exceed max_reactions={max_reactions}")

    S = np.zeros((m, n))
    for j in range(n_internal):
        k = int(rng.integers(2, 4))
        rows = rng.choice(m, size=min(k, m), replace=False)
        S[rows, j] = rng.choice([-2, -1, 1, 2], size=rows.size)
        if np.all(S[rows, j] > 0) or np.all(S[rows, j] < 0):
            S[rows[0], j] = -S[rows[0], j]
    for r in np.flatnonzero(~S[:, :n_internal].any(axis=1)):
        j = int(rng.integers(n_internal))
        S[r, j] = rng.choice([-1, 1])

    ex_rows = rng.choice(m, size=n_ex, replace=False)
    lb = np.zeros(n)
    ub = np.zeros(n)
    for k, r in enumerate(ex_rows):
        j = n_internal + k
        if k == 0:
            S[r, j] = 1.0  # uptake
        else:
            S[r, j] = -1.0  # secretion
        ub[j] = float(rng.integers(5, 21))

    bound = rng.integers(10, 51, size=n_internal).astype(float)
    reversible = rng.random(n_internal) < 0.7
    lb[:n_internal] = np.where(reversible, -bound, 0.0)
    ub[:n_internal] = bound

    c = np.zeros(n)
    c[:n_internal] = rng.integers(0, 3, size=n_internal)
    if not c.any():
        c[int(rng.integers(n_internal))] = 1.0

    order = rng.permutation(n)
    S = S[:, order]
    lb, ub, c = lb[order], ub[order], c[order]
    was_internal = order < n_internal
    ids = [f"R{j}" if w else f"EX_{j}" for j, w in zip(range(n), was_internal)]
    return MetabolicModel(
        metabolite_ids=tuple(f"M{i}" for i in range(m)),
        reaction_ids=tuple(ids),
        S=sp.csc_matrix(S),
        lb=lb,
        ub=ub,
        c=c,
        internal=np.flatnonzero(was_internal),
        name=f"random_{seed}",
    )


def expand_columns(S_I, internal: Sequence[int], n: int) -> sp.csc_matrix:
    """Scatter internal columns back into an m x n matrix (zeros elsewhere)."""
    S_I = sp.csc_matrix(S_I)
    P = sp.csc_matrix(
        (np.ones(len(internal)), (np.asarray(internal, dtype=int), np.arange(len(internal)))),
        shape=(n, len(internal)),
    )
    return (S_I @ P.T).tocsc()
