"""Enzyme-constrained models with randomly generated kinetic data.

Reversible reactions are split into a forward and a backward column so that
each direction gets its own turnover number. One enzyme usage variable
``e_p`` is added per enzyme together with the mass-balance row
``e_p - sum_j v_j / kcat_pj = 0``; proteins are pooled into two mass groups
whose molar-mass-weighted usage is capped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .backend import EQ, LE, LinearProblem
from .model import MetabolicModel, ValidationError

__all__ = [
    "SplitMapping",
    "EnzymeData",
    "EnzymeModel",
    "split_reversible",
    "generate_enzyme_data",
    "build_enzyme_model",
    "save_enzyme_data",
    "load_enzyme_data",
]

GROUP_CAPACITY = 0.5
MAX_CONCENTRATION = 1000.0
KCAT_FLOOR = 1e-3

FORWARD, BACKWARD = "forward", "backward"


@dataclass
class SplitMapping:
    """For every column of the split model: (original column, sign, direction)."""

    origin: np.ndarray
    sign: np.ndarray
    direction: List[str]

    def fold(self, v_split: np.ndarray, n_original: int) -> np.ndarray:
        v = np.zeros(n_original)
        np.add.at(v, self.origin, self.sign * np.asarray(v_split))
        return v


def split_reversible(model: MetabolicModel) -> Tuple[MetabolicModel, SplitMapping]:
    """Make every flux nonnegative.

    A reversible reaction ``r`` becomes ``r_f`` with bounds ``[0, u]`` and
    ``r_b`` (negated column) with bounds ``[0, -l]``. Backward-only reactions
    are flipped in place. Columns keep their original order with each
    backward half directly after its forward half.
    """
    S = model.S.tocsc()
    cols, lb, ub, c, ids = [], [], [], [], []
    origin, sign, direction, internal = [], [], [], []
    internal_set = set(model.internal.tolist())
    for j in range(model.n_reactions):
        l, u, rid = model.lb[j], model.ub[j], model.reaction_ids[j]
        halves = []
        if l < 0 < u:
            halves = [(1.0, 0.0, u, f"{rid}_f", FORWARD), (-1.0, 0.0, -l, f"{rid}_b", BACKWARD)]
        elif u <= 0 and l < 0:
            halves = [(-1.0, -u, -l, f"{rid}_b", BACKWARD)]
        else:
            halves = [(1.0, l, u, rid, FORWARD)]
        for s, lo, hi, new_id, d in halves:
            if j in internal_set:
                internal.append(len(ids))
            cols.append(s * S[:, j])
            lb.append(lo)
            ub.append(hi)
            c.append(s * model.c[j])
            ids.append(new_id)
            origin.append(j)
            sign.append(s)
            direction.append(d)
    S_new = sp.hstack(cols).tocsc() if cols else sp.csc_matrix((model.n_metabolites, 0))
    split = MetabolicModel(
        model.metabolite_ids, ids, S_new, np.array(lb), np.array(ub), np.array(c),
        np.array(internal, dtype=int), name=f"{model.name}_split",
    )
    return split, SplitMapping(np.array(origin, dtype=int), np.array(sign), direction)


@dataclass
class EnzymeData:
    """Kinetic and proteome data keyed by original reaction id.

    ``enzymes`` entries: ``{"id", "proteins", "reactions"}``. Turnover
    numbers are per original reaction and direction, in 1/h.
    """

    enzymes: List[dict]
    kcat_forward: Dict[str, float]
    kcat_backward: Dict[str, float]
    protein_molar_mass: Dict[str, float]
    mass_groups: Dict[str, str]
    group_capacity: Dict[str, float] = field(default_factory=lambda: {"A": GROUP_CAPACITY, "B": GROUP_CAPACITY})
    enzyme_capacity: Dict[str, float] = field(default_factory=dict)
    seed: Optional[int] = None

    def validate(self) -> None:
        for table in (self.kcat_forward, self.kcat_backward):
            for rid, k in table.items():
                if not k > 0:
                    raise ValidationError(f"non-positive kcat {k} for {rid!r}")
        for eid, cap in self.enzyme_capacity.items():
            if not 0 <= cap <= MAX_CONCENTRATION:
                raise ValidationError(f"capacity of {eid!r} outside [0, {MAX_CONCENTRATION}]")
        for enz in self.enzymes:
            for p in enz["proteins"]:
                if p not in self.protein_molar_mass:
                    raise ValidationError(f"protein {p!r} has no molar mass")
                if self.mass_groups.get(p) not in self.group_capacity:
                    raise ValidationError(f"protein {p!r} has no known mass group")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "enzymes": self.enzymes,
            "kcat_forward": self.kcat_forward,
            "kcat_backward": self.kcat_backward,
            "protein_molar_mass": self.protein_molar_mass,
            "mass_groups": self.mass_groups,
            "group_capacity": self.group_capacity,
            "enzyme_capacity": self.enzyme_capacity,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EnzymeData":
        return cls(
            enzymes=[dict(e) for e in doc["enzymes"]],
            kcat_forward={k: float(v) for k, v in doc["kcat_forward"].items()},
            kcat_backward={k: float(v) for k, v in doc["kcat_backward"].items()},
            protein_molar_mass={k: float(v) for k, v in doc["protein_molar_mass"].items()},
            mass_groups=dict(doc["mass_groups"]),
            group_capacity={k: float(v) for k, v in doc.get("group_capacity", {"A": GROUP_CAPACITY, "B": GROUP_CAPACITY}).items()},
            enzyme_capacity={k: float(v) for k, v in doc.get("enzyme_capacity", {}).items()},
            seed=doc.get("seed"),
        )


def save_enzyme_data(data: EnzymeData, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data.to_dict(), fh, indent=1)


def load_enzyme_data(path) -> EnzymeData:
    with open(path, encoding="utf-8") as fh:
        return EnzymeData.from_dict(json.load(fh))


def generate_enzyme_data(
    model: MetabolicModel,
    seed: int = 0,
    proteins_per_enzyme: int = 1,
    molar_mass_range: Tuple[float, float] = (0.0, 1.0),
    capacity: float = MAX_CONCENTRATION,
) -> EnzymeData:
    """Random kinetic data: one synthetic enzyme per reaction.

    Turnover numbers are ``max(|N(0,1)|, 1e-3)``, drawn independently per
    direction; molar masses are uniform on ``(lo, hi]``; each protein joins
    mass group A or B with probability 1/2. Data is keyed by the reaction
    ids of ``model``; pass the same model to :func:`build_enzyme_model`
    (an already split model splits to itself).
    """
    rng = np.random.default_rng(seed)
    base_ids = list(model.reaction_ids)
    enzymes, kf, kb, mass, groups, caps = [], {}, {}, {}, {}, {}
    lo, hi = molar_mass_range
    for idx, rid in enumerate(base_ids):
        kf[rid] = float(max(abs(rng.standard_normal()), KCAT_FLOOR))
        kb[rid] = float(max(abs(rng.standard_normal()), KCAT_FLOOR))
        proteins = []
        for q in range(proteins_per_enzyme):
            pid = f"P{idx}_{q}"
            # uniform on (lo, hi]
            mass[pid] = float(hi - (hi - lo) * rng.random())
            groups[pid] = "A" if rng.random() < 0.5 else "B"
            proteins.append(pid)
        eid = f"E{idx}"
        enzymes.append({"id": eid, "proteins": proteins, "reactions": [rid]})
        caps[eid] = float(capacity)
    data = EnzymeData(enzymes, kf, kb, mass, groups, enzyme_capacity=caps, seed=seed)
    data.validate()
    return data


@dataclass(eq=False)
class EnzymeModel:
    """Split metabolic model plus enzyme rows and capacities.

    ``S_enz`` is ``[[S, 0], [K, I_p]]`` with ``K[p, j] = -1/kcat_pj``.
    ``G`` (2 x p) holds, per mass group, the molar mass summed over the
    enzyme's proteins in that group.
    """

    base: MetabolicModel
    mapping: SplitMapping
    original: MetabolicModel
    enzyme_ids: List[str]
    K: sp.csr_matrix
    e_ub: np.ndarray
    groups: List[str]
    G: np.ndarray
    group_capacity: np.ndarray

    @property
    def n_enzymes(self) -> int:
        return len(self.enzyme_ids)

    @property
    def S_enz(self) -> sp.csc_matrix:
        m, n = self.base.S.shape
        p = self.n_enzymes
        return sp.bmat([[self.base.S, sp.csc_matrix((m, p))], [self.K, sp.identity(p)]], format="csc")

    @property
    def n_extra_variables(self) -> int:
        return self.n_enzymes

    @property
    def n_extra_constraints(self) -> int:
        return self.n_enzymes + len(self.groups)

    @property
    def name(self) -> str:
        return f"{self.original.name}_enz"

    def add_enzyme_block(self, problem: LinearProblem) -> None:
        for p, eid in enumerate(self.enzyme_ids):
            problem.add_variable(f"e[{p}]", lb=0.0, ub=float(self.e_ub[p]))
        K = self.K.tocsr()
        for p in range(self.n_enzymes):
            lo, hi = K.indptr[p], K.indptr[p + 1]
            coeffs = {f"v[{j}]": float(c) for j, c in zip(K.indices[lo:hi], K.data[lo:hi])}
            coeffs[f"e[{p}]"] = 1.0
            problem.add_constraint(coeffs, EQ, 0.0, name=f"enz_mb[{p}]")
        for g, name in enumerate(self.groups):
            coeffs = {f"e[{p}]": float(self.G[g, p]) for p in np.flatnonzero(self.G[g])}
            problem.add_constraint(coeffs, LE, float(self.group_capacity[g]), name=f"group[{name}]")

    def enzyme_usage(self, values: dict) -> np.ndarray:
        return np.array([values[f"e[{p}]"] for p in range(self.n_enzymes)])

    def fold(self, v_split) -> np.ndarray:
        """Fluxes of the split model mapped back onto the original reactions."""
        return self.mapping.fold(v_split, self.original.n_reactions)

    def mass_balance_residual(self, v, e) -> float:
        return float(np.abs(self.K @ np.asarray(v) + np.asarray(e)).max(initial=0.0))


def build_enzyme_model(model: MetabolicModel, data: EnzymeData) -> EnzymeModel:
    """Split ``model`` and attach the enzyme block described by ``data``."""
    data.validate()
    split, mapping = split_reversible(model)
    col_of = {}
    for j, (o, d) in enumerate(zip(mapping.origin, mapping.direction)):
        col_of[(model.reaction_ids[o], d)] = j

    rows, cols, vals = [], [], []
    enzyme_ids, e_ub = [], []
    for p, enz in enumerate(data.enzymes):
        enzyme_ids.append(enz["id"])
        e_ub.append(data.enzyme_capacity.get(enz["id"], MAX_CONCENTRATION))
        for rid in enz["reactions"]:
            for direction, table in ((FORWARD, data.kcat_forward), (BACKWARD, data.kcat_backward)):
                j = col_of.get((rid, direction))
                if j is None:
                    continue
                if rid not in table:
                    raise ValidationError(f"no {direction} kcat for catalyzed reaction {rid!r}")
                rows.append(p)
                cols.append(j)
                vals.append(-1.0 / table[rid])
    K = sp.csr_matrix((vals, (rows, cols)), shape=(len(enzyme_ids), split.n_reactions))

    groups = sorted(data.group_capacity)
    G = np.zeros((len(groups), len(enzyme_ids)))
    for p, enz in enumerate(data.enzymes):
        for prot in enz["proteins"]:
            G[groups.index(data.mass_groups[prot]), p] += data.protein_molar_mass[prot]
    caps = np.array([data.group_capacity[g] for g in groups])
    return EnzymeModel(split, mapping, model, enzyme_ids, K, np.array(e_ub, dtype=float), groups, G, caps)
