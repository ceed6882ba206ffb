"""JSON model documents (BiGG-style) and solution files.

Model document::

    {
      "schema_version": "1",
      "id": "e_coli_core",
      "metabolites": [{"id": "glc__D_e", "compartment": "e"}, ...],
      "reactions": [
        {"id": "PGI", "lower_bound": -1000, "upper_bound": 1000,
         "objective_coefficient": 0, "metabolites": {"g6p_c": -1, "f6p_c": 1},
         "is_exchange": false},
        ...
      ]
    }

``is_exchange`` is optional. Without it a reaction counts as exchange when
its id starts with ``EX_``, ``DM_`` or ``SK_``, or when it touches a single
metabolite. Plain BiGG JSON exports load unchanged.
"""

from __future__ import annotations

import json
import math
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .model import FluxSolution, MetabolicModel, ValidationError

SCHEMA_VERSION = "1"
EXCHANGE_PREFIXES = ("EX_", "DM_", "SK_")


class ParseError(ValueError):
    pass


def _number(x):
    """Serialize floats as ints when exact; json writes shortest round-trip repr otherwise."""
    x = float(x)
    if math.isfinite(x) and x == int(x) and abs(x) < 2**53:
        return int(x)
    return x


def is_exchange(reaction: dict) -> bool:
    flag = reaction.get("is_exchange")
    if flag is not None:
        return bool(flag)
    if str(reaction["id"]).startswith(EXCHANGE_PREFIXES):
        return True
    return len([c for c in reaction.get("metabolites", {}).values() if c != 0]) == 1


def model_from_document(doc: dict) -> MetabolicModel:
    if not isinstance(doc, dict):
        raise ParseError("model document must be a JSON object")
    try:
        metabolites = doc["metabolites"]
        reactions = doc["reactions"]
    except KeyError as exc:
        raise ParseError(f"missing key {exc.args[0]!r}") from None
    met_ids = []
    for met in metabolites:
        if not isinstance(met, dict) or "id" not in met:
            raise ParseError("every metabolite needs an 'id'")
        met_ids.append(str(met["id"]))
    if len(set(met_ids)) != len(met_ids):
        raise ValidationError("duplicate metabolite ids")
    row_of = {mid: i for i, mid in enumerate(met_ids)}

    rxn_ids, lb, ub, c, internal = [], [], [], [], []
    rows, cols, vals = [], [], []
    for j, rxn in enumerate(reactions):
        try:
            rid = str(rxn["id"])
            lo = float(rxn.get("lower_bound", 0.0))
            hi = float(rxn.get("upper_bound", 1000.0))
            obj = float(rxn.get("objective_coefficient", 0.0))
            stoich = rxn.get("metabolites", {})
            if not isinstance(stoich, dict):
                raise TypeError("'metabolites' must map ids to coefficients")
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"reaction #{j}: {exc}") from None
        if lo > hi:
            raise ValidationError(f"reaction {rid!r}: lower bound {lo} > upper bound {hi}")
        for mid, coef in stoich.items():
            if mid not in row_of:
                raise ValidationError(f"reaction {rid!r} references unknown metabolite {mid!r}")
            if float(coef) != 0.0:
                rows.append(row_of[mid])
                cols.append(j)
                vals.append(float(coef))
        rxn_ids.append(rid)
        lb.append(lo)
        ub.append(hi)
        c.append(obj)
        if not is_exchange(rxn):
            internal.append(j)
    if len(set(rxn_ids)) != len(rxn_ids):
        raise ValidationError("duplicate reaction ids")
    S = sp.csc_matrix((vals, (rows, cols)), shape=(len(met_ids), len(rxn_ids)))
    return MetabolicModel(met_ids, rxn_ids, S, np.array(lb), np.array(ub), np.array(c),
                          np.array(internal, dtype=int), name=str(doc.get("id", "model")))


def model_to_document(model: MetabolicModel, compartments: Optional[dict] = None) -> dict:
    compartments = compartments or {}
    internal = set(model.internal.tolist())
    S = model.S.tocsc()
    reactions = []
    for j, rid in enumerate(model.reaction_ids):
        lo, hi = S.indptr[j], S.indptr[j + 1]
        reactions.append({
            "id": rid,
            "lower_bound": _number(model.lb[j]),
            "upper_bound": _number(model.ub[j]),
            "objective_coefficient": _number(model.c[j]),
            "metabolites": {model.metabolite_ids[i]: _number(x) for i, x in zip(S.indices[lo:hi], S.data[lo:hi])},
            "is_exchange": j not in internal,
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "id": model.name,
        "metabolites": [{"id": mid, "compartment": compartments.get(mid, "c")} for mid in model.metabolite_ids],
        "reactions": reactions,
    }


def load_model(path) -> MetabolicModel:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return model_from_document(doc)


def save_model(model: MetabolicModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_document(model), fh, indent=1)
        fh.write("\n")


def solution_to_document(sol: FluxSolution, model: MetabolicModel) -> dict:
    doc = {"status": sol.status, "objective": _number(sol.objective_value) if sol.v is not None else None}
    if sol.v is not None:
        doc["fluxes"] = {rid: float(x) for rid, x in zip(model.reaction_ids, sol.v)}
    if sol.delta_mu is not None:
        doc["delta_mu"] = {model.reaction_ids[j]: float(x) for j, x in zip(model.internal, sol.delta_mu)}
    if sol.mu is not None:
        doc["mu"] = {mid: float(x) for mid, x in zip(model.metabolite_ids, sol.mu)}
    return doc


def save_solution(sol: FluxSolution, path, model: MetabolicModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(solution_to_document(sol, model), fh, indent=1)
        fh.write("\n")


def load_solution(path, model: MetabolicModel) -> FluxSolution:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    sol = FluxSolution(doc["status"])
    if "fluxes" in doc:
        try:
            sol.v = np.array([float(doc["fluxes"][rid]) for rid in model.reaction_ids])
        except KeyError as exc:
            raise ValidationError(f"solution lacks flux for {exc.args[0]!r}") from None
        sol.objective_value = float(model.c @ sol.v)
    if "delta_mu" in doc:
        sol.delta_mu = np.array([float(doc["delta_mu"][model.reaction_ids[j]]) for j in model.internal])
    if "mu" in doc:
        sol.mu = np.array([float(doc["mu"][mid]) for mid in model.metabolite_ids])
    return sol
