#!/usr/bin/env python3
"""Convert an SBML level 3 (fbc v2) model into the package's JSON format.

Only what loopless FBA needs is kept: species, reaction stoichiometry,
flux bounds and the active objective. Used once to produce
``tests/data/e_coli_core.json`` from the textbook E. coli core model that
ships with cobrapy::

    python3 scripts/sbml_to_json.py textbook.xml.gz tests/data/e_coli_core.json --id e_coli_core
"""

import argparse
import gzip
import json
import xml.etree.ElementTree as ET

NS = {
    "sbml": "http://www.sbml.org/sbml/level3/version1/core",
    "fbc": "http://www.sbml.org/sbml/level3/version1/fbc/version2",
}
FBC = "{%s}" % NS["fbc"]


def strip_prefix(sid, prefix):
    return sid[len(prefix):] if sid.startswith(prefix) else sid


def convert(path, model_id=None):
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rb") as fh:
        root = ET.parse(fh).getroot()
    model = root.find("sbml:model", NS)

    params = {p.get("id"): float(p.get("value")) for p in model.iterfind("sbml:listOfParameters/sbml:parameter", NS)}

    metabolites = []
    for sp in model.iterfind("sbml:listOfSpecies/sbml:species", NS):
        if sp.get("boundaryCondition") == "true":
            continue
        metabolites.append({"id": strip_prefix(sp.get("id"), "M_"), "compartment": sp.get("compartment")})
    known = {m["id"] for m in metabolites}

    objective = {}
    active = model.find("fbc:listOfObjectives", NS)
    if active is not None:
        active_id = active.get(FBC + "activeObjective")
        for obj in active.iterfind("fbc:objective", NS):
            if obj.get(FBC + "id") != active_id:
                continue
            for fo in obj.iterfind("fbc:listOfFluxObjectives/fbc:fluxObjective", NS):
                objective[fo.get(FBC + "reaction")] = float(fo.get(FBC + "coefficient"))

    reactions = []
    for rx in model.iterfind("sbml:listOfReactions/sbml:reaction", NS):
        stoich = {}
        for tag, sign in (("sbml:listOfReactants", -1.0), ("sbml:listOfProducts", 1.0)):
            for ref in rx.iterfind(f"{tag}/sbml:speciesReference", NS):
                met = strip_prefix(ref.get("species"), "M_")
                if met in known:
                    stoich[met] = stoich.get(met, 0.0) + sign * float(ref.get("stoichiometry", "1"))
        rid = rx.get("id")
        reactions.append({
            "id": strip_prefix(rid, "R_"),
            "lower_bound": params[rx.get(FBC + "lowerFluxBound")],
            "upper_bound": params[rx.get(FBC + "upperFluxBound")],
            "objective_coefficient": objective.get(rid, 0.0),
            "metabolites": {k: v for k, v in stoich.items() if v != 0},
        })

    return {
        "schema_version": "1",
        "id": model_id or model.get("id"),
        "metabolites": metabolites,
        "reactions": reactions,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("sbml")
    parser.add_argument("output")
    parser.add_argument("--id", dest="model_id")
    args = parser.parse_args()
    doc = convert(args.sbml, args.model_id)
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
    print(f"{doc['id']}: {len(doc['metabolites'])} metabolites, {len(doc['reactions'])} reactions")


if __name__ == "__main__":
    main()
