"""JSON schemas for mechanisms, consumers, queries, graphs and reports.

Rationals travel as "p/q" strings, never floats.  Serialization is
deterministic (sorted keys, fixed orderings) so emitted reports are
byte-identical across runs.
"""

from __future__ import annotations

import json

from .analysis import (
    CertifiedVerdict,
    DerivabilityResult,
    OptimalResult,
    RefutedByAnchor,
    RefutedByForcedStructure,
    UniversalityReport,
    UnknownVerdict,
)
from .consumer import (
    Bayesian,
    BinLoss,
    Consumer,
    ExplicitMatrixLoss,
    GraphMonotoneLoss,
    RiskAverse,
)
from .errors import InputError
from .mechanism import Mechanism, Remapping
from .querydomain import (
    ConstraintGraph,
    Count,
    ExplicitTable,
    Histogram,
    ModCycle,
    Star,
    Sum,
)
from .rationals import rat, rat_str


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- mechanisms ----------------------------------------------------------------

def _matrix_to_json(m) -> dict:
    return {
        "rows": list(m.row_labels),
        "cols": list(m.col_labels),
        "entries": [[rat_str(v) for v in row] for row in m.entries],
    }


def mechanism_to_json(m: Mechanism) -> dict:
    return _matrix_to_json(m)


def remapping_to_json(t: Remapping) -> dict:
    return _matrix_to_json(t)


def _matrix_from_json(obj, cls):
    try:
        return cls(tuple(obj["rows"]), tuple(obj["cols"]), tuple(map(tuple, obj["entries"])))
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed matrix object: missing/odd field {exc}") from exc


def mechanism_from_json(obj) -> Mechanism:
    return _matrix_from_json(obj, Mechanism)


def remapping_from_json(obj) -> Remapping:
    return _matrix_from_json(obj, Remapping)


# -- consumers -------------------------------------------------------------------

def consumer_to_json(c: Consumer) -> dict:
    if isinstance(c.loss, BinLoss):
        loss = "bin"
    elif isinstance(c.loss, GraphMonotoneLoss):
        loss = {"graph_monotone": [rat_str(v) for v in c.loss.table]}
    else:
        nested: dict = {}
        for (i, r), v in sorted(c.loss.entries.items()):
            nested.setdefault(i, {})[r] = rat_str(v)
        loss = {"matrix": nested}
    out = {"loss": loss}
    if isinstance(c.knowledge, Bayesian):
        out["prior"] = {
            k: rat_str(v) for k, v in sorted(c.knowledge.prior.items()) if v != 0
        }
    else:
        out["support"] = sorted(c.knowledge.support)
    return out


def consumer_from_json(obj) -> Consumer:
    if not isinstance(obj, dict):
        raise InputError("consumer must be a JSON object")
    loss_obj = obj.get("loss", "bin")
    if loss_obj == "bin":
        loss = BinLoss()
    elif isinstance(loss_obj, dict) and "graph_monotone" in loss_obj:
        loss = GraphMonotoneLoss(tuple(rat(v) for v in loss_obj["graph_monotone"]))
    elif isinstance(loss_obj, dict) and "matrix" in loss_obj:
        entries = {}
        for i, row in loss_obj["matrix"].items():
            for r, v in row.items():
                entries[(i, r)] = rat(v)
        loss = ExplicitMatrixLoss(entries)
    else:
        raise InputError(f"unknown loss spec in consumer field 'loss': {loss_obj!r}")
    has_prior = "prior" in obj
    has_support = "support" in obj
    if has_prior == has_support:
        raise InputError("consumer needs exactly one of 'prior' or 'support'")
    if has_prior:
        return Consumer(loss, Bayesian({k: rat(v) for k, v in obj["prior"].items()}))
    return Consumer(loss, RiskAverse(frozenset(obj["support"])))


def consumers_from_json(obj) -> list:
    if isinstance(obj, dict):
        obj = [obj]
    if not isinstance(obj, list) or not obj:
        raise InputError("expected a consumer object or a nonempty list of them")
    return [consumer_from_json(c) for c in obj]


# -- queries ----------------------------------------------------------------------

_FAMILIES = {"count", "sum", "histogram", "modcycle", "star"}


def query_from_json(obj):
    if not isinstance(obj, dict):
        raise InputError("query must be a JSON object")
    if "table" in obj:
        tbl = obj["table"]
        try:
            domain = tuple(tbl["domain"])
            n = int(tbl["n"])
            mapping = tbl["map"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed explicit table: {exc}") from exc
        by_name = {str(d): d for d in domain}
        table = {}
        for key, result in mapping.items():
            parts = key.split(",") if key else []
            try:
                db = tuple(by_name[p] for p in parts)
            except KeyError as exc:
                raise InputError(f"table key {key!r} uses unknown record {exc}") from exc
            if len(db) != n:
                raise InputError(f"table key {key!r} does not list {n} records")
            table[db] = tuple(result) if isinstance(result, list) else result
        return ExplicitTable(domain=domain, n=n, table=table)
    family = obj.get("family")
    params = obj.get("params", {})
    if family not in _FAMILIES:
        raise InputError(f"unknown query family {family!r}; expected one of {sorted(_FAMILIES)}")
    try:
        if family == "count":
            return Count(int(params["n"]))
        if family == "sum":
            return Sum(int(params["n"]), int(params["m"]))
        if family == "histogram":
            return Histogram(int(params["n"]), int(params["c"]))
        if family == "modcycle":
            return ModCycle(int(params["n"]), int(params["m"]))
        return Star(int(params["n"]), int(params["k"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad parameters for query family {family!r}: {exc}") from exc


# -- graphs -----------------------------------------------------------------------

def graph_to_json(g: ConstraintGraph) -> dict:
    out = {
        "vertices": list(g.vertices),
        "edges": [[u, v] for u, v in g.edge_list()],
    }
    if g.witnesses is not None:
        out["witnesses"] = {
            f"{u}--{v}": [
                ",".join(map(str, g.witnesses[frozenset((u, v))][0])),
                ",".join(map(str, g.witnesses[frozenset((u, v))][1])),
            ]
            for u, v in g.edge_list()
        }
    return out


def graph_from_json(obj) -> ConstraintGraph:
    from .querydomain import graph_from_edges

    try:
        return graph_from_edges(obj["vertices"], obj["edges"])
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed graph object: {exc}") from exc


# -- results ----------------------------------------------------------------------

def optimal_result_to_json(res: OptimalResult) -> dict:
    return {
        "mechanism": mechanism_to_json(res.mechanism),
        "value": rat_str(res.value),
        "unique": res.unique,
    }


def derivability_to_json(res: DerivabilityResult) -> dict:
    return {
        "derivable": res.derivable,
        "remapping": remapping_to_json(res.remapping) if res.remapping else None,
    }


def universality_to_json(report: UniversalityReport) -> dict:
    d = report.detail
    if isinstance(d, CertifiedVerdict):
        return {
            "verdict": "certified",
            "candidate": mechanism_to_json(d.candidate),
            "optimal_values": [rat_str(v) for v in d.optimal_values],
            "remappings": [remapping_to_json(t) for t in d.remappings],
        }
    if isinstance(d, RefutedByAnchor):
        return {
            "verdict": "refuted",
            "kind": "anchor",
            "anchor_consumer": d.anchor_index,
            "anchor_rows": list(d.anchor_rows),
            "anchor": mechanism_to_json(d.anchor),
            "other_consumer": d.other_index,
            "other_optimum": rat_str(d.other_optimum),
            "best_from_anchor": rat_str(d.best_from_anchor),
            "gap": rat_str(d.gap),
            "witness_remapping": remapping_to_json(d.witness_remapping),
        }
    if isinstance(d, RefutedByForcedStructure):
        return {
            "verdict": "refuted",
            "kind": "forced-structure",
            "center": d.center,
            "degree": d.degree,
            "threshold": rat_str(d.threshold),
            "center_coefficient": rat_str(d.center_coefficient),
            "consumers": list(d.consumer_indices),
        }
    if isinstance(d, UnknownVerdict):
        return {"verdict": "unknown", "reason": d.reason}
    raise InputError(f"cannot serialize report detail {d!r}")
