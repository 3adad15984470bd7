"""Command-line front end.

Subcommands: graph, solve, derive, maximal, universal, extend, repro.
Inputs are JSON files (or built-in query families selected by flags); all
rationals are "p/q" strings.  Exit status: 0 on success/pass, 1 on scenario
failure, 2 on input errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import serialize
from .analysis import (
    best_remapping,
    check_derivable,
    optimal_mechanism,
    universality_check,
)
from .consumer import uniform_bayesian
from .errors import DpoptError, InputError
from .mechanism import (
    column_graphs,
    extend_by_labels,
    is_maximally_general,
    label_for_anchors,
    label_for_cycle,
)
from .querydomain import (
    Count,
    Histogram,
    ModCycle,
    Star,
    Sum,
    find_smallest_cycle,
    graph_for,
    to_dot,
)
from .rationals import parse_alpha, rat_str
from .scenarios import default_alpha, repro_scenario, run_all, scenario_names


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON (line {exc.lineno}, col {exc.colno})") from exc


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_graph_args(p: argparse.ArgumentParser):
    p.add_argument("--query", help="built-in query family: count|sum|histogram|modcycle|star")
    p.add_argument("--n", type=int, help="number of records")
    p.add_argument("--m", type=int, help="record bound (sum) or modulus (modcycle)")
    p.add_argument("--c", type=int, help="histogram categories")
    p.add_argument("--k", type=int, help="star record values")
    p.add_argument("--query-json", help="query JSON file ({family,params} or {table})")
    p.add_argument("--graph", help="graph JSON file ({vertices, edges})")


def _resolve_graph(args):
    sources = [s for s in (args.query, args.query_json, args.graph) if s]
    if len(sources) != 1:
        raise InputError("specify exactly one of --query, --query-json, --graph")
    if args.graph:
        return serialize.graph_from_json(_load_json(args.graph))
    if args.query_json:
        return graph_for(serialize.query_from_json(_load_json(args.query_json)))
    family = args.query
    need = lambda flag, value: value if value is not None else _missing(family, flag)
    if family == "count":
        spec = Count(need("--n", args.n))
    elif family == "sum":
        spec = Sum(need("--n", args.n), need("--m", args.m))
    elif family == "histogram":
        spec = Histogram(need("--n", args.n), need("--c", args.c))
    elif family == "modcycle":
        spec = ModCycle(need("--n", args.n), need("--m", args.m))
    elif family == "star":
        spec = Star(need("--n", args.n), need("--k", args.k))
    else:
        raise InputError(f"unknown query family {family!r}")
    return graph_for(spec)


def _missing(family, flag):
    raise InputError(f"query family {family!r} needs {flag}")


def _resolve_consumers(spec: str, g):
    if spec == "uniform-bin":
        return [uniform_bayesian(g.vertices)]
    if spec.lstrip().startswith(("{", "[")):
        try:
            obj = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise InputError(f"inline consumer JSON is invalid: {exc}") from exc
        return serialize.consumers_from_json(obj)
    return serialize.consumers_from_json(_load_json(spec))


# -- subcommands ------------------------------------------------------------------

def _cmd_graph(args) -> int:
    g = _resolve_graph(args)
    wrote = False
    if args.dot:
        _emit(to_dot(g), args.dot)
        wrote = True
    if args.json:
        _emit(serialize.dumps(serialize.graph_to_json(g)), args.json)
        wrote = True
    if not wrote:
        sys.stdout.write(to_dot(g))
    return 0


def _cmd_solve(args) -> int:
    g = _resolve_graph(args)
    alpha = parse_alpha(args.alpha)
    consumers = _resolve_consumers(args.consumer, g)
    if len(consumers) != 1:
        raise InputError("solve expects exactly one consumer")
    outputs = args.output_labels.split(",") if args.output_labels else None
    res = optimal_mechanism(g, alpha, consumers[0], output_labels=outputs)
    _emit(serialize.dumps(serialize.optimal_result_to_json(res)), args.out)
    return 0


def _cmd_derive(args) -> int:
    target = serialize.mechanism_from_json(_load_json(args.target))
    source = serialize.mechanism_from_json(_load_json(args.source))
    res = check_derivable(target, source)
    _emit(serialize.dumps(serialize.derivability_to_json(res)), args.out)
    return 0


def _cmd_maximal(args) -> int:
    g = _resolve_graph(args)
    alpha = parse_alpha(args.alpha)
    mech = serialize.mechanism_from_json(_load_json(args.mechanism))
    graphs = column_graphs(mech, g, alpha)
    out = {
        "maximally_general": all(cg.is_connected(g) for cg in graphs),
        "column_graphs": [
            {"column": cg.column, "tight_edges": sorted(map(list, cg.tight_edges))}
            for cg in graphs
        ],
    }
    _emit(serialize.dumps(out), args.out)
    return 0


def _cmd_universal(args) -> int:
    g = _resolve_graph(args)
    alpha = parse_alpha(args.alpha)
    consumers = _resolve_consumers(args.consumers, g)
    candidate = (
        serialize.mechanism_from_json(_load_json(args.candidate))
        if args.candidate
        else None
    )
    report = universality_check(g, alpha, consumers, candidate)
    _emit(serialize.dumps(serialize.universality_to_json(report)), args.out)
    return 0


def _cmd_extend(args) -> int:
    g = _resolve_graph(args)
    base = serialize.mechanism_from_json(_load_json(args.base))
    if args.anchors:
        anchors = args.anchors.split(",")
        labels = label_for_anchors(g, anchors)
        base_edges = [
            (i, j)
            for i in range(len(anchors))
            for j in range(i + 1, len(anchors))
            if g.has_edge(anchors[i], anchors[j])
        ]
        ext = extend_by_labels(g, labels, base, base_edges=base_edges)
    else:
        cycle = find_smallest_cycle(g)
        if cycle is None:
            raise InputError("graph has no cycle; pass --anchors for acyclic graphs")
        labels = label_for_cycle(g, cycle)
        ext = extend_by_labels(g, labels, base)
    _emit(serialize.dumps(serialize.mechanism_to_json(ext)), args.out)
    return 0


def _cmd_repro(args) -> int:
    if not args.all and not args.scenario:
        raise InputError("repro needs --scenario NAME or --all")
    params = {}
    for item in args.param or []:
        if "=" not in item:
            raise InputError(f"--param expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        try:
            params[key] = int(value)
        except ValueError as exc:
            raise InputError(f"--param {key} needs an integer value") from exc
    if args.all:
        results = run_all(alpha=args.alpha)
    else:
        alpha = args.alpha if args.alpha is not None else default_alpha(args.scenario)
        results = [repro_scenario(args.scenario, alpha, params)]
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = (
            f"{status}  {r.name:<{width}}  alpha={rat_str(r.alpha)}  "
            f"expected={r.expected}  actual={r.actual}"
        )
        print(line)
        if not r.passed:
            for c in r.checks:
                if not c.passed:
                    print(f"      check failed: {c.label} ({c.detail})")
    passed = sum(1 for r in results if r.passed)
    print(f"{passed}/{len(results)} scenarios passed")
    if args.out:
        payload = {"results": [r.to_json() for r in results]}
        _emit(serialize.dumps(payload), args.out)
    return 0 if passed == len(results) else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpopt",
        description="Exact analysis of utility-optimal differentially private mechanisms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph", help="emit the constraint graph (DOT and/or JSON)")
    _add_graph_args(p)
    p.add_argument("--dot", help="write DOT here (default: stdout)")
    p.add_argument("--json", help="write graph JSON here")
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("solve", help="optimal mechanism for one consumer")
    _add_graph_args(p)
    p.add_argument("--alpha", required=True, help="privacy parameter 'p/q' in (0,1)")
    p.add_argument("--consumer", required=True, help="'uniform-bin', a JSON file, or inline JSON")
    p.add_argument("--output-labels", help="comma-separated output labels (default: vertices)")
    p.add_argument("--out", help="write result JSON here (default: stdout)")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("derive", help="decide whether target = source . remapping")
    p.add_argument("--target", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_derive)

    p = sub.add_parser("maximal", help="column graphs and maximal generality")
    _add_graph_args(p)
    p.add_argument("--alpha", required=True)
    p.add_argument("--mechanism", required=True, help="mechanism JSON file")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_maximal)

    p = sub.add_parser("universal", help="certify or refute a universally optimal mechanism")
    _add_graph_args(p)
    p.add_argument("--alpha", required=True)
    p.add_argument("--consumers", required=True, help="JSON file or inline JSON (list)")
    p.add_argument("--candidate", help="candidate mechanism JSON file")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_universal)

    p = sub.add_parser("extend", help="extend a mechanism over the whole graph by labeling")
    _add_graph_args(p)
    p.add_argument("--base", required=True, help="base mechanism JSON file")
    p.add_argument("--anchors", help="comma-separated anchors (acyclic graphs)")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_extend)

    p = sub.add_parser("repro", help="run reproduction scenarios")
    p.add_argument("--scenario", choices=scenario_names(), help="scenario name")
    p.add_argument("--all", action="store_true", help="run every scenario")
    p.add_argument("--alpha", help="privacy parameter (default: per scenario)")
    p.add_argument("--param", action="append", help="scenario parameter key=value")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=_cmd_repro)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except DpoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
