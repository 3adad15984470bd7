"""Finite queries and their privacy constraint graphs.

A query maps databases (tuples of n records) to result labels.  Two
databases are neighboring when they differ in exactly one record; the
constraint graph puts an edge between the results of every neighboring
pair.  Graphs are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import InputError, PreconditionError, SizeError

DEFAULT_ENUM_CAP = 10**6
ENUM_CAP_ENV = "DPOPT_ENUM_CAP"


# -- query specifications ---------------------------------------------------

@dataclass(frozen=True)
class Count:
    """Number of one-entries among n binary records."""

    n: int


@dataclass(frozen=True)
class Sum:
    """Sum of n records, each in {0..m}."""

    n: int
    m: int


@dataclass(frozen=True)
class Histogram:
    """Per-category counts of n records over c categories."""

    n: int
    c: int


@dataclass(frozen=True)
class ModCycle:
    """Sum of n binary records, modulo m."""

    n: int
    m: int


@dataclass(frozen=True)
class Star:
    """Returns i when all n records equal i (records in {1..k}), else 0."""

    n: int
    k: int


@dataclass(frozen=True)
class ExplicitTable:
    """A fully enumerated query: record domain, arity, and the result of
    every database tuple.  Results may be any hashable value (tuples for
    bundled queries)."""

    domain: tuple
    n: int
    table: dict = field(hash=False)


QuerySpec = Union[Count, Sum, Histogram, ModCycle, Star, ExplicitTable]


def bundle_of_counts(domain, predicates, n: int = 1) -> ExplicitTable:
    """Bundle several count queries into one query with tuple results."""
    domain = tuple(domain)
    table = {
        db: tuple(sum(1 for r in db if r in pred) for pred in predicates)
        for db in itertools.product(domain, repeat=n)
    }
    return ExplicitTable(domain=domain, n=n, table=table)


def canonical_label(result) -> str:
    """Opaque string rendering of a result: ints as digits, tuples as "(a,b)"."""
    if isinstance(result, tuple):
        return "(" + ",".join(canonical_label(r) for r in result) + ")"
    return str(result)


@dataclass(frozen=True)
class QueryTable:
    """A materialized query: every database tuple mapped to a result label."""

    domain: tuple
    n: int
    table: dict = field(hash=False)  # db tuple -> label string
    labels: tuple = ()  # image of the query, canonical order


def _enum_cap() -> int:
    raw = os.environ.get(ENUM_CAP_ENV)
    if raw is None:
        return DEFAULT_ENUM_CAP
    try:
        return int(raw)
    except ValueError as exc:
        raise InputError(f"{ENUM_CAP_ENV} must be an integer, got {raw!r}") from exc


def _sort_key(result):
    if isinstance(result, tuple):
        return (1, tuple(_sort_key(r) for r in result))
    if isinstance(result, int):
        return (0, result)
    return (2, str(result))


def enumerate_query(spec: QuerySpec) -> QueryTable:
    """Materialize a query spec into a total table over all database tuples.

    The result set is the image of the map (surjectivity by construction).
    Raises SizeError when |domain|^n exceeds the enumeration cap.
    """
    if isinstance(spec, Count):
        spec = Sum(spec.n, 1)
    if isinstance(spec, Sum):
        domain, n = tuple(range(spec.m + 1)), spec.n
        fn = lambda db: sum(db)
    elif isinstance(spec, Histogram):
        domain, n = tuple(range(spec.c)), spec.n
        fn = lambda db: tuple(db.count(cat) for cat in range(spec.c))
    elif isinstance(spec, ModCycle):
        domain, n = (0, 1), spec.n
        fn = lambda db: sum(db) % spec.m
    elif isinstance(spec, Star):
        domain, n = tuple(range(1, spec.k + 1)), spec.n
        fn = lambda db: db[0] if all(r == db[0] for r in db) else 0
    elif isinstance(spec, ExplicitTable):
        domain, n = tuple(spec.domain), spec.n
        fn = spec.table.__getitem__
    else:
        raise InputError(f"unknown query spec {spec!r}")
    if n < 1 or not domain:
        raise InputError("query needs n >= 1 records over a nonempty domain")
    size = len(domain) ** n
    cap = _enum_cap()
    if size > cap:
        raise SizeError(f"enumeration of {size} tuples exceeds cap {cap}")
    raw = {}
    for db in itertools.product(domain, repeat=n):
        if isinstance(spec, ExplicitTable) and db not in spec.table:
            raise InputError(f"explicit table is missing database {db!r}")
        raw[db] = fn(db)
    results = sorted(set(raw.values()), key=_sort_key)
    labels = tuple(canonical_label(r) for r in results)
    if len(set(labels)) != len(labels):
        raise InputError("distinct results collide after canonical labeling")
    table = {db: canonical_label(r) for db, r in raw.items()}
    return QueryTable(domain=domain, n=n, table=table, labels=labels)


# -- the constraint graph ----------------------------------------------------

@dataclass(frozen=True)
class ConstraintGraph:
    """Graph on query results; edges join results of neighboring databases.

    `witnesses` maps each edge to one neighboring database pair realizing it
    (absent for graphs built directly from vertex/edge lists).
    """

    vertices: tuple
    edges: frozenset  # of frozenset({u, v}) pairs
    adjacency: dict = field(hash=False)
    distances: dict = field(hash=False)
    witnesses: Optional[dict] = field(default=None, hash=False)

    def index(self, vertex: str) -> int:
        try:
            return self.vertices.index(vertex)
        except ValueError:
            raise InputError(f"unknown vertex {vertex!r}") from None

    def neighbors(self, vertex: str) -> tuple:
        if vertex not in self.adjacency:
            raise InputError(f"unknown vertex {vertex!r}")
        return self.adjacency[vertex]

    def has_edge(self, u: str, v: str) -> bool:
        return frozenset((u, v)) in self.edges

    def edge_list(self) -> list:
        """Edges as (u, v) pairs ordered by vertex position; deterministic."""
        order = {v: i for i, v in enumerate(self.vertices)}
        pairs = [tuple(sorted(e, key=order.__getitem__)) for e in self.edges]
        return sorted(pairs, key=lambda p: (order[p[0]], order[p[1]]))


def _bfs_distances(vertices, adjacency, source):
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for w in adjacency[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


def _finish_graph(vertices, edge_set, witnesses):
    adjacency = {v: [] for v in vertices}
    for e in edge_set:
        u, v = tuple(e)
        adjacency[u].append(v)
        adjacency[v].append(u)
    order = {v: i for i, v in enumerate(vertices)}
    adjacency = {
        v: tuple(sorted(ns, key=order.__getitem__)) for v, ns in adjacency.items()
    }
    distances = {v: _bfs_distances(vertices, adjacency, v) for v in vertices}
    return ConstraintGraph(
        vertices=tuple(vertices),
        edges=frozenset(edge_set),
        adjacency=adjacency,
        distances=distances,
        witnesses=witnesses,
    )


def build_constraint_graph(table: QueryTable) -> ConstraintGraph:
    """Build the constraint graph of a materialized query.

    Edge {f(D1), f(D2)} for every pair of databases differing in exactly one
    record with distinct results; self-loops are omitted (they impose no
    constraint).  One witness pair is retained per edge.
    """
    edge_set = set()
    witnesses = {}
    domain = table.domain
    for db, label in table.table.items():
        for pos in range(table.n):
            for alt in domain:
                if alt == db[pos]:
                    continue
                other = db[:pos] + (alt,) + db[pos + 1 :]
                other_label = table.table[other]
                if other_label == label:
                    continue
                edge = frozenset((label, other_label))
                if edge not in edge_set:
                    edge_set.add(edge)
                    witnesses[edge] = (db, other)
    return _finish_graph(table.labels, edge_set, witnesses)


def graph_from_edges(vertices, edges) -> ConstraintGraph:
    """Build a constraint graph directly from vertex/edge lists (no witnesses)."""
    vertices = tuple(str(v) for v in vertices)
    if len(set(vertices)) != len(vertices):
        raise InputError("duplicate vertices")
    known = set(vertices)
    edge_set = set()
    for u, v in edges:
        u, v = str(u), str(v)
        if u not in known or v not in known:
            raise InputError(f"edge ({u},{v}) references unknown vertices")
        if u == v:
            raise InputError("self-loops are not allowed")
        edge_set.add(frozenset((u, v)))
    return _finish_graph(vertices, edge_set, None)


def graph_for(spec: QuerySpec) -> ConstraintGraph:
    """Enumerate a query spec and build its constraint graph."""
    return build_constraint_graph(enumerate_query(spec))


def induced_subgraph(g: ConstraintGraph, keep) -> ConstraintGraph:
    """Subgraph induced on a vertex subset, preserving vertex order."""
    keep = set(keep)
    missing = keep - set(g.vertices)
    if missing:
        raise InputError(f"unknown vertices {sorted(missing)}")
    vertices = tuple(v for v in g.vertices if v in keep)
    edge_set = {e for e in g.edges if e <= keep}
    witnesses = (
        {e: g.witnesses[e] for e in edge_set} if g.witnesses is not None else None
    )
    return _finish_graph(vertices, edge_set, witnesses)


def is_connected(g: ConstraintGraph) -> bool:
    if not g.vertices:
        return True
    return len(g.distances[g.vertices[0]]) == len(g.vertices)


def graph_distance(g: ConstraintGraph, u: str, v: str) -> int:
    """Shortest-path edge count between two results."""
    if u not in g.adjacency or v not in g.adjacency:
        raise InputError(f"unknown vertex in pair ({u!r}, {v!r})")
    try:
        return g.distances[u][v]
    except KeyError:
        raise InputError(f"no path between {u!r} and {v!r}") from None


def max_degree(g: ConstraintGraph) -> int:
    """Maximum vertex degree."""
    return max((len(ns) for ns in g.adjacency.values()), default=0)


def _canonical_cycle(cycle, order):
    """Rotate/reflect a cycle to start at its smallest vertex, smaller
    neighbor second; enables lexicographic comparison."""
    idx = min(range(len(cycle)), key=lambda i: order[cycle[i]])
    rotated = cycle[idx:] + cycle[:idx]
    forward = rotated
    backward = [rotated[0]] + rotated[1:][::-1]
    key_f = [order[v] for v in forward]
    key_b = [order[v] for v in backward]
    return forward if key_f <= key_b else backward


def find_smallest_cycle(g: ConstraintGraph) -> Optional[list]:
    """A minimum-length cycle, or None for forests.

    Girth is found by per-edge BFS (delete the edge, measure the shortest
    remaining path between its endpoints).  Among all minimum cycles the
    lexicographically smallest sequence starting at the smallest contained
    vertex is returned, so the output is deterministic.
    """
    order = {v: i for i, v in enumerate(g.vertices)}
    girth = None
    for e in g.edges:
        u, v = tuple(e)
        # BFS from u to v avoiding the edge {u, v} itself.
        dist = {u: 0}
        frontier = [u]
        while frontier and v not in dist:
            nxt = []
            for a in frontier:
                for b in g.adjacency[a]:
                    if {a, b} == {u, v}:
                        continue
                    if b not in dist:
                        dist[b] = dist[a] + 1
                        nxt.append(b)
            frontier = nxt
        if v in dist:
            length = dist[v] + 1
            if girth is None or length < girth:
                girth = length
    if girth is None:
        return None

    best = None
    # Enumerate simple cycles of exactly girth length whose smallest vertex is
    # the start; girth-minimality keeps this cheap at desk scale.
    def extend(path, seen):
        nonlocal best
        last = path[-1]
        if len(path) == girth:
            if g.has_edge(last, path[0]):
                cand = _canonical_cycle(path, order)
                key = [order[v] for v in cand]
                if best is None or key < [order[v] for v in best]:
                    best = cand
            return
        for w in g.adjacency[last]:
            if w not in seen and order[w] > order[path[0]]:
                extend(path + [w], seen | {w})

    for start in g.vertices:
        extend([start], {start})
    assert best is not None
    return best


def check_metric(g: ConstraintGraph) -> None:
    """Assert the metric axioms for the graph distance; connected graphs only."""
    if not is_connected(g):
        raise PreconditionError("distance metric requires a connected graph")
    for u in g.vertices:
        for v in g.vertices:
            duv = g.distances[u][v]
            if (duv == 0) != (u == v):
                raise AssertionError("identity axiom fails")
            if duv != g.distances[v][u]:
                raise AssertionError("symmetry axiom fails")
            for w in g.vertices:
                if duv > g.distances[u][w] + g.distances[w][v]:
                    raise AssertionError("triangle inequality fails")


def to_dot(g: ConstraintGraph) -> str:
    """Deterministic, unstyled DOT rendering (undirected)."""
    lines = ["graph G {"]
    for v in g.vertices:
        lines.append(f'  "{v}";')
    for u, v in g.edge_list():
        lines.append(f'  "{u}" -- "{v}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
