"""Mechanism algebra over exact rationals.

Oblivious mechanisms are row-stochastic matrices whose rows are indexed by
query results (constraint-graph vertices) and whose columns are output
labels.  This module verifies differential privacy against a constraint
graph, composes post-processing remappings, builds the closed-form optimal
matrices for cliques, cycles, paths and stars, extends mechanisms along
vertex labelings, and classifies maximal generality through column graphs.

All values are immutable after construction; every operation is pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import ConstructionError, InputError, PreconditionError
from .exactlp import solve_linear_system
from .querydomain import ConstraintGraph, find_smallest_cycle, graph_distance
from .rationals import ONE, ZERO, parse_alpha, rat


def _validate_stochastic(kind, row_labels, col_labels, entries):
    if len(set(row_labels)) != len(row_labels):
        raise InputError(f"{kind} has duplicate row labels")
    if len(set(col_labels)) != len(col_labels):
        raise InputError(f"{kind} has duplicate column labels")
    if len(entries) != len(row_labels):
        raise InputError(f"{kind} has {len(entries)} rows, expected {len(row_labels)}")
    for label, row in zip(row_labels, entries):
        if len(row) != len(col_labels):
            raise InputError(f"{kind} row {label!r} has the wrong width")
        total = ZERO
        for v in row:
            if v < 0 or v > 1:
                raise InputError(f"{kind} row {label!r} has an entry outside [0,1]")
            total += v
        if total != 1:
            raise InputError(f"{kind} row {label!r} sums to {total}, not 1")


@dataclass(eq=False)
class Mechanism:
    """Row-stochastic rational matrix; rows = query results, columns = outputs."""

    row_labels: tuple
    col_labels: tuple
    entries: tuple

    def __post_init__(self):
        self.row_labels = tuple(str(v) for v in self.row_labels)
        self.col_labels = tuple(str(v) for v in self.col_labels)
        self.entries = tuple(tuple(rat(v) for v in row) for row in self.entries)
        _validate_stochastic("mechanism", self.row_labels, self.col_labels, self.entries)
        self._rows = {v: i for i, v in enumerate(self.row_labels)}
        self._cols = {v: i for i, v in enumerate(self.col_labels)}

    def entry(self, row: str, col: str) -> Fraction:
        try:
            return self.entries[self._rows[row]][self._cols[col]]
        except KeyError as exc:
            raise InputError(f"unknown label {exc.args[0]!r}") from None

    def row(self, label: str) -> tuple:
        try:
            return self.entries[self._rows[label]]
        except KeyError:
            raise InputError(f"unknown row label {label!r}") from None

    def column(self, label: str) -> tuple:
        try:
            j = self._cols[label]
        except KeyError:
            raise InputError(f"unknown column label {label!r}") from None
        return tuple(row[j] for row in self.entries)

    def __eq__(self, other):
        return (
            isinstance(other, Mechanism)
            and self.row_labels == other.row_labels
            and self.col_labels == other.col_labels
            and self.entries == other.entries
        )

    def __repr__(self):
        return f"Mechanism(rows={self.row_labels}, cols={self.col_labels})"


@dataclass(eq=False)
class Remapping:
    """Row-stochastic post-processing matrix applied on mechanism outputs."""

    row_labels: tuple
    col_labels: tuple
    entries: tuple

    def __post_init__(self):
        self.row_labels = tuple(str(v) for v in self.row_labels)
        self.col_labels = tuple(str(v) for v in self.col_labels)
        self.entries = tuple(tuple(rat(v) for v in row) for row in self.entries)
        _validate_stochastic("remapping", self.row_labels, self.col_labels, self.entries)

    def __eq__(self, other):
        return (
            isinstance(other, Remapping)
            and self.row_labels == other.row_labels
            and self.col_labels == other.col_labels
            and self.entries == other.entries
        )

    def __repr__(self):
        return f"Remapping(rows={self.row_labels}, cols={self.col_labels})"


def identity_remapping(labels) -> Remapping:
    labels = tuple(labels)
    entries = tuple(
        tuple(ONE if i == j else ZERO for j in range(len(labels)))
        for i in range(len(labels))
    )
    return Remapping(labels, labels, entries)


@dataclass(frozen=True)
class DpViolation:
    """x[row_low, column] < alpha * x[row_high, column] across a graph edge."""

    row_low: str
    row_high: str
    column: str
    value_low: Fraction
    value_high: Fraction


@dataclass(frozen=True)
class ColumnGraph:
    """Directed tight privacy constraints within one output column.

    An edge (i1, i2) means entry(i1) == alpha * entry(i2) across a
    constraint-graph edge.  Direction is retained in the data; connectivity
    questions treat the edges as undirected.
    """

    column: str
    tight_edges: frozenset

    def is_connected(self, g: ConstraintGraph) -> bool:
        if len(g.vertices) <= 1:
            return True
        adj = {v: set() for v in g.vertices}
        for a, b in self.tight_edges:
            adj[a].add(b)
            adj[b].add(a)
        seen = {g.vertices[0]}
        frontier = [g.vertices[0]]
        while frontier:
            nxt = []
            for u in frontier:
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            frontier = nxt
        return len(seen) == len(g.vertices)


# -- verification and composition --------------------------------------------

def verify_dp(mech: Mechanism, g: ConstraintGraph, alpha) -> list:
    """All violated privacy constraints; empty iff the mechanism is DP.

    Checks, for every graph edge {u, v} and every column, both
    x[u] >= alpha*x[v] and x[v] >= alpha*x[u].
    """
    alpha = parse_alpha(alpha)
    if set(mech.row_labels) != set(g.vertices):
        raise InputError("mechanism rows must match the graph vertices")
    violations = []
    for u, v in g.edge_list():
        for col in mech.col_labels:
            xu = mech.entry(u, col)
            xv = mech.entry(v, col)
            if xu < alpha * xv:
                violations.append(DpViolation(u, v, col, xu, xv))
            if xv < alpha * xu:
                violations.append(DpViolation(v, u, col, xv, xu))
    return violations


def apply_remapping(u: Mechanism, t: Remapping) -> Mechanism:
    """Exact matrix product U.T; the composition of mechanism and remapping."""
    if u.col_labels != t.row_labels:
        raise InputError("mechanism columns must equal remapping rows")
    entries = []
    for row in u.entries:
        out = [ZERO] * len(t.col_labels)
        for coeff, trow in zip(row, t.entries):
            if coeff:
                for j, tval in enumerate(trow):
                    if tval:
                        out[j] += coeff * tval
        entries.append(tuple(out))
    return Mechanism(u.row_labels, t.col_labels, tuple(entries))


# -- closed-form constructions ------------------------------------------------

def _default_labels(size: int):
    return tuple(str(i) for i in range(size))


def clique_optimal(size: int, alpha, labels=None) -> Mechanism:
    """Square matrix with diagonal 1/(1+(size-1)a) and off-diagonal a/(...).

    The unique loss-minimizing mechanism for the uniform exact-match consumer
    when every pair of results is privacy-constrained.
    """
    alpha = parse_alpha(alpha)
    if size < 2:
        raise InputError("clique mechanism needs size >= 2")
    labels = tuple(labels) if labels is not None else _default_labels(size)
    if len(labels) != size:
        raise InputError("labels length must equal size")
    denom = 1 + (size - 1) * alpha
    diag = ONE / denom
    off = alpha / denom
    entries = tuple(
        tuple(diag if i == j else off for j in range(size)) for i in range(size)
    )
    return Mechanism(labels, labels, entries)


def cycle_optimal(m: int, alpha, labels=None) -> Mechanism:
    """Every row a cyclic shift of delta*(1, a, a^2, ..., a^2, a).

    Row i gives result j probability delta*a^d where d is the cycle distance
    between positions i and j; delta normalizes each row to 1.  `labels`,
    when given, lists the vertices in cycle order.
    """
    alpha = parse_alpha(alpha)
    if m < 3:
        raise InputError("cycle mechanism needs m >= 3")
    labels = tuple(labels) if labels is not None else _default_labels(m)
    if len(labels) != m:
        raise InputError("labels length must equal m")
    powers = [alpha ** min(j, m - j) for j in range(m)]
    delta = ONE / sum(powers, ZERO)
    base = [delta * p for p in powers]
    entries = tuple(
        tuple(base[(j - i) % m] for j in range(m)) for i in range(m)
    )
    return Mechanism(labels, labels, entries)


def geometric_path(size: int, alpha, labels=None) -> Mechanism:
    """Finite-range geometric mechanism on a path of `size` results.

    Column k decays as a^|i-k|; the column coefficients are the unique exact
    solution of the row-stochasticity system, and are always positive.
    """
    alpha = parse_alpha(alpha)
    if size < 2:
        raise InputError("path mechanism needs size >= 2")
    labels = tuple(labels) if labels is not None else _default_labels(size)
    if len(labels) != size:
        raise InputError("labels length must equal size")
    system = [[alpha ** abs(i - k) for k in range(size)] for i in range(size)]
    coeffs = solve_linear_system(system, [ONE] * size)
    assert all(c > 0 for c in coeffs)
    entries = tuple(
        tuple(coeffs[k] * alpha ** abs(i - k) for k in range(size))
        for i in range(size)
    )
    return Mechanism(labels, labels, entries)


def star_candidate(k: int, alpha, labels=None) -> Optional[Mechanism]:
    """The unique candidate structure on a star with k leaves, if feasible.

    Row order is (center, leaf_1, ..., leaf_k).  The center coefficient is
    (1-(k-1)a)/(1+a); the candidate exists iff it is nonnegative, i.e.
    alpha <= 1/(k-1).
    """
    alpha = parse_alpha(alpha)
    if k < 3:
        raise InputError("star candidate needs k >= 3")
    labels = tuple(labels) if labels is not None else _default_labels(k + 1)
    if len(labels) != k + 1:
        raise InputError("labels length must equal k+1")
    c0 = (1 - (k - 1) * alpha) / (1 + alpha)
    if c0 < 0:
        return None
    ci = ONE / (1 + alpha)
    size = k + 1
    entries = []
    for i in range(size):
        row = []
        for j in range(size):
            c = c0 if j == 0 else ci
            if i == j:
                row.append(c)
            elif i == 0 or j == 0:
                row.append(c * alpha)
            else:
                row.append(c * alpha * alpha)
        entries.append(tuple(row))
    return Mechanism(labels, labels, tuple(entries))


def star_center_coefficient(k: int, alpha) -> Fraction:
    """Center coefficient of the star candidate: (1-(k-1)a)/(1+a)."""
    alpha = parse_alpha(alpha)
    return (1 - (k - 1) * alpha) / (1 + alpha)


# -- labelings and extension ---------------------------------------------------

def label_for_cycle(g: ConstraintGraph, cycle) -> dict:
    """Label every vertex with a position of a smallest cycle.

    The cycle vertices take their positions 0..m-1; then unlabeled vertices
    adjacent to label s-1 take label s, for s = 1..m-1; anything left takes
    m-1.  On graphs whose girth equals the cycle length, adjacent labels
    always differ by at most 1 modulo m.
    """
    cycle = [str(v) for v in cycle]
    m = len(cycle)
    if len(set(cycle)) != m or m < 3:
        raise PreconditionError("labeling needs a simple cycle of length >= 3")
    for idx, v in enumerate(cycle):
        if not g.has_edge(v, cycle[(idx + 1) % m]):
            raise PreconditionError(f"sequence is not a cycle of the graph at {v!r}")
    smallest = find_smallest_cycle(g)
    if smallest is None or len(smallest) != m:
        raise PreconditionError("cycle is not a smallest cycle of the graph")
    labels = {v: i for i, v in enumerate(cycle)}
    for s in range(1, m):
        frontier = [
            v
            for v in g.vertices
            if v not in labels
            and any(labels.get(w) == s - 1 for w in g.adjacency[v])
        ]
        for v in frontier:
            labels[v] = s
    for v in g.vertices:
        if v not in labels:
            labels[v] = m - 1
    return labels


def label_for_anchors(g: ConstraintGraph, anchors) -> dict:
    """Label each vertex with the index of its nearest anchor.

    Anchors label themselves; ties go to the smallest anchor index.  Only
    defined on acyclic graphs.
    """
    anchors = [str(a) for a in anchors]
    if len(set(anchors)) != len(anchors):
        raise InputError("anchors must be distinct")
    for a in anchors:
        if a not in g.adjacency:
            raise InputError(f"anchor {a!r} is not a graph vertex")
    if find_smallest_cycle(g) is not None:
        raise PreconditionError("anchor labeling is only defined on acyclic graphs")
    labels = {}
    for v in g.vertices:
        best = None
        for idx, a in enumerate(anchors):
            d = g.distances[a].get(v)
            if d is None:
                continue
            if best is None or d < best[0]:
                best = (d, idx)
        if best is None:
            raise InputError(f"vertex {v!r} is unreachable from every anchor")
        labels[v] = best[1]
    return labels


def extend_by_labels(
    g: ConstraintGraph, labels: dict, base: Mechanism, base_edges=None
) -> Mechanism:
    """Extend a mechanism on a subset of results to the whole graph.

    `labels` maps every vertex to a base row position; each vertex's row is
    a copy of that base row, base columns keep their values, and columns of
    unlabeled results are zero.  Adjacent vertices must carry equal labels
    or labels adjacent in the base structure (`base_edges` as index pairs;
    defaults to cyclic adjacency modulo the base row count), otherwise a
    ConstructionError with the offending edge is raised.  Whenever the base
    satisfies the privacy constraints, so does the extension.
    """
    m = len(base.row_labels)
    label_of = {}
    for v in g.vertices:
        if v not in labels:
            raise InputError(f"vertex {v!r} is unlabeled")
        lab = labels[v]
        if not isinstance(lab, int) or not 0 <= lab < m:
            raise InputError(f"label of {v!r} must index a base row, got {lab!r}")
        label_of[v] = lab
    if base_edges is None:
        allowed = {frozenset((i, (i + 1) % m)) for i in range(m)}
    else:
        allowed = {frozenset((int(a), int(b))) for a, b in base_edges}
    for u, v in g.edge_list():
        lu, lv = label_of[u], label_of[v]
        if lu != lv and frozenset((lu, lv)) not in allowed:
            raise ConstructionError(
                f"labels {lu} and {lv} of adjacent results {u!r},{v!r} "
                "are not adjacent in the base structure",
                edge=(u, v),
            )
    base_col = {c: j for j, c in enumerate(base.col_labels)}
    missing = set(base.col_labels) - set(g.vertices)
    if missing:
        raise InputError(f"base columns {sorted(missing)} are not graph vertices")
    entries = []
    for v in g.vertices:
        brow = base.entries[label_of[v]]
        entries.append(
            tuple(
                brow[base_col[c]] if c in base_col else ZERO for c in g.vertices
            )
        )
    return Mechanism(g.vertices, g.vertices, tuple(entries))


# -- column graphs and maximal generality --------------------------------------

def column_graphs(mech: Mechanism, g: ConstraintGraph, alpha) -> list:
    """One tight-constraint graph per output column.

    A directed edge (i1, i2) records entry(i1) == alpha*entry(i2) across a
    constraint-graph edge; an all-zero column is tight in both directions on
    every edge (0 == alpha*0).
    """
    alpha = parse_alpha(alpha)
    if verify_dp(mech, g, alpha):
        raise PreconditionError("mechanism violates the privacy constraints")
    graphs = []
    for col in mech.col_labels:
        tight = set()
        for u, v in g.edge_list():
            xu = mech.entry(u, col)
            xv = mech.entry(v, col)
            if xu == alpha * xv:
                tight.add((u, v))
            if xv == alpha * xu:
                tight.add((v, u))
        graphs.append(ColumnGraph(column=col, tight_edges=frozenset(tight)))
    return graphs


def is_maximally_general(mech: Mechanism, g: ConstraintGraph, alpha) -> bool:
    """True iff every column graph is connected (as an undirected graph)."""
    return all(cg.is_connected(g) for cg in column_graphs(mech, g, alpha))
