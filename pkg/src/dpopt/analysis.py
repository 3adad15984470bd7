"""Decision procedures: per-consumer optima, derivability, best remapping,
and certification or refutation of universally optimal mechanisms.

Everything reduces to exact linear programs.  A consumer's optimal
mechanism is the LP over matrix entries with row-stochasticity and the
privacy constraints of the graph; derivability and best post-processing
are LPs over remapping entries; the universality refuter routes every
impossibility through either a uniquely-optimal maximally general anchor
mechanism or, on trees, the forced column structure around a high-degree
vertex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .consumer import (
    Bayesian,
    BinLoss,
    Consumer,
    RiskAverse,
    consumer_loss,
    loss_value,
    support_of,
    uniform_bayesian,
)
from .errors import InputError
from .exactlp import (
    Constraint,
    LinearProgram,
    LpStatus,
    Relation,
    Sense,
    probe_face_uniqueness,
    solve_lp,
)
from .mechanism import (
    Mechanism,
    Remapping,
    geometric_path,
    is_maximally_general,
    star_center_coefficient,
    verify_dp,
)
from .querydomain import (
    ConstraintGraph,
    find_smallest_cycle,
    induced_subgraph,
    is_connected,
    max_degree,
)
from .rationals import ONE, ZERO, parse_alpha


@dataclass(eq=False)
class OptimalResult:
    mechanism: Mechanism
    value: Fraction
    unique: Optional[bool]


@dataclass(eq=False)
class DerivabilityResult:
    derivable: bool
    remapping: Optional[Remapping]


@dataclass(eq=False)
class CertifiedVerdict:
    """One candidate post-processes to an optimal mechanism for every consumer."""

    candidate: Mechanism
    remappings: list
    optimal_values: list


@dataclass(eq=False)
class RefutedByAnchor:
    """No single mechanism can serve consumers a and b.

    The anchor is the unique optimal mechanism of consumer a on the
    subgraph induced by a's support, it is maximally general there, and the
    best post-processing of it still loses strictly more than consumer b's
    optimum.
    """

    anchor_index: int
    anchor: Mechanism
    anchor_rows: tuple
    other_index: int
    other_optimum: Fraction
    best_from_anchor: Fraction
    gap: Fraction
    witness_remapping: Remapping


@dataclass(eq=False)
class RefutedByForcedStructure:
    """On an acyclic graph, the consumers around a degree-k vertex force any
    universal mechanism into the star candidate structure, whose center
    coefficient is negative at this privacy level."""

    center: str
    degree: int
    threshold: Fraction
    center_coefficient: Fraction
    consumer_indices: tuple


@dataclass(eq=False)
class UnknownVerdict:
    reason: str


@dataclass(eq=False)
class UniversalityReport:
    verdict: str  # "certified" | "refuted" | "unknown"
    detail: object


# -- LP construction -----------------------------------------------------------

def _build_mechanism_lp(g, alpha, c, output_labels, loss_graph=None):
    """LP over mechanism entries x[i,r] (plus an epigraph variable for
    risk-averse consumers).  Returns (lp, rows, cols, epigraph?)."""
    loss_graph = loss_graph if loss_graph is not None else g
    rows = g.vertices
    cols = tuple(str(r) for r in output_labels)
    if not cols:
        raise InputError("output labels must be nonempty")
    nr, nc = len(rows), len(cols)
    risk = isinstance(c.knowledge, RiskAverse)
    nvars = nr * nc + (1 if risk else 0)

    def var(i, r):
        return i * nc + r

    constraints = []
    for i in range(nr):
        coeffs = [ZERO] * nvars
        for r in range(nc):
            coeffs[var(i, r)] = ONE
        constraints.append(Constraint(coeffs, Relation.EQ, ONE))
    index = {v: i for i, v in enumerate(rows)}
    for u, v in g.edge_list():
        iu, iv = index[u], index[v]
        for r in range(nc):
            for hi, lo in ((iu, iv), (iv, iu)):
                coeffs = [ZERO] * nvars
                coeffs[var(hi, r)] = ONE
                coeffs[var(lo, r)] = -alpha
                constraints.append(Constraint(coeffs, Relation.GE, ZERO))

    if risk:
        t = nvars - 1
        for i_label in sorted(c.knowledge.support, key=index.__getitem__):
            i = index[i_label]
            coeffs = [ZERO] * nvars
            for r, r_label in enumerate(cols):
                coeffs[var(i, r)] = loss_value(c.loss, loss_graph, i_label, r_label)
            coeffs[t] = -ONE
            constraints.append(Constraint(coeffs, Relation.LE, ZERO))
        objective = [ZERO] * nvars
        objective[t] = ONE
    else:
        prior = c.knowledge.prior
        covered = sum((p for k, p in prior.items() if k in index), ZERO)
        if covered != 1:
            raise InputError("prior support must lie within the graph vertices")
        objective = [ZERO] * nvars
        for i, i_label in enumerate(rows):
            p = prior.get(i_label, ZERO)
            if p:
                for r, r_label in enumerate(cols):
                    objective[var(i, r)] = p * loss_value(
                        c.loss, loss_graph, i_label, r_label
                    )
    lp = LinearProgram(nvars, constraints, tuple(objective), Sense.MIN)
    return lp, rows, cols, risk


def _mechanism_from_point(point, rows, cols) -> Mechanism:
    nc = len(cols)
    entries = tuple(
        tuple(point[i * nc + r] for r in range(nc)) for i in range(len(rows))
    )
    return Mechanism(rows, cols, entries)


def optimal_mechanism(
    g: ConstraintGraph,
    alpha,
    c: Consumer,
    output_labels=None,
    probe: bool = True,
    loss_graph=None,
) -> OptimalResult:
    """Solve the consumer's mechanism LP exactly.

    `unique` reports whether the optimal face is a single point (the
    epigraph variable, when present, is excluded from the probe); pass
    probe=False to skip that and leave it None.
    """
    alpha = parse_alpha(alpha)
    cols = tuple(output_labels) if output_labels is not None else g.vertices
    lp, rows, cols, risk = _build_mechanism_lp(g, alpha, c, cols, loss_graph)
    outcome = solve_lp(lp)
    # The uniform mechanism is always feasible, so the LP cannot be infeasible.
    assert outcome.status is LpStatus.OPTIMAL
    mech = _mechanism_from_point(outcome.point, rows, cols)
    assert not verify_dp(mech, g, alpha)
    unique = None
    if probe:
        n_mech = len(rows) * len(cols)
        unique = probe_face_uniqueness(lp, outcome.value, variables=range(n_mech))
    return OptimalResult(mechanism=mech, value=outcome.value, unique=unique)


def check_derivable(target: Mechanism, source: Mechanism) -> DerivabilityResult:
    """Is target == source composed with some remapping?  Feasibility LP over
    the remapping entries; returns a witness when one exists."""
    if target.row_labels != source.row_labels:
        raise InputError("target and source must share the same row labels")
    src_cols, tgt_cols = source.col_labels, target.col_labels
    nk, nj = len(src_cols), len(tgt_cols)
    nvars = nk * nj

    def var(k, j):
        return k * nj + j

    constraints = []
    for i in range(len(source.row_labels)):
        srow = source.entries[i]
        trow = target.entries[i]
        for j in range(nj):
            coeffs = [ZERO] * nvars
            for k in range(nk):
                if srow[k]:
                    coeffs[var(k, j)] = srow[k]
            constraints.append(Constraint(coeffs, Relation.EQ, trow[j]))
    for k in range(nk):
        coeffs = [ZERO] * nvars
        for j in range(nj):
            coeffs[var(k, j)] = ONE
        constraints.append(Constraint(coeffs, Relation.EQ, ONE))
    lp = LinearProgram(nvars, constraints, (ZERO,) * nvars, Sense.MIN)
    outcome = solve_lp(lp)
    if outcome.status is not LpStatus.OPTIMAL:
        return DerivabilityResult(False, None)
    entries = tuple(
        tuple(outcome.point[var(k, j)] for j in range(nj)) for k in range(nk)
    )
    return DerivabilityResult(True, Remapping(src_cols, tgt_cols, entries))


def best_remapping(
    u: Mechanism, c: Consumer, g: ConstraintGraph, output_labels=None
):
    """The remapping minimizing the consumer's loss of u composed with it.

    Bayesian consumers minimize a linear functional of the remapping;
    risk-averse consumers add an epigraph variable bounding every
    support row's expected loss.  Returns (remapping, exact value).
    """
    cols = tuple(str(r) for r in (output_labels if output_labels is not None else g.vertices))
    if not cols:
        raise InputError("output labels must be nonempty")
    src = u.col_labels
    nk, nr = len(src), len(cols)
    risk = isinstance(c.knowledge, RiskAverse)
    nvars = nk * nr + (1 if risk else 0)

    def var(k, r):
        return k * nr + r

    constraints = []
    for k in range(nk):
        coeffs = [ZERO] * nvars
        for r in range(nr):
            coeffs[var(k, r)] = ONE
        constraints.append(Constraint(coeffs, Relation.EQ, ONE))

    if risk:
        support = c.knowledge.support
        missing = support - set(u.row_labels)
        if missing:
            raise InputError(f"support results {sorted(missing)} are not rows of u")
        t = nvars - 1
        for i in sorted(support, key=u.row_labels.index):
            urow = u.row(i)
            coeffs = [ZERO] * nvars
            for k in range(nk):
                if urow[k]:
                    for r, r_label in enumerate(cols):
                        coeffs[var(k, r)] += urow[k] * loss_value(
                            c.loss, g, i, r_label
                        )
            coeffs[t] = -ONE
            constraints.append(Constraint(coeffs, Relation.LE, ZERO))
        objective = [ZERO] * nvars
        objective[t] = ONE
    else:
        prior = c.knowledge.prior
        rows = set(u.row_labels)
        covered = sum((p for lab, p in prior.items() if lab in rows), ZERO)
        if covered != 1:
            raise InputError("prior support must lie within the rows of u")
        objective = [ZERO] * nvars
        for i in u.row_labels:
            p = prior.get(i, ZERO)
            if not p:
                continue
            urow = u.row(i)
            for k in range(nk):
                if urow[k]:
                    for r, r_label in enumerate(cols):
                        objective[var(k, r)] += p * urow[k] * loss_value(
                            c.loss, g, i, r_label
                        )
    lp = LinearProgram(nvars, constraints, tuple(objective), Sense.MIN)
    outcome = solve_lp(lp)
    assert outcome.status is LpStatus.OPTIMAL  # row-stochastic T always exists
    entries = tuple(
        tuple(outcome.point[var(k, r)] for r in range(nr)) for k in range(nk)
    )
    return Remapping(src, cols, entries), outcome.value


# -- universality ---------------------------------------------------------------

def _is_path(g: ConstraintGraph) -> bool:
    return (
        len(g.vertices) >= 2
        and is_connected(g)
        and find_smallest_cycle(g) is None
        and max_degree(g) <= 2
    )


def _path_order(g: ConstraintGraph) -> tuple:
    ends = [v for v in g.vertices if len(g.adjacency[v]) == 1]
    start = min(ends, key=g.index)
    order = [start]
    seen = {start}
    while len(order) < len(g.vertices):
        nxt = [w for w in g.adjacency[order[-1]] if w not in seen]
        order.append(nxt[0])
        seen.add(nxt[0])
    return tuple(order)


def _restrict_consumer(c: Consumer, keep: set) -> Consumer:
    if isinstance(c.knowledge, Bayesian):
        prior = {k: v for k, v in c.knowledge.prior.items() if k in keep}
        return Consumer(c.loss, Bayesian(prior))
    return Consumer(c.loss, RiskAverse(c.knowledge.support))


def _certification(g, alpha, consumers, candidate) -> UniversalityReport:
    if set(candidate.row_labels) != set(g.vertices):
        raise InputError("candidate rows must match the graph vertices")
    remappings, values, failures = [], [], 0
    for c in consumers:
        opt = optimal_mechanism(g, alpha, c, probe=False).value
        remap, best = best_remapping(candidate, c, g, output_labels=g.vertices)
        if best == opt:
            remappings.append(remap)
            values.append(opt)
        else:
            failures += 1
    if failures:
        return UniversalityReport(
            "unknown",
            UnknownVerdict(f"candidate fails {failures} of {len(consumers)} consumers"),
        )
    return UniversalityReport(
        "certified", CertifiedVerdict(candidate, remappings, values)
    )


def _anchor_refutation(g, alpha, consumers, full_value) -> Optional[UniversalityReport]:
    all_vertices = set(g.vertices)
    for a_idx, a in enumerate(consumers):
        sup = support_of(a)
        sub = induced_subgraph(g, sup)
        if not is_connected(sub):
            continue
        res = optimal_mechanism(
            sub, alpha, _restrict_consumer(a, sup), output_labels=sub.vertices,
            probe=True, loss_graph=g,
        )
        if not res.unique:
            continue
        if not is_maximally_general(res.mechanism, sub, alpha):
            continue
        # The anchor argument needs the restricted optimum to be attainable
        # on the whole graph; with full support that is automatic.
        if sup != all_vertices and res.value != full_value(a_idx):
            continue
        for b_idx, b in enumerate(consumers):
            if b_idx == a_idx or not support_of(b) <= sup:
                continue
            remap, best = best_remapping(
                res.mechanism, b, g, output_labels=sub.vertices
            )
            opt_b = full_value(b_idx)
            if best > opt_b:
                return UniversalityReport(
                    "refuted",
                    RefutedByAnchor(
                        anchor_index=a_idx,
                        anchor=res.mechanism,
                        anchor_rows=sub.vertices,
                        other_index=b_idx,
                        other_optimum=opt_b,
                        best_from_anchor=best,
                        gap=best - opt_b,
                        witness_remapping=remap,
                    ),
                )
    return None


def _is_uniform_triple(c: Consumer, center: str) -> Optional[frozenset]:
    """Support pair {u, w} when c is a uniform exact-match consumer over
    {center, u, w}; None otherwise."""
    if not isinstance(c.loss, BinLoss) or not isinstance(c.knowledge, Bayesian):
        return None
    sup = support_of(c)
    if len(sup) != 3 or center not in sup:
        return None
    third = Fraction(1, 3)
    if any(c.knowledge.prior[v] != third for v in sup):
        return None
    return sup - {center}


def _forced_structure_refutation(
    g, alpha, consumers, full_value
) -> Optional[UniversalityReport]:
    if find_smallest_cycle(g) is not None:
        return None
    centers = sorted(
        (v for v in g.vertices if len(g.adjacency[v]) >= 3),
        key=lambda v: (-len(g.adjacency[v]), g.index(v)),
    )
    for center in centers:
        neighbors = set(g.adjacency[center])
        k = len(neighbors)
        if alpha * (k - 1) <= 1:
            continue  # candidate structure feasible; nothing to refute here
        pair_consumer = {}
        for idx, c in enumerate(consumers):
            pair = _is_uniform_triple(c, center)
            if pair is not None and pair <= neighbors:
                pair_consumer.setdefault(pair, idx)
        wanted = {frozenset(p) for p in itertools.combinations(sorted(neighbors), 2)}
        if wanted - set(pair_consumer):
            continue
        # Every triple consumer must have a unique, maximally general,
        # attainable optimum on its induced path; those pinned tight
        # structures jointly force the star candidate, which is infeasible.
        premises_hold = True
        for pair in sorted(wanted, key=sorted):
            idx = pair_consumer[pair]
            c = consumers[idx]
            sup = support_of(c)
            sub = induced_subgraph(g, sup)
            if not _is_path(sub):
                premises_hold = False
                break
            res = optimal_mechanism(
                sub, alpha, _restrict_consumer(c, sup), output_labels=sub.vertices,
                probe=True, loss_graph=g,
            )
            if (
                not res.unique
                or not is_maximally_general(res.mechanism, sub, alpha)
                or res.value != full_value(idx)
            ):
                premises_hold = False
                break
        if premises_hold:
            coeff = star_center_coefficient(k, alpha)
            assert coeff < 0
            return UniversalityReport(
                "refuted",
                RefutedByForcedStructure(
                    center=center,
                    degree=k,
                    threshold=Fraction(1, k - 1),
                    center_coefficient=coeff,
                    consumer_indices=tuple(
                        sorted(pair_consumer[p] for p in wanted)
                    ),
                ),
            )
    return None


def universality_check(
    g: ConstraintGraph, alpha, consumers, candidate: Optional[Mechanism] = None
) -> UniversalityReport:
    """Certify or refute the existence of a universally optimal mechanism.

    With a candidate (or on a path, where the geometric mechanism is the
    default candidate) every consumer's best post-processing of it is
    compared with her optimum.  Without one, refutation is attempted:
    first through a consumer whose optimum is unique and maximally general
    on her support subgraph yet cannot be post-processed into another
    consumer's optimum; then, on acyclic graphs, through the forced column
    structure around a vertex of degree >= 3.  Anything else is Unknown.
    """
    alpha = parse_alpha(alpha)
    if not consumers:
        raise InputError("universality needs at least one consumer")
    if candidate is None and _is_path(g):
        order = _path_order(g)
        candidate = geometric_path(len(order), alpha, labels=order)
    if candidate is not None:
        return _certification(g, alpha, consumers, candidate)

    cache = {}

    def full_value(idx):
        if idx not in cache:
            cache[idx] = optimal_mechanism(g, alpha, consumers[idx], probe=False).value
        return cache[idx]

    report = _anchor_refutation(g, alpha, consumers, full_value)
    if report is not None:
        return report
    report = _forced_structure_refutation(g, alpha, consumers, full_value)
    if report is not None:
        return report
    return UniversalityReport(
        "unknown", UnknownVerdict("no uniquely-optimal maximally general anchor found")
    )
