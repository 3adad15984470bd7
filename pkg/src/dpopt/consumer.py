"""Information consumers: loss functions plus side knowledge.

A consumer pairs a loss specification with either a Bayesian prior over
query results or a risk-averse support set.  Losses and priors are exact
rationals; evaluation of expected and worst-case loss is an exact sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .errors import InputError
from .mechanism import Mechanism
from .querydomain import ConstraintGraph, graph_distance
from .rationals import ONE, ZERO, rat


@dataclass(frozen=True)
class BinLoss:
    """0 on the exact answer, 1 otherwise."""


@dataclass(frozen=True)
class GraphMonotoneLoss:
    """Loss depending only on graph distance, nondecreasing, 0 at distance 0."""

    table: tuple

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(rat(v) for v in self.table))
        if not self.table or self.table[0] != 0:
            raise InputError("distance-loss table must start with 0 at distance 0")
        for a, b in zip(self.table, self.table[1:]):
            if b < a:
                raise InputError("distance-loss table must be nondecreasing")


@dataclass(eq=False)
class ExplicitMatrixLoss:
    """Arbitrary nonnegative loss table over (result, output) pairs.

    Admitted for LP solving, but outside the monotone class the
    universality analysis relies on.
    """

    entries: dict  # (row_label, col_label) -> Fraction

    def __post_init__(self):
        fixed = {}
        for (i, r), v in self.entries.items():
            v = rat(v)
            if v < 0:
                raise InputError("explicit losses must be nonnegative")
            fixed[(str(i), str(r))] = v
        self.entries = fixed


LossSpec = Union[BinLoss, GraphMonotoneLoss, ExplicitMatrixLoss]


@dataclass(eq=False)
class Bayesian:
    """Prior over query results; entries >= 0 and summing to exactly 1."""

    prior: dict

    def __post_init__(self):
        fixed = {str(k): rat(v) for k, v in self.prior.items()}
        if any(v < 0 for v in fixed.values()):
            raise InputError("prior entries must be nonnegative")
        if sum(fixed.values(), ZERO) != 1:
            raise InputError("prior must sum to exactly 1")
        self.prior = fixed


@dataclass(frozen=True)
class RiskAverse:
    """Set of results the consumer considers possible."""

    support: frozenset

    def __post_init__(self):
        object.__setattr__(self, "support", frozenset(str(v) for v in self.support))
        if not self.support:
            raise InputError("risk-averse support must be nonempty")


Knowledge = Union[Bayesian, RiskAverse]


@dataclass(eq=False)
class Consumer:
    loss: LossSpec
    knowledge: Knowledge


def uniform_bayesian(labels, loss: LossSpec = None) -> Consumer:
    """Uniform-prior exact-match consumer over the given results."""
    labels = [str(v) for v in labels]
    p = Fraction(1, len(labels))
    return Consumer(loss or BinLoss(), Bayesian({v: p for v in labels}))


def support_of(c: Consumer) -> frozenset:
    """Results the consumer's knowledge puts weight on."""
    if isinstance(c.knowledge, Bayesian):
        return frozenset(k for k, v in c.knowledge.prior.items() if v > 0)
    return c.knowledge.support


def loss_value(loss: LossSpec, g: ConstraintGraph, i, r) -> Fraction:
    """Disutility of using answer r when the exact result is i."""
    i, r = str(i), str(r)
    if i not in g.adjacency:
        raise InputError(f"unknown result {i!r}")
    if isinstance(loss, BinLoss):
        if r not in g.adjacency:
            raise InputError(f"unknown output {r!r}")
        return ZERO if i == r else ONE
    if isinstance(loss, GraphMonotoneLoss):
        d = graph_distance(g, i, r)
        if d >= len(loss.table):
            raise InputError(f"distance-loss table has no entry for distance {d}")
        return loss.table[d]
    if isinstance(loss, ExplicitMatrixLoss):
        try:
            return loss.entries[(i, r)]
        except KeyError:
            raise InputError(f"loss table has no entry for ({i!r}, {r!r})") from None
    raise InputError(f"unknown loss spec {loss!r}")


def _row_loss(mech: Mechanism, loss: LossSpec, g: ConstraintGraph, i: str) -> Fraction:
    return sum(
        (mech.entry(i, r) * loss_value(loss, g, i, r) for r in mech.col_labels),
        ZERO,
    )


def expected_loss(mech: Mechanism, c: Consumer, g: ConstraintGraph) -> Fraction:
    """Prior-weighted expected loss of using the mechanism directly."""
    if not isinstance(c.knowledge, Bayesian):
        raise InputError("expected_loss needs a Bayesian consumer")
    prior = c.knowledge.prior
    rows = set(mech.row_labels)
    covered = sum((v for k, v in prior.items() if k in rows), ZERO)
    if covered != 1:
        raise InputError("prior support is not covered by the mechanism rows")
    total = ZERO
    for i in mech.row_labels:
        p = prior.get(i, ZERO)
        if p:
            total += p * _row_loss(mech, c.loss, g, i)
    return total


def worst_case_loss(mech: Mechanism, c: Consumer, g: ConstraintGraph) -> Fraction:
    """Maximal expected loss over the rows the consumer considers possible."""
    if not isinstance(c.knowledge, RiskAverse):
        raise InputError("worst_case_loss needs a risk-averse consumer")
    rows = set(mech.row_labels)
    missing = c.knowledge.support - rows
    if missing:
        raise InputError(f"support results {sorted(missing)} are not mechanism rows")
    return max(_row_loss(mech, c.loss, g, i) for i in sorted(c.knowledge.support))


def consumer_loss(mech: Mechanism, c: Consumer, g: ConstraintGraph) -> Fraction:
    """Expected loss for Bayesian consumers, worst-case loss for risk-averse."""
    if isinstance(c.knowledge, Bayesian):
        return expected_loss(mech, c, g)
    return worst_case_loss(mech, c, g)
