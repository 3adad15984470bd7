"""Exact rational linear programming.

A two-phase simplex over `fractions.Fraction`: no floating point, no
tolerances, every comparison exact.  The entering rule is Dantzig's (most
negative reduced cost) with an automatic switch to Bland's rule after a run
of degenerate pivots; Bland's rule is what guarantees termination, Dantzig
is only a speedup on the heavily degenerate mechanism LPs built elsewhere
in this package.  Identical inputs always produce identical outcomes.

Solver instances share no state; any number of solves may run concurrently.
A single solve is sequential.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

from .errors import InconsistencyError, InputError
from .rationals import ONE, ZERO, rat

# Consecutive degenerate pivots tolerated before switching to Bland's rule.
_DEGENERATE_RUN_LIMIT = 12


class Relation(Enum):
    LE = "<="
    EQ = "=="
    GE = ">="


class Sense(Enum):
    MIN = "min"
    MAX = "max"


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class Constraint:
    coeffs: tuple
    relation: Relation
    rhs: Fraction

    def __post_init__(self):
        self.coeffs = tuple(rat(c) for c in self.coeffs)
        if not isinstance(self.relation, Relation):
            self.relation = Relation(self.relation)
        self.rhs = rat(self.rhs)


@dataclass
class LinearProgram:
    """minimize/maximize objective . x subject to constraints and x >= lower_bounds."""

    variable_count: int
    constraints: list
    objective: tuple
    sense: Sense = Sense.MIN
    lower_bounds: Optional[tuple] = None

    def __post_init__(self):
        if self.variable_count < 1:
            raise InputError("a linear program needs at least one variable")
        self.constraints = [
            c if isinstance(c, Constraint) else Constraint(*c) for c in self.constraints
        ]
        for idx, con in enumerate(self.constraints):
            if len(con.coeffs) != self.variable_count:
                raise InputError(
                    f"constraint {idx} has {len(con.coeffs)} coefficients, "
                    f"expected {self.variable_count}"
                )
        self.objective = tuple(rat(c) for c in self.objective)
        if len(self.objective) != self.variable_count:
            raise InputError(
                f"objective has {len(self.objective)} coefficients, "
                f"expected {self.variable_count}"
            )
        if not isinstance(self.sense, Sense):
            self.sense = Sense(self.sense)
        if self.lower_bounds is None:
            self.lower_bounds = (ZERO,) * self.variable_count
        else:
            self.lower_bounds = tuple(rat(b) for b in self.lower_bounds)
            if len(self.lower_bounds) != self.variable_count:
                raise InputError("lower_bounds length must equal variable_count")


@dataclass
class LpOutcome:
    status: LpStatus
    point: Optional[tuple] = None
    value: Optional[Fraction] = None


def _check_point(lp: LinearProgram, point) -> None:
    # Exactness guard: an optimal point must satisfy every relation literally.
    for idx, con in enumerate(lp.constraints):
        lhs = sum((c * x for c, x in zip(con.coeffs, point)), ZERO)
        ok = (
            lhs <= con.rhs
            if con.relation is Relation.LE
            else lhs >= con.rhs
            if con.relation is Relation.GE
            else lhs == con.rhs
        )
        if not ok:
            raise AssertionError(f"solver returned a point violating constraint {idx}")
    for x, b in zip(point, lp.lower_bounds):
        if x < b:
            raise AssertionError("solver returned a point below a lower bound")


class _Tableau:
    """Dense simplex tableau in canonical form w.r.t. the current basis."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        n = lp.variable_count
        lb = lp.lower_bounds

        # Shift x = y + lb so y >= 0; normalize right-hand sides to be >= 0.
        prepared = []
        for con in lp.constraints:
            rhs = con.rhs - sum((c * b for c, b in zip(con.coeffs, lb)), ZERO)
            coeffs = list(con.coeffs)
            rel = con.relation
            if rhs < 0 or (rhs == 0 and rel is Relation.GE):
                coeffs = [-c for c in coeffs]
                rhs = -rhs
                rel = (
                    Relation.GE
                    if rel is Relation.LE
                    else Relation.LE
                    if rel is Relation.GE
                    else Relation.EQ
                )
            prepared.append((coeffs, rel, rhs))

        n_aux = sum(1 for _, rel, _ in prepared if rel is not Relation.EQ)
        n_art = sum(
            1
            for _, rel, rhs in prepared
            if rel is Relation.EQ or (rel is Relation.GE and rhs > 0)
        )
        self.n_vars = n
        self.n_cols = n + n_aux + n_art
        self.rows: list[list[Fraction]] = []
        self.rhs: list[Fraction] = []
        self.basis: list[int] = []
        self.artificial_cols: list[int] = []

        aux_at = n
        art_at = n + n_aux
        for coeffs, rel, rhs in prepared:
            row = coeffs + [ZERO] * (self.n_cols - n)
            if rel is Relation.LE:
                row[aux_at] = ONE
                self.basis.append(aux_at)
                aux_at += 1
            elif rel is Relation.GE:
                row[aux_at] = -ONE
                aux_at += 1
                row[art_at] = ONE
                self.artificial_cols.append(art_at)
                self.basis.append(art_at)
                art_at += 1
            else:
                row[art_at] = ONE
                self.artificial_cols.append(art_at)
                self.basis.append(art_at)
                art_at += 1
            self.rows.append(row)
            self.rhs.append(rhs)
        self.blocked: set[int] = set()

    # -- core simplex machinery ------------------------------------------

    def price_out(self, cost: dict[int, Fraction]) -> list[Fraction]:
        """Reduced-cost row for a (sparse) cost vector, priced w.r.t. the basis."""
        obj = [cost.get(j, ZERO) for j in range(self.n_cols)]
        for i, b in enumerate(self.basis):
            cb = cost.get(b, ZERO)
            if cb:
                row = self.rows[i]
                for j in range(self.n_cols):
                    a = row[j]
                    if a:
                        obj[j] -= cb * a
        return obj

    def _entering(self, obj, bland: bool) -> Optional[int]:
        if bland:
            for j in range(self.n_cols):
                if j not in self.blocked and obj[j] < 0:
                    return j
            return None
        best = None
        best_val = ZERO
        for j in range(self.n_cols):
            if j in self.blocked:
                continue
            v = obj[j]
            if v < best_val:
                best, best_val = j, v
        return best

    def _leaving(self, col: int) -> Optional[int]:
        best_row = None
        best_ratio = None
        for i, row in enumerate(self.rows):
            a = row[col]
            if a > 0:
                ratio = self.rhs[i] / a
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and self.basis[i] < self.basis[best_row])
                ):
                    best_row, best_ratio = i, ratio
        return best_row

    def _pivot(self, row_idx: int, col: int, obj) -> None:
        prow = self.rows[row_idx]
        pv = prow[col]
        if pv != 1:
            inv = ONE / pv
            self.rows[row_idx] = prow = [a * inv for a in prow]
            self.rhs[row_idx] *= inv
        nz = [j for j, a in enumerate(prow) if a]
        prhs = self.rhs[row_idx]
        for i, row in enumerate(self.rows):
            if i == row_idx:
                continue
            f = row[col]
            if f:
                for j in nz:
                    row[j] -= f * prow[j]
                self.rhs[i] -= f * prhs
        f = obj[col]
        if f:
            for j in nz:
                obj[j] -= f * prow[j]
        self.basis[row_idx] = col

    def run(self, obj) -> str:
        """Minimize until optimal/unbounded.  Returns 'optimal' or 'unbounded'."""
        degenerate_run = 0
        bland = False
        while True:
            col = self._entering(obj, bland)
            if col is None:
                return "optimal"
            row_idx = self._leaving(col)
            if row_idx is None:
                return "unbounded"
            improving = self.rhs[row_idx] != 0
            self._pivot(row_idx, col, obj)
            if improving:
                degenerate_run = 0
                bland = False
            else:
                degenerate_run += 1
                if degenerate_run > _DEGENERATE_RUN_LIMIT:
                    bland = True

    # -- two phases -------------------------------------------------------

    def phase1(self) -> bool:
        """Drive artificials to zero.  Returns False when infeasible."""
        if not self.artificial_cols:
            return True
        cost = {j: ONE for j in self.artificial_cols}
        obj = self.price_out(cost)
        status = self.run(obj)
        assert status == "optimal"  # phase-1 objective is bounded below by 0
        total = sum(
            (self.rhs[i] for i, b in enumerate(self.basis) if b in cost), ZERO
        )
        if total != 0:
            return False
        # Pivot remaining zero-valued artificials out of the basis; drop rows
        # that prove redundant.
        art = set(self.artificial_cols)
        drop = []
        for i in range(len(self.rows)):
            if self.basis[i] in art:
                row = self.rows[i]
                col = next(
                    (j for j in range(self.n_cols) if j not in art and row[j]), None
                )
                if col is None:
                    drop.append(i)
                else:
                    self._pivot(i, col, [ZERO] * self.n_cols)
        for i in reversed(drop):
            del self.rows[i], self.rhs[i], self.basis[i]
        self.blocked |= art
        return True

    def phase2(self, cost: dict[int, Fraction]) -> str:
        obj = self.price_out(cost)
        return self.run(obj)

    # -- solution access ---------------------------------------------------

    def raw_solution(self) -> list[Fraction]:
        y = [ZERO] * self.n_cols
        for i, b in enumerate(self.basis):
            y[b] = self.rhs[i]
        return y

    def point(self) -> tuple:
        y = self.raw_solution()
        return tuple(
            y[j] + self.lp.lower_bounds[j] for j in range(self.n_vars)
        )

    def snapshot(self):
        return (
            [row[:] for row in self.rows],
            self.rhs[:],
            self.basis[:],
        )

    def restore(self, snap) -> None:
        rows, rhs, basis = snap
        self.rows = [row[:] for row in rows]
        self.rhs = rhs[:]
        self.basis = basis[:]


def _solve_tableau(lp: LinearProgram):
    """Run both phases.  Returns (status, tableau, cost_dict, offset)."""
    tab = _Tableau(lp)
    sign = ONE if lp.sense is Sense.MIN else -ONE
    cost = {j: sign * c for j, c in enumerate(lp.objective) if c}
    offset = sum(
        (sign * c * b for c, b in zip(lp.objective, lp.lower_bounds)), ZERO
    )
    if not tab.phase1():
        return LpStatus.INFEASIBLE, tab, cost, offset
    if tab.phase2(cost) == "unbounded":
        return LpStatus.UNBOUNDED, tab, cost, offset
    return LpStatus.OPTIMAL, tab, cost, offset


def solve_lp(lp: LinearProgram) -> LpOutcome:
    """Solve exactly; deterministic for a fixed input.

    Returns an optimal vertex with its exact objective value, or the
    Infeasible/Unbounded status.
    """
    status, tab, _, _ = _solve_tableau(lp)
    if status is not LpStatus.OPTIMAL:
        return LpOutcome(status)
    point = tab.point()
    _check_point(lp, point)
    value = sum((c * x for c, x in zip(lp.objective, point)), ZERO)
    return LpOutcome(LpStatus.OPTIMAL, point, value)


def _face_extreme(tab: _Tableau, var: int, maximize: bool) -> Optional[Fraction]:
    """Optimize a single variable over the current optimal face.

    Returns None when the face is unbounded in that direction.
    """
    sign = -ONE if maximize else ONE
    obj = tab.price_out({var: sign})
    if tab.run(obj) == "unbounded":
        return None
    y = tab.raw_solution()
    return y[var]


def probe_face_uniqueness(
    lp: LinearProgram, optimum, variables: Optional[Sequence[int]] = None
) -> bool:
    """Decide whether the optimal face of the LP is a single point.

    Re-solves the program, checks that the claimed optimum is attained
    exactly, then maximizes and minimizes each variable over the optimal
    face; the face is a point iff every probed variable's range degenerates.
    `variables` restricts the probe (used to exclude epigraph variables).
    """
    optimum = rat(optimum)
    status, tab, cost, offset = _solve_tableau(lp)
    if status is not LpStatus.OPTIMAL:
        raise InconsistencyError(f"program is {status.value}, not optimal")
    sign = ONE if lp.sense is Sense.MIN else -ONE
    obj = tab.price_out(cost)
    y = tab.raw_solution()
    internal_value = sum((cost[j] * y[j] for j in cost), ZERO) + offset
    if sign * internal_value != optimum:
        raise InconsistencyError(
            "claimed optimum is not attained by the program"
        )
    # On the optimal face, every nonbasic column with a positive reduced cost
    # is pinned to zero; block those from entering and probe the rest.
    basic = set(tab.basis)
    face_tab = tab
    face_tab.blocked |= {
        j for j in range(tab.n_cols) if j not in basic and obj[j] > 0
    }
    if variables is None:
        variables = range(lp.variable_count)
    base = face_tab.snapshot()
    for var in variables:
        if var in face_tab.blocked:
            continue  # pinned at its bound on the face
        high = _face_extreme(face_tab, var, maximize=True)
        face_tab.restore(base)
        if high is None:
            return False
        low = _face_extreme(face_tab, var, maximize=False)
        face_tab.restore(base)
        if low is None or high != low:
            return False
    return True


def solve_linear_system(matrix, rhs) -> list[Fraction]:
    """Solve a square rational linear system exactly by Gaussian elimination.

    Raises InputError on a singular matrix.
    """
    n = len(matrix)
    aug = [[rat(v) for v in row] + [rat(b)] for row, b in zip(matrix, rhs)]
    if any(len(row) != n + 1 for row in aug) or len(rhs) != n:
        raise InputError("system is not square")
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col]), None)
        if pivot is None:
            raise InputError("singular linear system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = ONE / aug[col][col]
        aug[col] = [a * inv for a in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [aug[r][n] for r in range(n)]
