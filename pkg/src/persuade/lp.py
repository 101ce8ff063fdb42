"""Exact rational linear programming with dual certificates.

Problems are stated over variables with optional rational bounds, sparse
constraint rows (<=, >=, ==), and a linear objective in either sense.
solve() runs a dense two-phase tableau simplex under Bland's rule on
exact Fractions, so results are deterministic and free of rounding.

Dual values are extracted from the final tableau and reported per
constraint, in the stated sense's convention: for a maximization,
<=-rows carry duals >= 0 and >=-rows carry duals <= 0; for a
minimization the signs flip; equality rows are free.  certify()
re-checks a claimed optimal pair from scratch (primal feasibility, dual
sign and finiteness conditions, and a zero duality gap), so it does not
trust anything the solver did internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import _kernel
from .errors import IterationLimit

ZERO = Fraction(0)
ONE = Fraction(1)

LE = "<="
GE = ">="
EQ = "=="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearConstraint:
    """A sparse constraint row: sum of coeff * var  rel  rhs.

    coeffs holds (variable index, coefficient) pairs; duplicate indices
    are summed.  rel is one of "<=", ">=", "==".
    """

    coeffs: tuple
    rel: str
    rhs: Fraction
    name: str = ""


@dataclass(frozen=True)
class LpProblem:
    """A linear program over len(bounds) variables.

    Attributes:
        sense: "max" or "min".
        objective: dense coefficient tuple, one Fraction per variable.
        bounds: per-variable (lower, upper) with None for unbounded sides.
        constraints: tuple of LinearConstraint.
        constant: added to the objective value after solving.
    """

    sense: str
    objective: tuple
    bounds: tuple
    constraints: tuple
    constant: Fraction = ZERO

    @property
    def num_vars(self) -> int:
        return len(self.bounds)


@dataclass(frozen=True)
class LpSolution:
    """Solver output.

    primal and dual are None unless status is "optimal".  dual has one
    entry per constraint, in the problem's stated-sense convention.
    """

    status: str
    objective: Optional[Fraction]
    primal: Optional[tuple]
    dual: Optional[tuple]
    iterations: int
    kernel: str


_audit_enabled = False
_audit_entries: list = []


def set_audit(enabled: bool) -> None:
    """Start or stop recording every (problem, solution) pair solved."""
    global _audit_enabled
    _audit_enabled = enabled
    if enabled:
        _audit_entries.clear()


def audit_entries() -> tuple:
    """Pairs recorded since audit was last enabled."""
    return tuple(_audit_entries)


def _dense_row(constraint: LinearConstraint, n: int) -> list:
    row = [ZERO] * n
    for j, coeff in constraint.coeffs:
        if not 0 <= j < n:
            raise ValueError(f"constraint references variable {j} of {n}")
        row[j] = row[j] + coeff
    return row


def solve(problem: LpProblem, max_iter: Optional[int] = None) -> LpSolution:
    """Solve to proven optimality, infeasibility, or unboundedness."""
    n = problem.num_vars
    sense_max = problem.sense == "max"
    if problem.sense not in ("max", "min"):
        raise ValueError(f"unknown sense {problem.sense!r}")
    cost = [c if sense_max else -c for c in problem.objective]
    if len(cost) != n:
        raise ValueError("objective length does not match variable count")

    for lo, up in problem.bounds:
        if lo is not None and up is not None and lo > up:
            return LpSolution(INFEASIBLE, None, None, None, 0, _kernel.KERNEL_NAME)

    # Variable transforms onto internal columns, all >= 0:
    #   ("shift", col, lo): x = lo + t
    #   ("flip", col, up):  x = up - t
    #   ("free", cp, cn):   x = tp - tn
    trans = []
    ncols_struct = 0
    extra_upper_rows = []  # (col, up - lo) rows appended after user rows
    for j, (lo, up) in enumerate(problem.bounds):
        if lo is not None:
            trans.append(("shift", ncols_struct, lo))
            if up is not None:
                extra_upper_rows.append((ncols_struct, up - lo))
            ncols_struct += 1
        elif up is not None:
            trans.append(("flip", ncols_struct, up))
            ncols_struct += 1
        else:
            trans.append(("free", ncols_struct, ncols_struct + 1))
            ncols_struct += 2

    struct_cost = [ZERO] * ncols_struct
    shift_const = ZERO
    for j in range(n):
        kind = trans[j]
        if kind[0] == "shift":
            struct_cost[kind[1]] = struct_cost[kind[1]] + cost[j]
            shift_const += cost[j] * kind[2]
        elif kind[0] == "flip":
            struct_cost[kind[1]] = struct_cost[kind[1]] - cost[j]
            shift_const += cost[j] * kind[2]
        else:
            struct_cost[kind[1]] = struct_cost[kind[1]] + cost[j]
            struct_cost[kind[2]] = struct_cost[kind[2]] - cost[j]

    # Rows: user constraints in order, then internal upper-bound rows.
    rows = []  # (dense structural coeffs, rel, rhs, sign) after rhs >= 0 fix
    num_user = len(problem.constraints)
    for constraint in problem.constraints:
        if constraint.rel not in (LE, GE, EQ):
            raise ValueError(f"unknown relation {constraint.rel!r}")
        dense = _dense_row(constraint, n)
        srow = [ZERO] * ncols_struct
        rhs = constraint.rhs
        for j in range(n):
            a = dense[j]
            if not a:
                continue
            kind = trans[j]
            if kind[0] == "shift":
                srow[kind[1]] = srow[kind[1]] + a
                rhs -= a * kind[2]
            elif kind[0] == "flip":
                srow[kind[1]] = srow[kind[1]] - a
                rhs -= a * kind[2]
            else:
                srow[kind[1]] = srow[kind[1]] + a
                srow[kind[2]] = srow[kind[2]] - a
        rel = constraint.rel
        sign = 1
        if rhs < 0:
            srow = [-v for v in srow]
            rhs = -rhs
            sign = -1
            if rel == LE:
                rel = GE
            elif rel == GE:
                rel = LE
        rows.append((srow, rel, rhs, sign))
    for col, cap in extra_upper_rows:
        srow = [ZERO] * ncols_struct
        srow[col] = ONE
        rows.append((srow, LE, cap, 1))

    m = len(rows)
    surplus_of = {}
    next_col = ncols_struct
    for i in range(m):
        if rows[i][1] == GE:
            surplus_of[i] = next_col
            next_col += 1
    id_base = next_col
    ncols = id_base + m  # identity block, one column per row
    rhs_col = ncols

    tab = []
    artificial_rows = []
    enterable = [True] * ncols
    for i, (srow, rel, rhs, _sign) in enumerate(rows):
        row = list(srow) + [ZERO] * (ncols - ncols_struct) + [rhs]
        if rel == GE:
            row[surplus_of[i]] = -ONE
        row[id_base + i] = ONE
        if rel != LE:
            artificial_rows.append(i)
            enterable[id_base + i] = False
        tab.append(row)
    basis = [id_base + i for i in range(m)]

    budget = max_iter if max_iter is not None else 20000 + 200 * (m + ncols)
    total_iters = 0

    def rebuild_objective(costs):
        # Reduced-cost row z - c for the current basis, appended to tab.
        obj = [-c for c in costs] + [ZERO]
        for i in range(len(basis)):
            cb = costs[basis[i]]
            if cb:
                row = tab[i]
                for j in range(ncols + 1):
                    if row[j]:
                        obj[j] = obj[j] + cb * row[j]
        tab.append(obj)

    if artificial_rows:
        phase1_cost = [ZERO] * ncols
        for i in artificial_rows:
            phase1_cost[id_base + i] = -ONE
        rebuild_objective(phase1_cost)
        status, iters = _kernel.run_simplex(tab, basis, enterable, budget)
        total_iters += iters
        if status == _kernel.ITERATION_LIMIT:
            raise IterationLimit(f"simplex exceeded {budget} pivots in phase 1")
        if status != _kernel.OPTIMAL or tab[-1][-1] < 0:
            return LpSolution(
                INFEASIBLE, None, None, None, total_iters, _kernel.KERNEL_NAME
            )
        tab.pop()  # phase-1 objective row

        # Drive surviving artificials out of the basis, or drop rows that
        # reduced to 0 == 0 (dependent equality rows).
        artificial_cols = {id_base + i for i in artificial_rows}
        pos = 0
        while pos < len(basis):
            if basis[pos] not in artificial_cols:
                pos += 1
                continue
            prow = tab[pos]
            enter = -1
            for j in range(ncols):
                if j not in artificial_cols and prow[j]:
                    enter = j
                    break
            if enter < 0:
                # Row reduced to 0 == 0: a dependent equality row.  Its
                # identity column stays, so its dual is still read out of
                # the final objective row like every other row's.
                del tab[pos]
                del basis[pos]
                continue
            pivot = prow[enter]
            if pivot != 1:
                inv = ONE / pivot
                for j in range(len(prow)):
                    if prow[j]:
                        prow[j] = prow[j] * inv
            nonzero = [j for j in range(len(prow)) if prow[j]]
            for k in range(len(tab)):
                if k == pos:
                    continue
                row = tab[k]
                factor = row[enter]
                if factor:
                    for j in nonzero:
                        row[j] = row[j] - factor * prow[j]
            basis[pos] = enter
            pos += 1

    phase2_cost = struct_cost + [ZERO] * (ncols - ncols_struct)
    rebuild_objective(phase2_cost)
    status, iters = _kernel.run_simplex(tab, basis, enterable, budget)
    total_iters += iters
    if status == _kernel.ITERATION_LIMIT:
        raise IterationLimit(f"simplex exceeded {budget} pivots in phase 2")
    if status == _kernel.UNBOUNDED:
        return LpSolution(
            UNBOUNDED, None, None, None, total_iters, _kernel.KERNEL_NAME
        )

    obj = tab[-1]
    internal_x = [ZERO] * ncols
    for i, b in enumerate(basis):
        internal_x[b] = tab[i][-1]

    primal = []
    for j in range(n):
        kind = trans[j]
        if kind[0] == "shift":
            primal.append(kind[2] + internal_x[kind[1]])
        elif kind[0] == "flip":
            primal.append(kind[2] - internal_x[kind[1]])
        else:
            primal.append(internal_x[kind[1]] - internal_x[kind[2]])

    dual = []
    for i in range(num_user):
        y = obj[id_base + i] * rows[i][3]
        dual.append(y if sense_max else -y)

    value_max = obj[-1] + shift_const
    value = value_max if sense_max else -value_max
    solution = LpSolution(
        OPTIMAL,
        value + problem.constant,
        tuple(primal),
        tuple(dual),
        total_iters,
        _kernel.KERNEL_NAME,
    )
    if _audit_enabled:
        _audit_entries.append((problem, solution))
    return solution


def certify_report(problem: LpProblem, solution: LpSolution) -> list:
    """All reasons the claimed optimal pair fails to certify (empty = valid).

    Checks, independently of solver internals: primal feasibility against
    every constraint and bound, dual sign conventions, finiteness side
    conditions on reduced costs, complementary slackness, and an exactly
    zero duality gap.
    """
    failures = []
    if solution.status != OPTIMAL:
        return [f"status is {solution.status}, nothing to certify"]
    if solution.primal is None or solution.dual is None:
        return ["optimal solution is missing primal or dual values"]
    n = problem.num_vars
    x = solution.primal
    if len(x) != n or len(solution.dual) != len(problem.constraints):
        return ["primal or dual vector has the wrong length"]

    for j, (lo, up) in enumerate(problem.bounds):
        if lo is not None and x[j] < lo:
            failures.append(f"x[{j}]={x[j]} below lower bound {lo}")
        if up is not None and x[j] > up:
            failures.append(f"x[{j}]={x[j]} above upper bound {up}")

    sense_max = problem.sense == "max"
    cmax = [c if sense_max else -c for c in problem.objective]
    ymax = [y if sense_max else -y for y in solution.dual]

    rc = list(cmax)
    dual_b = ZERO
    for k, constraint in enumerate(problem.constraints):
        value = ZERO
        for j, coeff in constraint.coeffs:
            value += coeff * x[j]
        ok = (
            value <= constraint.rhs
            if constraint.rel == LE
            else value >= constraint.rhs
            if constraint.rel == GE
            else value == constraint.rhs
        )
        if not ok:
            failures.append(
                f"constraint {k} {constraint.name!r} violated: "
                f"{value} {constraint.rel} {constraint.rhs} fails"
            )
        y = ymax[k]
        if constraint.rel == LE and y < 0:
            failures.append(f"dual {k} should be >= 0 in max convention, got {y}")
        if constraint.rel == GE and y > 0:
            failures.append(f"dual {k} should be <= 0 in max convention, got {y}")
        if y and value != constraint.rhs:
            failures.append(
                f"complementary slackness: dual {k} is {y} but row is slack"
            )
        dual_b += y * constraint.rhs
        if y:
            for j, coeff in constraint.coeffs:
                rc[j] = rc[j] - y * coeff

    gap_terms = ZERO
    for j, (lo, up) in enumerate(problem.bounds):
        r = rc[j]
        if r > 0:
            if up is None:
                failures.append(
                    f"reduced cost {j} is {r} > 0 with no upper bound"
                )
            else:
                gap_terms += r * up
                if x[j] != up:
                    failures.append(
                        f"complementary slackness: rc[{j}]={r} > 0 but "
                        f"x[{j}]={x[j]} != upper bound {up}"
                    )
        elif r < 0:
            if lo is None:
                failures.append(
                    f"reduced cost {j} is {r} < 0 with no lower bound"
                )
            else:
                gap_terms += r * lo
                if x[j] != lo:
                    failures.append(
                        f"complementary slackness: rc[{j}]={r} < 0 but "
                        f"x[{j}]={x[j]} != lower bound {lo}"
                    )

    primal_value = sum((cmax[j] * x[j] for j in range(n)), ZERO)
    dual_value = dual_b + gap_terms
    if primal_value != dual_value:
        failures.append(
            f"duality gap: primal {primal_value} != dual bound {dual_value}"
        )

    stated = primal_value if sense_max else -primal_value
    if solution.objective != stated + problem.constant:
        failures.append(
            f"objective field {solution.objective} != recomputed "
            f"{stated + problem.constant}"
        )
    return failures


def certify(problem: LpProblem, solution: LpSolution) -> bool:
    """True iff the claimed optimal (primal, dual) pair proves optimality."""
    return not certify_report(problem, solution)
