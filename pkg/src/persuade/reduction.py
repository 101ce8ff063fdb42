"""Scaling machinery for zero-payment multi-receiver persuasion.

When receivers impose positive externalities on each other (one player
switching to action 1 never lowers another's gain from playing 1) and
the sender's payoff is monotone in the 1-set, the keep-playing-0
constraint family is redundant: any scheme optimal without it can be
repaired into one satisfying it at no cost, by pushing recommendation
mass up the subset lattice.  Dropping that family leaves a program
whose dual has one non-negative weight per receiver and one value per
state, so the whole problem reduces to repeatedly maximizing weighted
combinations of the payoff set functions.  This module provides the
validation checks, the reduced program, the constructive repair, and a
cutting-plane solver driven by a pluggable set-function argmax oracle,
with a brute-force oracle for explicitly enumerable instances.

All arithmetic is exact.  Every cutting-plane run ends with an
exhaustive feasibility check of the final dual over all subset rows;
an oracle that ever failed to report a violated row is unmasked there.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from . import lp, model, multi
from .errors import (
    IterationLimit,
    NonMonotoneSender,
    OracleUnsound,
    PositiveExternalityViolated,
    SizeLimitExceeded,
)
from .model import MultiAgentInstance, MultiAgentScheme
from .multi import _marginal

ZERO = Fraction(0)
ONE = Fraction(1)

SetFunctionOracle = Callable[[int, Sequence[Fraction]], tuple]


# ---------------------------------------------------------------------------
# Structural checks


def check_positive_externalities(instance: MultiAgentInstance) -> tuple:
    """Whether no receiver's switching gain drops as others join the 1-set.

    Exhaustively verifies g_i(S) >= g_i(S minus j) for every state, every
    set S, every member i, and every other member j, where g_i is
    receiver i's marginal utility for playing 1.  Returns (True, None)
    or (False, witness) with the first violating (state, set, i, j).
    """
    model.ensure_valid(instance)
    n = instance.receivers
    for t, state in enumerate(instance.states):
        for subset in range(1 << n):
            for i in range(n):
                if not (subset >> i) & 1:
                    continue
                here = _marginal(state, i, subset)
                for j in range(n):
                    if j == i or not (subset >> j) & 1:
                        continue
                    if here < _marginal(state, i, subset & ~(1 << j)):
                        return False, (t, subset, i, j)
    return True, None


def check_monotone_sender(instance: MultiAgentInstance) -> tuple:
    """Whether the sender payoff never drops when the 1-set grows.

    Returns (True, None) or (False, witness) with the first
    (state, set, added receiver) where adding the receiver lowers it.
    """
    model.ensure_valid(instance)
    n = instance.receivers
    for t, state in enumerate(instance.states):
        for subset in range(1 << n):
            for i in range(n):
                if (subset >> i) & 1:
                    continue
                if state.sender[subset | (1 << i)] < state.sender[subset]:
                    return False, (t, subset, i)
    return True, None


def _require_reducible(instance: MultiAgentInstance) -> None:
    ok, witness = check_positive_externalities(instance)
    if not ok:
        t, subset, i, j = witness
        raise PositiveExternalityViolated(
            f"receiver {i}'s switching gain at set {subset:#b} in state {t} "
            f"drops when receiver {j} is present"
        )
    ok, witness = check_monotone_sender(instance)
    if not ok:
        t, subset, i = witness
        raise NonMonotoneSender(
            f"sender payoff drops when receiver {i} joins set {subset:#b} "
            f"in state {t}"
        )


# ---------------------------------------------------------------------------
# The reduced program: keep-playing-0 rows removed


@dataclass(frozen=True)
class DroppedMap:
    """Column and row indexing for the reduced zero-payment LP."""

    receivers: int
    num_states: int

    @property
    def num_subsets(self) -> int:
        return 1 << self.receivers

    def phi(self, t: int, subset: int) -> int:
        return t * self.num_subsets + subset

    def follow_row(self, i: int) -> int:
        return i

    def dist_row(self, t: int) -> int:
        return self.receivers + t


@dataclass(frozen=True)
class DroppedLpResult:
    """Certified solve of the reduced program."""

    instance: MultiAgentInstance
    scheme: MultiAgentScheme
    utility: Fraction
    problem: lp.LpProblem
    solution: lp.LpSolution


def build_lp_dropped(instance: MultiAgentInstance) -> tuple:
    """Zero-payment subset LP without the keep-playing-0 rows.

    Refuses instances lacking positive externalities or a monotone
    sender, since only those guarantee the dropped rows are free.
    """
    _require_reducible(instance)
    full, _ = multi.build_lp_binary(instance, model.PaymentModel.ZERO)
    kept = tuple(
        c for c in full.constraints if not c.name.startswith("follow0")
    )
    problem = lp.LpProblem(
        sense=full.sense,
        objective=full.objective,
        bounds=full.bounds,
        constraints=kept,
    )
    dmap = DroppedMap(receivers=instance.receivers, num_states=instance.num_states)
    return problem, dmap


def solve_dropped(instance: MultiAgentInstance) -> DroppedLpResult:
    """Solve the reduced program exactly with a certified optimum."""
    problem, dmap = build_lp_dropped(instance)
    solution = lp.solve(problem)
    assert solution.status == lp.OPTIMAL, f"LP came back {solution.status}"
    report = lp.certify_report(problem, solution)
    assert not report, f"optimality certificate failed: {report}"
    nsub = instance.num_subsets
    distribution = tuple(
        tuple(solution.primal[dmap.phi(t, subset)] for subset in range(nsub))
        for t in range(instance.num_states)
    )
    zeros = (ZERO,) * instance.receivers
    scheme = MultiAgentScheme(distribution=distribution, q_one=zeros, q_zero=zeros)
    return DroppedLpResult(
        instance=instance,
        scheme=scheme,
        utility=solution.objective,
        problem=problem,
        solution=solution,
    )


# ---------------------------------------------------------------------------
# Constructive repair


def repair_scheme(
    instance: MultiAgentInstance, scheme: MultiAgentScheme
) -> MultiAgentScheme:
    """Make a reduced-program solution obey the keep-playing-0 rows.

    While some receiver told 0 would gain in expectation by switching
    to 1, move all recommendation mass from a witnessing set to the
    same set with that receiver added.  Positive externalities keep
    every keep-playing-1 row satisfied throughout, and sender
    monotonicity keeps the objective from dropping, so the output is
    feasible for the full program at no less utility.  Receivers are
    scanned in index order; mass only ever moves up the subset lattice,
    so the move count is bounded by receivers times the initial
    support size.
    """
    _require_reducible(instance)
    if any(scheme.q_one) or any(scheme.q_zero):
        raise ValueError("repair applies to zero-payment schemes only")
    n = instance.receivers
    dist = [list(row) for row in scheme.distribution]
    support = sum(1 for row in dist for p in row if p > 0)
    bound = n * support
    before = multi.sender_value(instance, scheme)

    moves = 0
    while True:
        _, switch_zero = multi.incentive_totals(instance, dist)
        target = next((i for i in range(n) if switch_zero[i] > 0), None)
        if target is None:
            break
        moved = False
        for t, state in enumerate(instance.states):
            if not state.prob:
                continue
            for subset, p in enumerate(dist[t]):
                if not p or (subset >> target) & 1:
                    continue
                grown = subset | (1 << target)
                if _marginal(state, target, grown) > 0:
                    dist[t][grown] += p
                    dist[t][subset] = ZERO
                    moved = True
                    break
            if moved:
                break
        if not moved:
            raise RuntimeError(
                "violated keep-playing-0 row without a positive-gain witness"
            )
        moves += 1
        if moves > bound:
            raise RuntimeError("repair exceeded its structural move bound")

    if not moves:
        return scheme
    repaired = MultiAgentScheme(
        distribution=tuple(tuple(row) for row in dist),
        q_one=scheme.q_one,
        q_zero=scheme.q_zero,
    )
    assert multi.is_persuasive(instance, repaired), "repair left a violated row"
    assert multi.sender_value(instance, repaired) >= before, "repair lost value"
    return repaired


# ---------------------------------------------------------------------------
# Set-function oracle


def oracle_objective(
    instance: MultiAgentInstance,
    theta: int,
    alpha: Sequence[Fraction],
    subset: int,
) -> Fraction:
    """Weighted marginal mass plus sender payoff of one set in one state."""
    state = instance.states[theta]
    total = state.sender[subset]
    for i in range(instance.receivers):
        if (subset >> i) & 1:
            total += alpha[i] * _marginal(state, i, subset)
    return total


def brute_force_oracle(instance: MultiAgentInstance) -> SetFunctionOracle:
    """Exhaustive argmax over all subsets, smallest bitmask on ties.

    Returns a callable taking a state index and non-negative receiver
    weights and producing (best set, exact objective value).  Scaling
    all weights and the sender payoff by a common positive factor
    leaves the returned set unchanged.
    """
    model.ensure_valid(instance)
    nsub = instance.num_subsets
    limit = multi.size_limit()
    if nsub > limit:
        raise SizeLimitExceeded(
            f"{nsub} subsets exceed the configured limit {limit}"
        )

    def query(theta: int, alpha: Sequence[Fraction]) -> tuple:
        if len(alpha) != instance.receivers:
            raise ValueError("one weight per receiver required")
        if any(a < 0 for a in alpha):
            raise ValueError("weights must be non-negative")
        best_subset = 0
        best = oracle_objective(instance, theta, alpha, 0)
        for subset in range(1, nsub):
            value = oracle_objective(instance, theta, alpha, subset)
            if value > best:
                best, best_subset = value, subset
        return best_subset, best

    return query


# ---------------------------------------------------------------------------
# Cutting-plane solver


@dataclass(frozen=True)
class CuttingPlaneResult:
    """Certified output of the constraint-generation solver.

    alpha and y are the final multipliers of the reduced program's
    dual; generated lists the (state, set) rows the run materialized,
    seeds included; the scheme is post-repair and satisfies both
    incentive families with zero payments.
    """

    instance: MultiAgentInstance
    scheme: MultiAgentScheme
    alpha: tuple
    y: tuple
    objective: Fraction
    generated: tuple
    rounds: int


def _restricted_dual(instance: MultiAgentInstance, rows) -> lp.LpProblem:
    n, m = instance.receivers, instance.num_states
    objective = [ZERO] * n + [ONE] * m
    bounds = [(ZERO, None)] * n + [(None, None)] * m
    constraints = []
    for t, subset in rows:
        state = instance.states[t]
        coeffs = [(n + t, ONE)]
        for i in range(n):
            if (subset >> i) & 1:
                g = state.prob * _marginal(state, i, subset)
                if g:
                    coeffs.append((i, -g))
        constraints.append(
            lp.LinearConstraint(
                coeffs=tuple(coeffs),
                rel=lp.GE,
                rhs=state.prob * state.sender[subset],
                name=f"cut[{t},{subset}]",
            )
        )
    return lp.LpProblem(
        sense="min",
        objective=tuple(objective),
        bounds=tuple(bounds),
        constraints=tuple(constraints),
    )


def _restricted_primal(instance: MultiAgentInstance, rows) -> lp.LpProblem:
    n, m = instance.receivers, instance.num_states
    objective = []
    for t, subset in rows:
        state = instance.states[t]
        objective.append(state.prob * state.sender[subset])
    constraints = []
    for i in range(n):
        coeffs = []
        for k, (t, subset) in enumerate(rows):
            if (subset >> i) & 1:
                state = instance.states[t]
                g = state.prob * _marginal(state, i, subset)
                if g:
                    coeffs.append((k, g))
        constraints.append(
            lp.LinearConstraint(
                coeffs=tuple(coeffs), rel=lp.GE, rhs=ZERO, name=f"follow1[{i}]"
            )
        )
    for t in range(m):
        coeffs = tuple(
            (k, ONE) for k, (tk, _) in enumerate(rows) if tk == t
        )
        constraints.append(
            lp.LinearConstraint(coeffs=coeffs, rel=lp.EQ, rhs=ONE, name=f"dist[{t}]")
        )
    return lp.LpProblem(
        sense="max",
        objective=tuple(objective),
        bounds=tuple([(ZERO, None)] * len(rows)),
        constraints=tuple(constraints),
    )


def _certified_solve(problem: lp.LpProblem) -> lp.LpSolution:
    solution = lp.solve(problem)
    assert solution.status == lp.OPTIMAL, f"LP came back {solution.status}"
    report = lp.certify_report(problem, solution)
    assert not report, f"optimality certificate failed: {report}"
    return solution


def cutting_plane_solve(
    instance: MultiAgentInstance, oracle: Optional[SetFunctionOracle] = None
) -> CuttingPlaneResult:
    """Solve the reduced program by constraint generation.

    Works on the dual: minimize the sum of per-state values subject to
    one row per (state, set) pair, starting from the empty and full
    sets in every state and asking the oracle for a most-violated set
    per state each round; a returned row is added only when it is
    exactly violated.  When no violations remain the restricted
    optimum is optimal for the reduced program; the recommendation
    distribution is recovered by re-solving the restricted program
    over the generated sets, then repaired into a solution of the full
    program.  The final multipliers are checked against every subset
    row exhaustively; any violation there, or an oracle value that
    disagrees with direct evaluation, raises OracleUnsound.
    """
    _require_reducible(instance)
    if oracle is None:
        oracle = brute_force_oracle(instance)
    n, m = instance.receivers, instance.num_states
    nsub = instance.num_subsets
    full_mask = nsub - 1

    rows = []
    for t in range(m):
        rows.append((t, 0))
        if full_mask:
            rows.append((t, full_mask))
    present = set(rows)

    max_rounds = nsub * m + 4
    rounds = 0
    alpha: tuple = ()
    y: tuple = ()
    while True:
        rounds += 1
        if rounds > max_rounds:
            raise IterationLimit(
                f"constraint generation still running after {max_rounds} rounds"
            )
        solution = _certified_solve(_restricted_dual(instance, rows))
        alpha = tuple(solution.primal[i] for i in range(n))
        y = tuple(solution.primal[n + t] for t in range(m))
        added = False
        for t in range(m):
            subset, value = oracle(t, alpha)
            if not 0 <= subset < nsub:
                raise OracleUnsound(f"oracle returned set {subset} in state {t}")
            if value != oracle_objective(instance, t, alpha, subset):
                raise OracleUnsound(
                    f"oracle value for set {subset:#b} in state {t} "
                    "disagrees with direct evaluation"
                )
            prob = instance.states[t].prob
            if y[t] < prob * value:
                assert (t, subset) not in present, "satisfied row reported violated"
                rows.append((t, subset))
                present.add((t, subset))
                added = True
        if not added:
            break
    objective = solution.objective

    for t in range(m):
        state = instance.states[t]
        for subset in range(nsub):
            lhs = y[t]
            for i in range(n):
                if (subset >> i) & 1:
                    lhs -= alpha[i] * state.prob * _marginal(state, i, subset)
            if lhs < state.prob * state.sender[subset]:
                raise OracleUnsound(
                    f"final multipliers violate the row for set {subset:#b} "
                    f"in state {t}; the oracle never reported it"
                )

    primal_solution = _certified_solve(_restricted_primal(instance, rows))
    assert primal_solution.objective == objective, "restricted duality gap"
    dist = [[ZERO] * nsub for _ in range(m)]
    for k, (t, subset) in enumerate(rows):
        dist[t][subset] += primal_solution.primal[k]
    zeros = (ZERO,) * n
    scheme = MultiAgentScheme(
        distribution=tuple(tuple(row) for row in dist),
        q_one=zeros,
        q_zero=zeros,
    )
    repaired = repair_scheme(instance, scheme)
    assert multi.sender_value(instance, repaired) == objective, (
        "repair changed the objective"
    )

    return CuttingPlaneResult(
        instance=instance,
        scheme=repaired,
        alpha=alpha,
        y=y,
        objective=objective,
        generated=tuple(rows),
        rounds=rounds,
    )
