"""Multi-receiver binary-action persuasion with externalities.

Each of N receivers picks action 0 or 1.  A state assigns the sender a
payoff f(S) and receiver i a payoff u_i(S) for every set S of receivers
playing 1 (S is a bitmask, receiver 0 at the least significant bit).
Direct schemes recommend a random set per state; persuasiveness splits
into two constraint families: receivers told 1 must not gain by playing
0, and receivers told 0 must not gain by playing 1.  Payments enter as
expected amounts Q_i(1), Q_i(0) attached to the two recommendations;
per-recommendation transfers are recovered from them at the end.

The budget-balanced optimum is characterized by a single weight gamma*:
an optimal scheme recommends sets maximizing the sender payoff plus
gamma* times the net marginal pull of the set (members' marginal utility
for playing 1 minus outsiders' gain from switching to 1).  With
unrestricted payments the weight is 1 and the rule maximizes total
payoff.  Both are verified against the exact LP on every call.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import lp, model
from .errors import (
    CharacterizationMismatch,
    InconsistentPayments,
    SizeLimitExceeded,
)
from .model import (
    MultiAgentInstance,
    MultiAgentScheme,
    MultiState,
    PaymentModel,
)

ZERO = Fraction(0)
ONE = Fraction(1)

SIZE_LIMIT_ENV = "PERSUADE_SIZE_LIMIT"
DEFAULT_SIZE_LIMIT = 4096


def size_limit() -> int:
    """Maximum number of scheme columns the explicit LP will build."""
    raw = os.environ.get(SIZE_LIMIT_ENV)
    return int(raw) if raw else DEFAULT_SIZE_LIMIT


# ---------------------------------------------------------------------------
# Variable/row layout and result containers


@dataclass(frozen=True)
class MultiVarMap:
    """Column and row indexing for the subset LP."""

    receivers: int
    num_states: int
    payment_model: PaymentModel

    @property
    def num_subsets(self) -> int:
        return 1 << self.receivers

    def phi(self, t: int, subset: int) -> int:
        return t * self.num_subsets + subset

    @property
    def _q_base(self) -> int:
        return self.num_states * self.num_subsets

    def q_one(self, i: int) -> int:
        return self._q_base + i

    def q_zero(self, i: int) -> int:
        return self._q_base + self.receivers + i

    def follow_one_row(self, i: int) -> int:
        return i

    def follow_zero_row(self, i: int) -> int:
        return self.receivers + i

    def simplex_row(self, t: int) -> int:
        return 2 * self.receivers + t

    @property
    def budget_row(self) -> int:
        return 2 * self.receivers + self.num_states


@dataclass(frozen=True)
class MultiDual:
    """Multipliers for the subset LP.

    alpha[i] prices receiver i's keep-playing-1 row and beta[i] the
    keep-playing-0 row (both non-negative in a certified dual).  gamma
    is the virtual-payoff weight implied by the payment columns: under
    budget balance it is one plus the budget row's dual, with
    unrestricted payments it is exactly one, and it is None when the
    payment model pins no weight.  y holds the per-state distribution
    duals.
    """

    alpha: tuple
    beta: tuple
    gamma: Optional[Fraction]
    y: tuple


@dataclass(frozen=True)
class MultiLpResult:
    """Certified LP solve of a multi-receiver instance."""

    instance: MultiAgentInstance
    payment_model: PaymentModel
    scheme: MultiAgentScheme
    utility: Fraction
    dual: MultiDual
    problem: lp.LpProblem
    solution: lp.LpSolution


@dataclass(frozen=True)
class BudgetBalancedResult:
    """Budget-balanced optimum in virtual-payoff form.

    via records how the scheme was reconstructed: "argmax" for the
    deterministic argmax allocation at the dual's gamma*, "gamma_sweep"
    for a deterministic allocation found at a swept candidate gamma, and
    "lp_support" for the LP scheme verified to randomize only among
    virtual-payoff-maximal sets.
    """

    instance: MultiAgentInstance
    scheme: MultiAgentScheme
    utility: Fraction
    dual: MultiDual
    gamma_star: Fraction
    via: str


@dataclass(frozen=True)
class ArbitraryResult:
    """Unrestricted-payment optimum: total-payoff argmax plus payments."""

    instance: MultiAgentInstance
    scheme: MultiAgentScheme
    utility: Fraction


@dataclass(frozen=True)
class RealizedPayments:
    """Per-recommendation transfers recovered from expected payments.

    p_one[i] is paid to receiver i each time it is told 1, p_zero[i]
    each time it is told 0; x_star[i] is the probability of the 1
    recommendation.
    """

    p_one: tuple
    p_zero: tuple
    x_star: tuple


# ---------------------------------------------------------------------------
# Marginal utilities and virtual payoff


def _marginal(state: MultiState, i: int, subset: int) -> Fraction:
    if not (subset >> i) & 1:
        return ZERO
    return state.receivers[i][subset] - state.receivers[i][subset & ~(1 << i)]


def marginal(
    instance: MultiAgentInstance, theta: int, i: int, subset: int
) -> Fraction:
    """Receiver i's marginal utility for playing 1 at the given set.

    Returns u_i(S) - u_i(S minus i) for i in S and 0 otherwise.
    """
    return _marginal(instance.states[theta], i, subset)


def _pull(state: MultiState, receivers: int, subset: int) -> Fraction:
    total = ZERO
    for i in range(receivers):
        if (subset >> i) & 1:
            total += _marginal(state, i, subset)
        else:
            total -= _marginal(state, i, subset | (1 << i))
    return total


def total_virtual_payoff(
    instance: MultiAgentInstance, theta: int, subset: int, gamma: Fraction
) -> Fraction:
    """Sender payoff plus gamma times the net marginal pull of the set.

    The pull adds each member's marginal utility for playing 1 and
    subtracts each outsider's gain from switching to 1, so positive
    gamma favors sets whose members want in and whose outsiders want to
    stay out.
    """
    state = instance.states[theta]
    return state.sender[subset] + gamma * _pull(state, instance.receivers, subset)


def virtual_payoff_argmax(
    instance: MultiAgentInstance, theta: int, gamma: Fraction
) -> int:
    """Smallest bitmask maximizing the total virtual payoff at gamma."""
    best_subset = 0
    best = None
    for subset in range(instance.num_subsets):
        value = total_virtual_payoff(instance, theta, subset, gamma)
        if best is None or value > best:
            best, best_subset = value, subset
    return best_subset


# ---------------------------------------------------------------------------
# Scheme evaluation


def incentive_totals(instance: MultiAgentInstance, distribution) -> tuple:
    """Expected incentive mass of each receiver's two recommendations.

    Returns (follow_one, switch_zero): follow_one[i] is the expected
    marginal utility of playing 1 when told 1, switch_zero[i] the
    expected gain from switching to 1 when told 0.  A scheme with
    payments (q_one, q_zero) is persuasive exactly when
    follow_one[i] + q_one[i] >= 0 and switch_zero[i] - q_zero[i] <= 0.
    """
    n = instance.receivers
    follow_one = [ZERO] * n
    switch_zero = [ZERO] * n
    for state, row in zip(instance.states, distribution):
        for subset, p in enumerate(row):
            if not p:
                continue
            weight = state.prob * p
            for i in range(n):
                if (subset >> i) & 1:
                    follow_one[i] += weight * _marginal(state, i, subset)
                else:
                    switch_zero[i] += weight * _marginal(
                        state, i, subset | (1 << i)
                    )
    return tuple(follow_one), tuple(switch_zero)


def is_persuasive(instance: MultiAgentInstance, scheme: MultiAgentScheme) -> bool:
    """Whether both incentive families hold given the expected payments."""
    follow_one, switch_zero = incentive_totals(instance, scheme.distribution)
    return all(
        follow_one[i] + scheme.q_one[i] >= 0
        and switch_zero[i] - scheme.q_zero[i] <= 0
        for i in range(instance.receivers)
    )


def sender_value(instance: MultiAgentInstance, scheme: MultiAgentScheme) -> Fraction:
    """Expected sender payoff net of expected payments."""
    total = ZERO
    for state, row in zip(instance.states, scheme.distribution):
        for subset, p in enumerate(row):
            if p:
                total += state.prob * p * state.sender[subset]
    return total - sum(scheme.q_one, ZERO) - sum(scheme.q_zero, ZERO)


def total_payments(scheme: MultiAgentScheme) -> Fraction:
    """Sum of all expected payments; zero under budget balance."""
    return sum(scheme.q_one, ZERO) + sum(scheme.q_zero, ZERO)


# ---------------------------------------------------------------------------
# The explicit LP


def build_lp_binary(
    instance: MultiAgentInstance, payment_model: PaymentModel
) -> tuple:
    """LP over per-state subset probabilities and expected payments.

    Columns are phi[theta][S] over all bitmasks plus Q_i(1), Q_i(0)
    unless payments are disallowed.  Rows per receiver: a
    keep-playing-1 row (expected marginal of the 1-recommendation plus
    Q_i(1) at least 0) and a keep-playing-0 row (expected switching gain
    of the 0-recommendation minus Q_i(0) at most 0); then one
    distribution row per state; under budget balance, one row forcing
    total expected payments to zero.
    """
    model.ensure_valid(instance)
    nsub = instance.num_subsets
    m = instance.num_states
    n = instance.receivers
    cols = nsub * m
    limit = size_limit()
    if cols > limit:
        raise SizeLimitExceeded(
            f"{cols} scheme columns exceed the configured limit {limit}"
        )
    with_pay = payment_model is not PaymentModel.ZERO
    vmap = MultiVarMap(receivers=n, num_states=m, payment_model=payment_model)
    num_vars = cols + (2 * n if with_pay else 0)

    objective = [ZERO] * num_vars
    for t, state in enumerate(instance.states):
        for subset in range(nsub):
            objective[vmap.phi(t, subset)] = state.prob * state.sender[subset]
    if with_pay:
        for i in range(n):
            objective[vmap.q_one(i)] = -ONE
            objective[vmap.q_zero(i)] = -ONE

    bounds = [(ZERO, None)] * cols
    if with_pay:
        pay_bound = (
            (ZERO, None)
            if payment_model is PaymentModel.NONNEGATIVE
            else (None, None)
        )
        bounds += [pay_bound] * (2 * n)

    constraints = []
    for i in range(n):
        coeffs = []
        for t, state in enumerate(instance.states):
            for subset in range(nsub):
                if (subset >> i) & 1:
                    g = state.prob * _marginal(state, i, subset)
                    if g:
                        coeffs.append((vmap.phi(t, subset), g))
        if with_pay:
            coeffs.append((vmap.q_one(i), ONE))
        constraints.append(
            lp.LinearConstraint(
                coeffs=tuple(coeffs),
                rel=lp.GE,
                rhs=ZERO,
                name=f"follow1[{i}]",
            )
        )
    for i in range(n):
        coeffs = []
        for t, state in enumerate(instance.states):
            for subset in range(nsub):
                if not (subset >> i) & 1:
                    g = state.prob * _marginal(state, i, subset | (1 << i))
                    if g:
                        coeffs.append((vmap.phi(t, subset), g))
        if with_pay:
            coeffs.append((vmap.q_zero(i), -ONE))
        constraints.append(
            lp.LinearConstraint(
                coeffs=tuple(coeffs),
                rel=lp.LE,
                rhs=ZERO,
                name=f"follow0[{i}]",
            )
        )
    for t in range(m):
        constraints.append(
            lp.LinearConstraint(
                coeffs=tuple((vmap.phi(t, subset), ONE) for subset in range(nsub)),
                rel=lp.EQ,
                rhs=ONE,
                name=f"dist[{t}]",
            )
        )
    if payment_model is PaymentModel.BUDGET_BALANCED:
        coeffs = tuple((vmap.q_one(i), ONE) for i in range(n)) + tuple(
            (vmap.q_zero(i), ONE) for i in range(n)
        )
        constraints.append(
            lp.LinearConstraint(coeffs=coeffs, rel=lp.EQ, rhs=ZERO, name="budget")
        )

    problem = lp.LpProblem(
        sense="max",
        objective=tuple(objective),
        bounds=tuple(bounds),
        constraints=tuple(constraints),
    )
    return problem, vmap


def solve_lp(
    instance: MultiAgentInstance, payment_model: PaymentModel
) -> MultiLpResult:
    """Solve the subset LP exactly and attach the certified dual."""
    problem, vmap = build_lp_binary(instance, payment_model)
    solution = lp.solve(problem)
    assert solution.status == lp.OPTIMAL, f"LP came back {solution.status}"
    report = lp.certify_report(problem, solution)
    assert not report, f"optimality certificate failed: {report}"

    nsub, m, n = instance.num_subsets, instance.num_states, instance.receivers
    distribution = tuple(
        tuple(solution.primal[vmap.phi(t, subset)] for subset in range(nsub))
        for t in range(m)
    )
    if payment_model is PaymentModel.ZERO:
        q_one = q_zero = (ZERO,) * n
    else:
        q_one = tuple(solution.primal[vmap.q_one(i)] for i in range(n))
        q_zero = tuple(solution.primal[vmap.q_zero(i)] for i in range(n))
    scheme = MultiAgentScheme(distribution=distribution, q_one=q_one, q_zero=q_zero)

    # >=-rows carry non-positive duals in max convention, <=-rows
    # non-negative ones; alpha and beta are the non-negative multipliers.
    alpha = tuple(-solution.dual[vmap.follow_one_row(i)] for i in range(n))
    beta = tuple(solution.dual[vmap.follow_zero_row(i)] for i in range(n))
    y = tuple(solution.dual[vmap.simplex_row(t)] for t in range(m))
    if payment_model is PaymentModel.BUDGET_BALANCED:
        # The objective charges each payment column -1 and the budget row
        # adds its dual to the same column, so the weight the dual prices
        # marginal utilities at is one plus the raw budget dual.
        gamma: Optional[Fraction] = ONE + solution.dual[vmap.budget_row]
    elif payment_model is PaymentModel.ARBITRARY:
        gamma = ONE
    else:
        gamma = None
    dual = MultiDual(alpha=alpha, beta=beta, gamma=gamma, y=y)

    return MultiLpResult(
        instance=instance,
        payment_model=payment_model,
        scheme=scheme,
        utility=solution.objective,
        dual=dual,
        problem=problem,
        solution=solution,
    )


# ---------------------------------------------------------------------------
# Characterized fast paths


def _allocation_rows(instance: MultiAgentInstance, alloc) -> tuple:
    nsub = instance.num_subsets
    return tuple(
        tuple(ONE if subset == chosen else ZERO for subset in range(nsub))
        for chosen in alloc
    )


def _branch_probabilities(instance: MultiAgentInstance, distribution) -> list:
    x = [ZERO] * instance.receivers
    for state, row in zip(instance.states, distribution):
        for subset, p in enumerate(row):
            if p:
                for i in range(instance.receivers):
                    if (subset >> i) & 1:
                        x[i] += state.prob * p
    return x


def _normalize_dead_branches(
    instance: MultiAgentInstance, distribution, q_one, q_zero
) -> tuple:
    """Move expected payments off zero-probability recommendation branches.

    A payment parked on a branch that never occurs cannot be realized
    per-recommendation.  The incentive rows force such payments to be
    non-negative, so shifting them onto any live branch preserves both
    incentive families and the payment total.
    """
    q_one = list(q_one)
    q_zero = list(q_zero)
    x = _branch_probabilities(instance, distribution)
    extra = ZERO
    for i in range(instance.receivers):
        if x[i] == 0 and q_one[i]:
            extra += q_one[i]
            q_one[i] = ZERO
        if x[i] == 1 and q_zero[i]:
            extra += q_zero[i]
            q_zero[i] = ZERO
    if extra:
        for i in range(instance.receivers):
            if x[i] > 0:
                q_one[i] += extra
                break
        else:
            q_zero[0] += extra
    return tuple(q_one), tuple(q_zero)


def _fixed_allocation_bb(
    instance: MultiAgentInstance, alloc, target: Fraction
) -> Optional[MultiAgentScheme]:
    """Budget-balanced payments for a deterministic allocation, or None.

    With the allocation fixed, payments cancel out of the objective, so
    the allocation reaches target exactly when its raw sender value does.
    The cheapest incentive-compatible payments are Q_i(1) = -follow_one_i
    and Q_i(0) = switch_zero_i; payments are free-signed, so a zero-sum
    choice on top of them exists exactly when their total is at most 0.
    The balancing surplus lands on a live recommendation branch.
    """
    value = sum(
        (
            state.prob * state.sender[chosen]
            for state, chosen in zip(instance.states, alloc)
        ),
        ZERO,
    )
    if value != target:
        return None
    distribution = _allocation_rows(instance, alloc)
    follow_one, switch_zero = incentive_totals(instance, distribution)
    q_one = [-v for v in follow_one]
    q_zero = list(switch_zero)
    surplus = -(sum(q_one, ZERO) + sum(q_zero, ZERO))
    if surplus < 0:
        return None
    q_one[0] += surplus
    q_one, q_zero = _normalize_dead_branches(instance, distribution, q_one, q_zero)
    return MultiAgentScheme(
        distribution=distribution, q_one=q_one, q_zero=q_zero
    )


def gamma_candidates(instance: MultiAgentInstance) -> tuple:
    """Grid of gamma values meeting every distinct virtual-payoff argmax.

    The per-state argmax composition changes only where two subsets swap
    order in f(S) + gamma * pull(S); the grid holds 0, every positive
    crossing, midpoints of consecutive values, and one point past the
    last crossing.
    """
    n = instance.receivers
    nsub = instance.num_subsets
    points = set()
    for state in instance.states:
        pulls = [_pull(state, n, subset) for subset in range(nsub)]
        for a in range(nsub):
            for b in range(a + 1, nsub):
                dpull = pulls[b] - pulls[a]
                if dpull:
                    gamma = (state.sender[a] - state.sender[b]) / dpull
                    if gamma > 0:
                        points.add(gamma)
    grid = [ZERO] + sorted(points)
    out = [grid[0]]
    for prev, cur in zip(grid, grid[1:]):
        out.append((prev + cur) / 2)
        out.append(cur)
    out.append(grid[-1] + 1)
    return tuple(out)


def _support_in_argmax(
    instance: MultiAgentInstance, distribution, gamma: Fraction
) -> bool:
    for theta, row in enumerate(distribution):
        best = max(
            total_virtual_payoff(instance, theta, subset, gamma)
            for subset in range(instance.num_subsets)
        )
        for subset, p in enumerate(row):
            if p and total_virtual_payoff(instance, theta, subset, gamma) != best:
                return False
    return True


def solve_budget_balanced(instance: MultiAgentInstance) -> BudgetBalancedResult:
    """Budget-balanced optimum in virtual-payoff form.

    Solves the LP once for the exact value and the budget-row weight
    gamma*, then reconstructs the optimum in characterized form: first
    the deterministic argmax allocation at gamma*; then, against dual
    degeneracy, deterministic allocations at swept candidate gammas;
    finally the LP scheme itself, accepted only after verifying it
    randomizes among virtual-payoff-maximal sets at gamma* - the optimum
    may genuinely need such a mixture.  Every path re-checks
    persuasiveness, exact budget balance, and the objective.
    """
    ref = solve_lp(instance, PaymentModel.BUDGET_BALANCED)
    gamma_star = ref.dual.gamma
    target = ref.utility
    m = instance.num_states

    via = "argmax"
    gamma_used = gamma_star
    alloc = tuple(
        virtual_payoff_argmax(instance, t, gamma_star) for t in range(m)
    )
    scheme = _fixed_allocation_bb(instance, alloc, target)
    if scheme is None:
        for gamma in gamma_candidates(instance):
            alloc = tuple(
                virtual_payoff_argmax(instance, t, gamma) for t in range(m)
            )
            scheme = _fixed_allocation_bb(instance, alloc, target)
            if scheme is not None:
                via = "gamma_sweep"
                gamma_used = gamma
                break
    if scheme is None and _support_in_argmax(
        instance, ref.scheme.distribution, gamma_star
    ):
        q_one, q_zero = _normalize_dead_branches(
            instance, ref.scheme.distribution, ref.scheme.q_one, ref.scheme.q_zero
        )
        scheme = MultiAgentScheme(
            distribution=ref.scheme.distribution, q_one=q_one, q_zero=q_zero
        )
        via = "lp_support"
        gamma_used = gamma_star
    if scheme is None:
        raise CharacterizationMismatch(
            "no virtual-payoff-supported scheme attains the budget-balanced "
            f"optimum {target} at any candidate gamma"
        )

    assert is_persuasive(instance, scheme), "reconstructed scheme not persuasive"
    assert total_payments(scheme) == 0, "payments do not balance"
    assert sender_value(instance, scheme) == target, "objective drifted"
    return BudgetBalancedResult(
        instance=instance,
        scheme=scheme,
        utility=target,
        dual=ref.dual,
        gamma_star=gamma_used,
        via=via,
    )


def solve_arbitrary(instance: MultiAgentInstance) -> ArbitraryResult:
    """Unrestricted-payment optimum: total-payoff argmax plus payments.

    At gamma = 1 the virtual payoff of a set is the total payoff of
    recommending it, counting members' marginals and outsiders'
    forgone switches.  The cheapest incentive-compatible payments for
    the resulting allocation are Q_i(1) = -follow_one_i and
    Q_i(0) = switch_zero_i; the achieved value is asserted against the
    LP, and any argmax tie-break yields the same value.
    """
    model.ensure_valid(instance)
    alloc = tuple(
        virtual_payoff_argmax(instance, t, ONE)
        for t in range(instance.num_states)
    )
    distribution = _allocation_rows(instance, alloc)
    follow_one, switch_zero = incentive_totals(instance, distribution)
    scheme = MultiAgentScheme(
        distribution=distribution,
        q_one=tuple(-v for v in follow_one),
        q_zero=tuple(switch_zero),
    )
    utility = sender_value(instance, scheme)
    ref = solve_lp(instance, PaymentModel.ARBITRARY)
    if utility != ref.utility:
        raise CharacterizationMismatch(
            f"total-payoff scheme value {utility} != LP optimum {ref.utility}"
        )
    return ArbitraryResult(instance=instance, scheme=scheme, utility=utility)


def recover_payments(
    instance: MultiAgentInstance, scheme: MultiAgentScheme
) -> RealizedPayments:
    """Per-recommendation transfers whose expectations equal Q.

    x_star[i] is the probability receiver i is told 1; the 1-branch pays
    Q_i(1)/x_star[i] and the 0-branch Q_i(0)/(1-x_star[i]).  A branch of
    probability zero pays nothing and its Q must already be zero.
    """
    n = instance.receivers
    x_star = [ZERO] * n
    for state, row in zip(instance.states, scheme.distribution):
        for subset, p in enumerate(row):
            if p:
                for i in range(n):
                    if (subset >> i) & 1:
                        x_star[i] += state.prob * p
    p_one = []
    p_zero = []
    for i in range(n):
        if x_star[i] == 0:
            if scheme.q_one[i] != 0:
                raise InconsistentPayments(
                    f"receiver {i} is never told 1 but carries expected "
                    f"payment {scheme.q_one[i]}"
                )
            p_one.append(ZERO)
        else:
            p_one.append(scheme.q_one[i] / x_star[i])
        miss = ONE - x_star[i]
        if miss == 0:
            if scheme.q_zero[i] != 0:
                raise InconsistentPayments(
                    f"receiver {i} is always told 1 but carries expected "
                    f"payment {scheme.q_zero[i]} on the 0 branch"
                )
            p_zero.append(ZERO)
        else:
            p_zero.append(scheme.q_zero[i] / miss)
    return RealizedPayments(
        p_one=tuple(p_one), p_zero=tuple(p_zero), x_star=tuple(x_star)
    )
