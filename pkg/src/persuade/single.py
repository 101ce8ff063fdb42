"""Single-receiver solvers.

The LP formulation optimizes jointly over a direct scheme and expected
payments: maximize expected sender payoff minus total payments, subject
to one follow-the-recommendation row per ordered action pair and a
probability simplex row per state.  The payment model picks the payment
polytope: no payments, non-negative, budget-balanced (sum zero), or
free.

The follow rows' dual multipliers reweight the receiver's payoff into a
dual-adjusted payoff; at an optimal dual the optimal scheme recommends,
in every state, only actions maximizing sender payoff plus dual-adjusted
payoff.  That support condition plus complementary slackness is what
verify_support_optimality checks.

For action-symmetric instances the dual collapses to a single scalar
lambda and the optimizer of sender payoff + n*lambda*receiver payoff
(ties uniform) is optimal: at the smallest persuasive lambda for the
no-payment model, and at lambda = 1/(n-1) with threshold payments for
free payments.  Those fast paths are implemented here and cross-checked
against the LP.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from . import lp, model
from .errors import CharacterizationMismatch, NotSymmetric, WrongActionCount
from .model import (
    PaymentModel,
    PersuasionInstance,
    SignalingScheme,
    TypedInstance,
)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class SingleVarMap:
    """Column and row layout of the single-receiver LP."""

    actions: int
    num_states: int
    payment_model: PaymentModel

    def phi(self, theta: int, i: int) -> int:
        return theta * self.actions + i

    def payment(self, i: int) -> Optional[int]:
        if self.payment_model is PaymentModel.ZERO:
            return None
        return self.num_states * self.actions + i

    def follow_row(self, i: int, j: int) -> int:
        # Rows ordered (0,1), (0,2), ..., (1,0), (1,2), ...
        if i == j:
            raise ValueError("no follow row for i == j")
        return i * (self.actions - 1) + (j if j < i else j - 1)

    def simplex_row(self, theta: int) -> int:
        return self.actions * (self.actions - 1) + theta

    @property
    def budget_row(self) -> Optional[int]:
        if self.payment_model is not PaymentModel.BUDGET_BALANCED:
            return None
        return self.actions * (self.actions - 1) + self.num_states


@dataclass(frozen=True)
class SingleDual:
    """Follow-row multipliers as an n x n matrix with a zero diagonal."""

    lam: tuple

    @property
    def symmetric_value(self) -> Optional[Fraction]:
        n = len(self.lam)
        off = [self.lam[i][j] for i in range(n) for j in range(n) if i != j]
        if off and all(v == off[0] for v in off):
            return off[0]
        return None


@dataclass(frozen=True)
class SingleResult:
    """A solved single-receiver instance under one payment model."""

    instance: PersuasionInstance
    payment_model: PaymentModel
    scheme: SignalingScheme
    utility: Fraction
    dual: Optional[SingleDual]
    problem: Optional[lp.LpProblem] = None
    solution: Optional[lp.LpSolution] = None


@dataclass(frozen=True)
class LambdaStarResult:
    """Smallest persuasive lambda and its scaled-welfare scheme."""

    lambda_star: Fraction
    scheme: SignalingScheme
    utility: Fraction
    candidates: tuple


@dataclass(frozen=True)
class DichotomyResult:
    """Winner of the two non-negative-payment candidates."""

    branch: str  # "no_payment" or "canonical_payment"
    result: SingleResult
    lambda_star: Fraction
    no_payment_utility: Fraction
    canonical_utility: Fraction


def _as_instance(
    instance: Union[PersuasionInstance, TypedInstance]
) -> PersuasionInstance:
    if isinstance(instance, TypedInstance):
        return model.expand_typed(instance)
    model.ensure_valid(instance)
    return instance


def build_lp(
    instance: PersuasionInstance, payment_model: PaymentModel
) -> tuple:
    """LP over scheme probabilities and (unless zero) expected payments."""
    n = instance.actions
    m = instance.num_states
    vmap = SingleVarMap(actions=n, num_states=m, payment_model=payment_model)
    with_pay = payment_model is not PaymentModel.ZERO
    num_vars = m * n + (n if with_pay else 0)

    objective = [ZERO] * num_vars
    for t, state in enumerate(instance.states):
        for i in range(n):
            objective[vmap.phi(t, i)] = state.prob * state.sender[i]
    if with_pay:
        for i in range(n):
            objective[vmap.payment(i)] = -ONE

    bounds = [(ZERO, None)] * (m * n)
    if with_pay:
        if payment_model is PaymentModel.NONNEGATIVE:
            bounds += [(ZERO, None)] * n
        else:
            bounds += [(None, None)] * n

    constraints = []
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            coeffs = []
            for t, state in enumerate(instance.states):
                diff = state.prob * (state.receiver[i] - state.receiver[j])
                if diff:
                    coeffs.append((vmap.phi(t, i), diff))
            if with_pay:
                coeffs.append((vmap.payment(i), ONE))
            constraints.append(
                lp.LinearConstraint(
                    coeffs=tuple(coeffs),
                    rel=lp.GE,
                    rhs=ZERO,
                    name=f"follow[{i}->{j}]",
                )
            )
    for t in range(m):
        constraints.append(
            lp.LinearConstraint(
                coeffs=tuple((vmap.phi(t, i), ONE) for i in range(n)),
                rel=lp.EQ,
                rhs=ONE,
                name=f"simplex[{t}]",
            )
        )
    if payment_model is PaymentModel.BUDGET_BALANCED:
        constraints.append(
            lp.LinearConstraint(
                coeffs=tuple((vmap.payment(i), ONE) for i in range(n)),
                rel=lp.EQ,
                rhs=ZERO,
                name="budget",
            )
        )

    problem = lp.LpProblem(
        sense="max",
        objective=tuple(objective),
        bounds=tuple(bounds),
        constraints=tuple(constraints),
    )
    return problem, vmap


def solve_optimal(
    instance: Union[PersuasionInstance, TypedInstance],
    payment_model: PaymentModel,
) -> SingleResult:
    """Solve the LP to exact optimality and attach the certified dual."""
    inst = _as_instance(instance)
    if inst.actions == 1 and payment_model is PaymentModel.ARBITRARY:
        # With no alternative action there is no obedience constraint to
        # price, so an unrestricted charge makes the LP unbounded.
        raise WrongActionCount(
            "free payments are unbounded with a single action"
        )
    problem, vmap = build_lp(inst, payment_model)
    solution = lp.solve(problem)
    assert solution.status == lp.OPTIMAL, f"LP came back {solution.status}"
    report = lp.certify_report(problem, solution)
    assert not report, f"optimality certificate failed: {report}"

    n, m = inst.actions, inst.num_states
    distribution = tuple(
        tuple(solution.primal[vmap.phi(t, i)] for i in range(n)) for t in range(m)
    )
    if payment_model is PaymentModel.ZERO:
        payments = (ZERO,) * n
    else:
        payments = tuple(solution.primal[vmap.payment(i)] for i in range(n))
    scheme = SignalingScheme(distribution=distribution, payments=payments)

    lam = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j:
                # Follow rows are >=-rows; in max convention their duals
                # are <= 0 and the multipliers are their negatives.
                lam[i][j] = -solution.dual[vmap.follow_row(i, j)]
    dual = SingleDual(lam=tuple(tuple(row) for row in lam))

    result = SingleResult(
        instance=inst,
        payment_model=payment_model,
        scheme=scheme,
        utility=solution.objective,
        dual=dual,
        problem=problem,
        solution=solution,
    )
    assert verify_support_optimality(inst, scheme, dual), (
        "optimal scheme leaves the dual-adjusted argmax support"
    )
    return result


def dual_adjusted_payoff(
    instance: PersuasionInstance, dual: SingleDual, theta: int, i: int
) -> Fraction:
    """r_theta(i) * sum_j lam[i][j] - sum_j lam[i][j] * r_theta(j)."""
    state = instance.states[theta]
    n = instance.actions
    total = ZERO
    weight = ZERO
    for j in range(n):
        if j == i:
            continue
        lam = dual.lam[i][j]
        if lam:
            weight += lam
            total -= lam * state.receiver[j]
    return state.receiver[i] * weight + total


def lagrangian_value(
    instance: PersuasionInstance, dual: SingleDual, scheme: SignalingScheme
) -> Fraction:
    """Objective after moving the follow rows into it with multipliers lam.

    Equals sender payoff + sum over states of the dual-adjusted payoff
    plus, per action, payments times (sum of outgoing multipliers - 1).
    For any persuasive pair and non-negative lam this upper-bounds the
    net sender utility.
    """
    n = instance.actions
    total = ZERO
    for t, state in enumerate(instance.states):
        if not state.prob:
            continue
        for i in range(n):
            p = scheme.distribution[t][i]
            if p:
                adjusted = state.sender[i] + dual_adjusted_payoff(
                    instance, dual, t, i
                )
                total += state.prob * p * adjusted
    for i in range(n):
        if scheme.payments[i]:
            out = sum(
                (dual.lam[i][j] for j in range(n) if j != i), ZERO
            )
            total += scheme.payments[i] * (out - ONE)
    return total


def verify_support_optimality(
    instance: PersuasionInstance, scheme: SignalingScheme, dual: SingleDual
) -> bool:
    """Support and complementary-slackness check against a dual matrix.

    True iff in every positive-probability state the scheme only
    recommends actions maximizing sender payoff plus dual-adjusted
    payoff, and every strictly positive multiplier sits on a tight
    follow constraint.
    """
    n = instance.actions
    for t, state in enumerate(instance.states):
        if not state.prob:
            continue
        values = [
            state.sender[i] + dual_adjusted_payoff(instance, dual, t, i)
            for i in range(n)
        ]
        best = max(values)
        for i in range(n):
            if scheme.distribution[t][i] and values[i] != best:
                return False
    x = model.cross_utility(instance, scheme.distribution)
    for i in range(n):
        for j in range(n):
            if i != j and dual.lam[i][j]:
                if x.entry(i, i) + scheme.payments[i] != x.entry(i, j):
                    return False
    return True


def _uniform_over(indices, n: int) -> tuple:
    share = Fraction(1, len(indices))
    return tuple(share if i in indices else ZERO for i in range(n))


def welfare_weighted_scheme(
    instance: PersuasionInstance, weight: Fraction
) -> tuple:
    """Distribution recommending argmax of s + weight * r, ties uniform."""
    n = instance.actions
    rows = []
    for state in instance.states:
        values = [state.sender[i] + weight * state.receiver[i] for i in range(n)]
        best = max(values)
        winners = {i for i in range(n) if values[i] == best}
        rows.append(_uniform_over(winners, n))
    return tuple(rows)


def lambda_scheme(
    instance: Union[PersuasionInstance, TypedInstance], lam: Fraction
) -> SignalingScheme:
    """Scaled-welfare scheme for scalar lambda: argmax s + n*lambda*r, no payments."""
    inst = _as_instance(instance)
    distribution = welfare_weighted_scheme(inst, inst.actions * lam)
    return SignalingScheme(
        distribution=distribution, payments=(ZERO,) * inst.actions
    )


def lambda_candidates(instance: PersuasionInstance) -> tuple:
    """Breakpoint grid for the scalar-lambda sweep.

    Contains 0, every lambda > 0 where two actions swap order in
    s + n*lambda*r within some state, midpoints of consecutive grid
    values, and one point past the last breakpoint.  The scheme is
    constant between consecutive breakpoints, so this grid meets every
    distinct scaled-welfare scheme.
    """
    n = instance.actions
    points = set()
    for state in instance.states:
        for i in range(n):
            for j in range(i + 1, n):
                dr = state.receiver[j] - state.receiver[i]
                if dr:
                    lam = Fraction(state.sender[i] - state.sender[j], n) / dr
                    if lam > 0:
                        points.add(lam)
    grid = [ZERO] + sorted(points)
    out = [grid[0]]
    for prev, cur in zip(grid, grid[1:]):
        out.append((prev + cur) / 2)
        out.append(cur)
    out.append(grid[-1] + 1)
    return tuple(out)


def _tie_break_extremes(instance: PersuasionInstance, weight: Fraction) -> tuple:
    """Receiver-worst and receiver-best selections within each argmax set.

    For each state, restrict to the actions maximizing s + weight * r and
    return two distributions: uniform over the tied actions with the
    smallest receiver payoff, and uniform over those with the largest.
    Every distribution supported on the argmax sets has a follow payoff
    between these two extremes.
    """
    n = instance.actions
    lo_rows = []
    hi_rows = []
    for state in instance.states:
        values = [state.sender[i] + weight * state.receiver[i] for i in range(n)]
        best = max(values)
        winners = [i for i in range(n) if values[i] == best]
        r_lo = min(state.receiver[i] for i in winners)
        r_hi = max(state.receiver[i] for i in winners)
        lo_rows.append(
            _uniform_over({i for i in winners if state.receiver[i] == r_lo}, n)
        )
        hi_rows.append(
            _uniform_over({i for i in winners if state.receiver[i] == r_hi}, n)
        )
    return tuple(lo_rows), tuple(hi_rows)


def _follow_total(inst: PersuasionInstance, rows) -> Fraction:
    """Expected receiver payoff of the recommended action, summed over states."""
    total = ZERO
    for state, row in zip(inst.states, rows):
        for i, p in enumerate(row):
            if p:
                total += state.prob * p * state.receiver[i]
    return total


def find_lambda_star(
    instance: Union[PersuasionInstance, TypedInstance],
    *,
    cross_check: bool = True,
) -> LambdaStarResult:
    """Smallest lambda whose scaled-welfare support admits a persuasive scheme.

    Requires an action-symmetric instance.  Scanning the breakpoint grid
    upward, the first candidate lambda is found at which some scheme
    supported on the per-state argmax sets of s + n*lambda*r is
    persuasive without payments; that support then carries the optimal
    zero-payment scheme.  Away from breakpoints the argmax is essentially
    unique and the scheme is the uniform tie-break.  At a breakpoint the
    uniform tie-break can overshoot the follow incentive, which wastes
    sender payoff: within a tie set s + n*lambda*r is constant, so sender
    utility falls one-for-one (times n*lambda) as the follow payoff
    rises, and the best scheme mixes the tied extremes so the follow
    payoff is as small as persuasiveness allows.  The uniform scheme is
    returned whenever it is persuasive and no such mixture beats it.
    With cross_check the utility is compared against the LP optimum.
    """
    inst = _as_instance(instance)
    if not model.is_symmetric(instance if isinstance(instance, TypedInstance) else inst):
        raise NotSymmetric("scalar-lambda sweep requires a symmetric instance")
    n = inst.actions
    zeros = (ZERO,) * n
    # Unconditional expected receiver payoff of a fixed action; the same
    # for every action on a symmetric instance.  A symmetric scheme is
    # persuasive exactly when its follow payoff reaches this level.
    unconditional = sum(
        (state.prob * state.receiver[0] for state in inst.states), ZERO
    )
    found = None
    candidates = lambda_candidates(inst)
    for lam in candidates:
        lo_rows, hi_rows = _tie_break_extremes(inst, n * lam)
        hi_scheme = SignalingScheme(distribution=hi_rows, payments=zeros)
        if model.is_persuasive(inst, hi_scheme):
            found = (lam, lo_rows, hi_rows, hi_scheme)
            break
    if found is None:
        raise CharacterizationMismatch(
            "no candidate lambda yields a persuasive scheme; the grid "
            "should always end in one"
        )
    lam, lo_rows, hi_rows, hi_scheme = found
    follow_lo = _follow_total(inst, lo_rows)
    follow_hi = _follow_total(inst, hi_rows)
    target = max(unconditional, follow_lo)
    if follow_hi == follow_lo:
        best = hi_scheme
    else:
        t = (target - follow_lo) / (follow_hi - follow_lo)
        blended = tuple(
            tuple((ONE - t) * lo + t * hi for lo, hi in zip(lo_row, hi_row))
            for lo_row, hi_row in zip(lo_rows, hi_rows)
        )
        best = SignalingScheme(distribution=blended, payments=zeros)
    if not model.is_persuasive(inst, best):
        raise CharacterizationMismatch(
            "binding tie mixture at the critical lambda is not persuasive"
        )
    utility = model.sender_utility(inst, best)
    uniform = lambda_scheme(inst, lam)
    if model.is_persuasive(inst, uniform):
        uniform_utility = model.sender_utility(inst, uniform)
        if uniform_utility >= utility:
            best, utility = uniform, uniform_utility
    if cross_check:
        reference = solve_optimal(inst, PaymentModel.ZERO)
        if reference.utility != utility:
            raise CharacterizationMismatch(
                f"lambda sweep utility {utility} != LP optimum "
                f"{reference.utility}"
            )
    return LambdaStarResult(
        lambda_star=lam, scheme=best, utility=utility, candidates=candidates
    )


def _constant_dual(n: int, value: Fraction) -> SingleDual:
    lam = tuple(
        tuple(value if i != j else ZERO for j in range(n)) for i in range(n)
    )
    return SingleDual(lam=lam)


def _threshold_scheme(inst: PersuasionInstance, weight: Fraction) -> tuple:
    distribution = welfare_weighted_scheme(inst, weight)
    payments = model.payment_thresholds(inst, distribution)
    scheme = SignalingScheme(distribution=distribution, payments=payments)
    return scheme, model.sender_utility(inst, scheme)


def canonical_two_action_scheme(
    instance: Union[PersuasionInstance, TypedInstance],
    *,
    verify: bool = True,
) -> SingleResult:
    """Free-payment optimum for two actions, any prior.

    Recommends argmax of s + 2r (ties uniform) and charges threshold
    payments.  With verify the utility is compared against the LP.
    """
    inst = _as_instance(instance)
    if inst.actions != 2:
        raise WrongActionCount(
            f"two-action fast path got {inst.actions} actions"
        )
    scheme, utility = _threshold_scheme(inst, Fraction(2))
    result = SingleResult(
        instance=inst,
        payment_model=PaymentModel.ARBITRARY,
        scheme=scheme,
        utility=utility,
        dual=_constant_dual(2, ONE),
    )
    if verify:
        reference = solve_optimal(inst, PaymentModel.ARBITRARY)
        if reference.utility != utility:
            raise CharacterizationMismatch(
                f"two-action scheme utility {utility} != LP optimum "
                f"{reference.utility}"
            )
    return result


def canonical_symmetric_scheme(
    instance: Union[PersuasionInstance, TypedInstance],
    *,
    verify: bool = True,
) -> SingleResult:
    """Free-payment optimum for symmetric instances with n >= 2 actions.

    Recommends argmax of s + (n/(n-1)) r (the scalar dual is 1/(n-1))
    with threshold payments.  Action symmetry makes every follow row
    tight under those payments, which is what lets the single scalar
    certify optimality.
    """
    inst = _as_instance(instance)
    n = inst.actions
    if n < 2:
        raise WrongActionCount("symmetric fast path needs at least two actions")
    if not model.is_symmetric(instance if isinstance(instance, TypedInstance) else inst):
        raise NotSymmetric("symmetric fast path requires a symmetric instance")
    scheme, utility = _threshold_scheme(inst, Fraction(n, n - 1))
    result = SingleResult(
        instance=inst,
        payment_model=PaymentModel.ARBITRARY,
        scheme=scheme,
        utility=utility,
        dual=_constant_dual(n, Fraction(1, n - 1)),
    )
    if verify:
        reference = solve_optimal(inst, PaymentModel.ARBITRARY)
        if reference.utility != utility:
            raise CharacterizationMismatch(
                f"symmetric scheme utility {utility} != LP optimum "
                f"{reference.utility}"
            )
    return result


def nonnegative_dichotomy(
    instance: Union[PersuasionInstance, TypedInstance],
    *,
    verify: bool = True,
) -> DichotomyResult:
    """Best of the two candidate optima under non-negative payments.

    Either the zero-payment optimum (payments identically 0) or the
    canonical symmetric scheme with its thresholds clipped at zero wins;
    ties go to the payment-free branch.  With verify the winner is
    compared against the LP optimum.
    """
    inst = _as_instance(instance)
    if inst.actions < 2:
        raise WrongActionCount("dichotomy needs at least two actions")
    sweep = find_lambda_star(instance, cross_check=False)

    canonical = welfare_weighted_scheme(inst, Fraction(inst.actions, inst.actions - 1))
    thresholds = model.payment_thresholds(inst, canonical)
    clipped = tuple(max(ZERO, t) for t in thresholds)
    paid_scheme = SignalingScheme(distribution=canonical, payments=clipped)
    paid_utility = model.sender_utility(inst, paid_scheme)

    if sweep.utility >= paid_utility:
        branch = "no_payment"
        scheme, utility = sweep.scheme, sweep.utility
    else:
        branch = "canonical_payment"
        scheme, utility = paid_scheme, paid_utility

    if verify:
        reference = solve_optimal(inst, PaymentModel.NONNEGATIVE)
        if reference.utility != utility:
            raise CharacterizationMismatch(
                f"dichotomy winner utility {utility} != LP optimum "
                f"{reference.utility}"
            )
    result = SingleResult(
        instance=inst,
        payment_model=PaymentModel.NONNEGATIVE,
        scheme=scheme,
        utility=utility,
        dual=None,
    )
    return DichotomyResult(
        branch=branch,
        result=result,
        lambda_star=sweep.lambda_star,
        no_payment_utility=sweep.utility,
        canonical_utility=paid_utility,
    )
