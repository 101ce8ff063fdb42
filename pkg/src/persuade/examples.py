"""Built-in example instances.

Registry keys are the names the command line accepts.  The instances
also anchor the test suite: their optima under each payment model are
known in closed form.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import UnknownExample
from .model import (
    ActionType,
    MultiAgentInstance,
    MultiState,
    PaymentModel,
    PersuasionInstance,
    SignalingScheme,
    State,
    TypedInstance,
)

F = Fraction


def two_action_type_instance() -> TypedInstance:
    """Two actions, each independently a uniform (sender, receiver) type.

    Types run over {0,1}^2 payoff pairs, so there are 16 equiprobable
    states.  Free payments allow extracting receiver surplus: the
    optimum recommends argmax of s + 2r and charges for the advice.
    """
    return TypedInstance(
        actions=2,
        types=(
            ActionType(sender=F(0), receiver=F(0)),
            ActionType(sender=F(0), receiver=F(1)),
            ActionType(sender=F(1), receiver=F(0)),
            ActionType(sender=F(1), receiver=F(1)),
        ),
        iid_marginal=(F(1, 4), F(1, 4), F(1, 4), F(1, 4)),
        default_model=PaymentModel.ARBITRARY,
    )


def zero_sum_two_state_instance() -> PersuasionInstance:
    """Two equiprobable states, receiver payoff the negative of the sender's.

    In state t the sender gets 1-t from action 0 and 1+t from action 1.
    No scheme beats 1/2 without transfers, while free payments reach 3/2
    by selling obedience, and budget balance lands exactly in between
    at 1.
    """
    states = []
    for t in (0, 1):
        sender = (F(1 - t), F(1 + t))
        states.append(
            State(
                prob=F(1, 2),
                sender=sender,
                receiver=tuple(-v for v in sender),
            )
        )
    return PersuasionInstance(
        actions=2, states=tuple(states), default_model=PaymentModel.ZERO
    )


def budget_family_scheme(q: Fraction) -> SignalingScheme:
    """One-parameter scheme family for the zero-sum two-state instance.

    Recommends action 0 in state 0; in state 1 recommends action 1 with
    probability q.  Pays 2 per action-1 recommendation and charges
    (1-q)/(1-q/2) per action-0 recommendation, so sender utility is
    3/2 - q and the budget nets to zero exactly at q = 1/2.
    """
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    distribution = (
        (F(1), F(0)),
        (F(1) - q, q),
    )
    payments = (-(F(1) - q), q)
    return SignalingScheme(distribution=distribution, payments=payments)


def zero_sum_single_receiver_multi() -> MultiAgentInstance:
    """The zero-sum two-state instance recast with one binary receiver.

    Playing 1 stands in for action 1, so subset payoffs are read off the
    two-action tables.  Useful for checking that the multi-receiver
    pipeline agrees with the single-receiver one.
    """
    base = zero_sum_two_state_instance()
    states = []
    for state in base.states:
        states.append(
            MultiState(
                prob=state.prob,
                sender=(state.sender[0], state.sender[1]),
                receivers=((state.receiver[0], state.receiver[1]),),
            )
        )
    return MultiAgentInstance(
        receivers=1,
        states=tuple(states),
        default_model=PaymentModel.BUDGET_BALANCED,
    )


EXAMPLES = {
    "sec4_1": two_action_type_instance,
    "sec4_2": zero_sum_two_state_instance,
}


def get_example(name: str):
    try:
        builder = EXAMPLES[name]
    except KeyError:
        raise UnknownExample(
            f"unknown example {name!r}; available: {', '.join(sorted(EXAMPLES))}"
        ) from None
    return builder()
