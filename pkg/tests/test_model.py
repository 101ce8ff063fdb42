"""Domain model tests: parsing, validation, scheme arithmetic, generators."""

import random
from dataclasses import FrozenInstanceError
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from persuade import model
from persuade.errors import InconsistentPayments, MalformedRational
from persuade.model import (
    ActionType,
    PersuasionInstance,
    SignalingScheme,
    State,
    TypedInstance,
)
from persuade.rationals import format_rational, parse_rational


def two_state_instance():
    return PersuasionInstance(
        actions=2,
        states=(
            State(prob=F(1, 2), sender=(F(1), F(0)), receiver=(F(2), F(0))),
            State(prob=F(1, 2), sender=(F(0), F(1)), receiver=(F(0), F(3))),
        ),
    )


def test_parse_rational_forms():
    assert parse_rational("3/4") == F(3, 4)
    assert parse_rational("-1/16") == F(-1, 16)
    assert parse_rational("0.25") == F(1, 4)
    assert parse_rational(7) == F(7)
    assert format_rational(F(3, 4)) == "3/4"
    assert format_rational(F(-2)) == "-2"


@pytest.mark.parametrize("bad", ["1/0", "abc", 0.25, None, True])
def test_parse_rational_rejects(bad):
    with pytest.raises(MalformedRational):
        parse_rational(bad)


def test_validate_catches_everything_at_once():
    inst = PersuasionInstance(
        actions=2,
        states=(
            State(prob=F(-1, 4), sender=(F(1),), receiver=(F(0), F(1))),
            State(prob=F(1, 2), sender=(F(1), F(0)), receiver=(F(0), F(1))),
        ),
    )
    codes = sorted(issue.code for issue in model.validate(inst))
    assert codes == [
        "DimensionMismatch",
        "NegativeProbability",
        "ProbabilityNotNormalized",
    ]


def test_validate_ok():
    assert model.validate(two_state_instance()) == ()


def test_instances_are_immutable():
    inst = two_state_instance()
    with pytest.raises(FrozenInstanceError):
        inst.actions = 3


def test_expand_typed_iid():
    typed = TypedInstance(
        actions=2,
        types=(
            ActionType(sender=F(1), receiver=F(0)),
            ActionType(sender=F(0), receiver=F(1)),
        ),
        iid_marginal=(F(1, 3), F(2, 3)),
    )
    inst = model.expand_typed(typed)
    assert inst.num_states == 4
    assert sum(s.prob for s in inst.states) == 1
    # Lexicographic profile order: (0,0), (0,1), (1,0), (1,1).
    assert inst.states[1].prob == F(2, 9)
    assert inst.states[1].sender == (F(1), F(0))
    assert inst.states[1].receiver == (F(0), F(1))


def test_expand_typed_joint():
    typed = TypedInstance(
        actions=2,
        types=(
            ActionType(sender=F(2), receiver=F(0)),
            ActionType(sender=F(0), receiver=F(2)),
        ),
        joint=(((0, 1), F(1, 2)), ((1, 0), F(1, 2))),
    )
    inst = model.expand_typed(typed)
    assert inst.num_states == 2
    assert inst.states[0].sender == (F(2), F(0))
    assert model.is_symmetric(inst)


def test_symmetry_detection():
    assert model.is_symmetric(
        model.random_instance(3, actions=3, symmetric=True, types=2)
    )
    assert model.is_symmetric(
        model.random_instance(4, actions=3, symmetric=True, types=2, joint=True)
    )
    # Distinct roles for the two actions: not symmetric.
    asym = PersuasionInstance(
        actions=2,
        states=(
            State(prob=F(1), sender=(F(1), F(0)), receiver=(F(0), F(1))),
        ),
    )
    assert not model.is_symmetric(asym)
    # Same profiles with permutation-invariant mass: symmetric.
    sym = PersuasionInstance(
        actions=2,
        states=(
            State(prob=F(1, 2), sender=(F(1), F(0)), receiver=(F(0), F(1))),
            State(prob=F(1, 2), sender=(F(0), F(1)), receiver=(F(1), F(0))),
        ),
    )
    assert model.is_symmetric(sym)


def test_cross_utility_and_thresholds():
    inst = two_state_instance()
    follow = ((F(1), F(0)), (F(0), F(1)))
    x = model.cross_utility(inst, follow)
    assert x.entry(0, 0) == F(1)
    assert x.entry(0, 1) == F(0)
    assert x.entry(1, 1) == F(3, 2)
    assert x.entry(1, 0) == F(0)
    assert model.payment_thresholds(inst, follow) == (F(-1), F(-3, 2))

    against = ((F(0), F(1)), (F(1), F(0)))
    assert model.payment_thresholds(inst, against) == (F(3, 2), F(1))
    scheme = SignalingScheme(distribution=against, payments=(F(0), F(0)))
    assert model.persuasiveness_slack(inst, scheme) == F(3, 2)
    assert not model.is_persuasive(inst, scheme)
    paid = SignalingScheme(distribution=against, payments=(F(3, 2), F(1)))
    assert model.is_persuasive(inst, paid)
    assert model.persuasiveness_slack(inst, paid) == F(0)
    assert model.sender_utility(inst, paid) == F(0) - F(5, 2)
    assert model.per_recommendation_payments(inst, paid) == (F(3), F(2))


def test_sender_and_receiver_utility():
    inst = two_state_instance()
    follow = ((F(1), F(0)), (F(0), F(1)))
    scheme = SignalingScheme(distribution=follow, payments=(F(0), F(0)))
    assert model.sender_utility(inst, scheme) == F(1)
    assert model.receiver_utility(inst, scheme) == F(5, 2)
    paid = SignalingScheme(distribution=follow, payments=(F(1, 4), F(0)))
    assert model.sender_utility(inst, paid) == F(3, 4)
    assert model.receiver_utility(inst, paid) == F(11, 4)


def test_single_action_instance_always_persuasive():
    inst = PersuasionInstance(
        actions=1,
        states=(State(prob=F(1), sender=(F(2),), receiver=(F(-1),)),),
    )
    scheme = SignalingScheme(distribution=((F(1),),), payments=(F(0),))
    assert model.payment_thresholds(inst, scheme.distribution) == (F(0),)
    assert model.is_persuasive(inst, scheme)
    assert model.persuasiveness_slack(inst, scheme) == F(0)


def test_zero_probability_recommendation_payment():
    inst = two_state_instance()
    only_zero = ((F(1), F(0)), (F(1), F(0)))
    ok = SignalingScheme(distribution=only_zero, payments=(F(1), F(0)))
    assert model.per_recommendation_payments(inst, ok) == (F(1), F(0))
    bad = SignalingScheme(distribution=only_zero, payments=(F(0), F(1)))
    with pytest.raises(InconsistentPayments):
        model.per_recommendation_payments(inst, bad)


def _random_distribution(rng, inst):
    rows = []
    for _ in range(inst.num_states):
        weights = [rng.randint(0, 3) for _ in range(inst.actions)]
        if sum(weights) == 0:
            weights[rng.randrange(inst.actions)] = 1
        total = sum(weights)
        rows.append(tuple(F(w, total) for w in weights))
    return tuple(rows)


def _brute_force_persuasive(inst, scheme):
    # Check every follow constraint directly from the definition.
    for i in range(inst.actions):
        follow = sum(
            (
                s.prob * d[i] * s.receiver[i]
                for s, d in zip(inst.states, scheme.distribution)
            ),
            F(0),
        )
        for j in range(inst.actions):
            if j == i:
                continue
            deviate = sum(
                (
                    s.prob * d[i] * s.receiver[j]
                    for s, d in zip(inst.states, scheme.distribution)
                ),
                F(0),
            )
            if follow + scheme.payments[i] < deviate:
                return False
    return True


def test_persuasive_iff_payments_cover_thresholds():
    # With a single action there are no deviation constraints and every
    # payment vector is persuasive, so the iff needs n >= 2.
    rng = random.Random(11)
    for _ in range(120):
        inst = model.random_instance(
            rng.randrange(10**6),
            actions=rng.randint(2, 3),
            states=rng.randint(1, 4),
        )
        dist = _random_distribution(rng, inst)
        payments = tuple(
            F(rng.randint(-4, 4), rng.choice((1, 2))) for _ in range(inst.actions)
        )
        scheme = SignalingScheme(distribution=dist, payments=payments)
        thresholds = model.payment_thresholds(inst, dist)
        covered = all(
            payments[i] >= thresholds[i] for i in range(inst.actions)
        )
        assert model.is_persuasive(inst, scheme) == covered
        assert _brute_force_persuasive(inst, scheme) == covered


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_threshold_payments_are_exactly_tight(data):
    seed = data.draw(st.integers(0, 10**6))
    actions = data.draw(st.integers(2, 3))
    states = data.draw(st.integers(1, 4))
    inst = model.random_instance(seed, actions=actions, states=states)
    rng = random.Random(seed + 1)
    dist = _random_distribution(rng, inst)
    thresholds = model.payment_thresholds(inst, dist)
    tight = SignalingScheme(distribution=dist, payments=thresholds)
    assert model.is_persuasive(inst, tight)
    assert model.persuasiveness_slack(inst, tight) == 0
    eps = F(1, 97)
    for i in range(inst.actions):
        lowered = list(thresholds)
        lowered[i] -= eps
        assert not model.is_persuasive(
            inst, SignalingScheme(distribution=dist, payments=tuple(lowered))
        )


def test_payments_cancel_in_welfare():
    # Payments transfer utility: sender + receiver total is payment-free.
    rng = random.Random(5)
    for _ in range(40):
        inst = model.random_instance(
            rng.randrange(10**6), actions=rng.randint(1, 3), states=rng.randint(1, 4)
        )
        dist = _random_distribution(rng, inst)
        payments = tuple(
            F(rng.randint(-3, 3), rng.choice((1, 2))) for _ in range(inst.actions)
        )
        with_pay = SignalingScheme(distribution=dist, payments=payments)
        without = SignalingScheme(
            distribution=dist, payments=(F(0),) * inst.actions
        )
        assert model.sender_utility(inst, with_pay) + model.receiver_utility(
            inst, with_pay
        ) == model.sender_utility(inst, without) + model.receiver_utility(
            inst, without
        )


def test_random_instance_validity_and_flags():
    for seed in range(20):
        inst = model.random_instance(seed, actions=3, states=5)
        assert model.validate(inst) == ()
        sym = model.random_instance(seed, actions=2, symmetric=True, types=3)
        assert model.validate(sym) == ()
        assert model.is_symmetric(sym)
        symj = model.random_instance(
            seed, actions=3, symmetric=True, types=2, joint=True
        )
        assert model.validate(symj) == ()
        assert model.is_symmetric(symj)


def test_random_instance_deterministic():
    a = model.random_instance(99, actions=3, states=4)
    b = model.random_instance(99, actions=3, states=4)
    assert a == b
    c = model.random_multi_instance(99, receivers=2, states=3)
    d = model.random_multi_instance(99, receivers=2, states=3)
    assert c == d


def test_random_multi_instance_flags():
    for seed in range(15):
        inst = model.random_multi_instance(
            seed,
            receivers=3,
            states=3,
            positive_externalities=True,
            monotone_sender=True,
        )
        assert model.validate(inst) == ()
        n = inst.receivers
        for state in inst.states:
            # Sender payoff non-decreasing along subset inclusion.
            for mask in range(1 << n):
                for i in range(n):
                    if mask >> i & 1:
                        assert state.sender[mask] >= state.sender[mask & ~(1 << i)]
            # Switching gain non-decreasing in the other 1-players.
            for i in range(n):
                table = state.receivers[i]
                for mask in range(1 << n):
                    if not mask >> i & 1:
                        continue
                    gain = table[mask] - table[mask & ~(1 << i)]
                    for j in range(n):
                        if j != i and mask >> j & 1:
                            smaller = mask & ~(1 << j)
                            smaller_gain = (
                                table[smaller] - table[smaller & ~(1 << i)]
                            )
                            assert gain >= smaller_gain
