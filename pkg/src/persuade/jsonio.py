"""JSON serialization for instances and schemes.

Every number travels as a string in "p/q" or decimal form and is parsed
exactly; floats are rejected at the parsing layer so no binary rounding
can enter.  Instance documents carry a "kind" discriminator: "single"
for explicit single-receiver states, "single_typed" for per-action type
draws (iid marginal or explicit joint), and "multi" for binary-action
multi-receiver instances whose vectors are indexed by subset bitmask
with receiver 0 at the least significant bit.  Scheme documents mirror
the corresponding scheme dataclasses plus a sender_utility field and a
dual section, and round-trip losslessly.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Optional, Union

from .errors import ValidationFailed, ValidationIssue
from .model import (
    ActionType,
    MultiAgentInstance,
    MultiAgentScheme,
    MultiState,
    PaymentModel,
    PersuasionInstance,
    SignalingScheme,
    State,
    TypedInstance,
    ensure_valid,
)
from .rationals import format_rational, parse_rational

Instance = Union[PersuasionInstance, TypedInstance, MultiAgentInstance]
Scheme = Union[SignalingScheme, MultiAgentScheme]


def _fail(message: str) -> ValidationFailed:
    issue = ValidationIssue(
        code="MalformedDocument", location="document", message=message
    )
    return ValidationFailed([issue])


def _vector(values) -> tuple:
    return tuple(parse_rational(v) for v in values)


def _strings(values) -> list:
    return [format_rational(v) for v in values]


# ---------------------------------------------------------------------------
# Instances


def instance_to_json(instance: Instance) -> dict:
    """Serialize any instance kind into its JSON document."""
    if isinstance(instance, PersuasionInstance):
        return {
            "kind": "single",
            "actions": instance.actions,
            "payment_model": instance.default_model.value,
            "states": [
                {
                    "prob": format_rational(s.prob),
                    "sender": _strings(s.sender),
                    "receiver": _strings(s.receiver),
                }
                for s in instance.states
            ],
        }
    if isinstance(instance, TypedInstance):
        doc = {
            "kind": "single_typed",
            "actions": instance.actions,
            "payment_model": instance.default_model.value,
            "types": [
                {
                    "sender": format_rational(t.sender),
                    "receiver": format_rational(t.receiver),
                }
                for t in instance.types
            ],
        }
        if instance.iid_marginal is not None:
            doc["distribution"] = {"iid_marginal": _strings(instance.iid_marginal)}
        else:
            doc["distribution"] = {
                "joint": [
                    {"profile": list(profile), "prob": format_rational(prob)}
                    for profile, prob in instance.joint
                ]
            }
        return doc
    if isinstance(instance, MultiAgentInstance):
        return {
            "kind": "multi",
            "receivers": instance.receivers,
            "payment_model": instance.default_model.value,
            "states": [
                {
                    "prob": format_rational(s.prob),
                    "sender": _strings(s.sender),
                    "receivers": [_strings(table) for table in s.receivers],
                }
                for s in instance.states
            ],
        }
    raise TypeError(f"cannot serialize {type(instance).__name__}")


def _payment_model(data: dict) -> PaymentModel:
    name = data.get("payment_model", "zero")
    try:
        return PaymentModel.from_name(name)
    except ValueError as exc:
        raise _fail(str(exc)) from exc


def _require(data: dict, key: str):
    if key not in data:
        raise _fail(f"missing required field {key!r}")
    return data[key]


def instance_from_json(data: dict) -> Instance:
    """Parse and validate an instance document of any kind."""
    if not isinstance(data, dict):
        raise _fail("instance document must be a JSON object")
    kind = data.get("kind")
    if kind == "single":
        states = tuple(
            State(
                prob=parse_rational(_require(s, "prob")),
                sender=_vector(_require(s, "sender")),
                receiver=_vector(_require(s, "receiver")),
            )
            for s in _require(data, "states")
        )
        instance: Instance = PersuasionInstance(
            actions=_require(data, "actions"),
            states=states,
            default_model=_payment_model(data),
        )
    elif kind == "single_typed":
        types = tuple(
            ActionType(
                sender=parse_rational(_require(t, "sender")),
                receiver=parse_rational(_require(t, "receiver")),
            )
            for t in _require(data, "types")
        )
        dist = _require(data, "distribution")
        iid = dist.get("iid_marginal")
        joint = dist.get("joint")
        if (iid is None) == (joint is None):
            raise _fail(
                "distribution needs exactly one of iid_marginal or joint"
            )
        instance = TypedInstance(
            actions=_require(data, "actions"),
            types=types,
            iid_marginal=None if iid is None else _vector(iid),
            joint=None
            if joint is None
            else tuple(
                (tuple(row["profile"]), parse_rational(row["prob"]))
                for row in joint
            ),
            default_model=_payment_model(data),
        )
    elif kind == "multi":
        states = tuple(
            MultiState(
                prob=parse_rational(_require(s, "prob")),
                sender=_vector(_require(s, "sender")),
                receivers=tuple(
                    _vector(table) for table in _require(s, "receivers")
                ),
            )
            for s in _require(data, "states")
        )
        instance = MultiAgentInstance(
            receivers=_require(data, "receivers"),
            states=states,
            default_model=_payment_model(data),
        )
    else:
        raise _fail(f"unknown instance kind {kind!r}")
    return ensure_valid(instance)


# ---------------------------------------------------------------------------
# Schemes


def scheme_to_json(
    scheme: Scheme,
    *,
    sender_utility: Optional[Fraction] = None,
    dual: Optional[dict] = None,
    recovered_payments: Optional[dict] = None,
) -> dict:
    """Serialize a scheme plus its report metadata.

    dual is a pre-rendered section (strings already formatted), e.g.
    {"lambda": [[...]], "symmetric_lambda": "1/2"} or {"gamma_star": "2"}.
    """
    if isinstance(scheme, SignalingScheme):
        doc = {
            "kind": "single_scheme",
            "distribution": [_strings(row) for row in scheme.distribution],
            "payments": _strings(scheme.payments),
        }
    elif isinstance(scheme, MultiAgentScheme):
        doc = {
            "kind": "multi_scheme",
            "distribution": [_strings(row) for row in scheme.distribution],
            "q_one": _strings(scheme.q_one),
            "q_zero": _strings(scheme.q_zero),
        }
    else:
        raise TypeError(f"cannot serialize {type(scheme).__name__}")
    if sender_utility is not None:
        doc["sender_utility"] = format_rational(sender_utility)
    doc["dual"] = dual if dual is not None else {}
    if recovered_payments is not None:
        doc["recovered_payments"] = recovered_payments
    return doc


def scheme_from_json(data: dict) -> Scheme:
    """Reconstruct the scheme object from its document."""
    if not isinstance(data, dict):
        raise _fail("scheme document must be a JSON object")
    kind = data.get("kind")
    if kind == "single_scheme":
        return SignalingScheme(
            distribution=tuple(
                _vector(row) for row in _require(data, "distribution")
            ),
            payments=_vector(_require(data, "payments")),
        )
    if kind == "multi_scheme":
        return MultiAgentScheme(
            distribution=tuple(
                _vector(row) for row in _require(data, "distribution")
            ),
            q_one=_vector(_require(data, "q_one")),
            q_zero=_vector(_require(data, "q_zero")),
        )
    raise _fail(f"unknown scheme kind {kind!r}")


# ---------------------------------------------------------------------------
# File helpers


def load_instance(path: str) -> Instance:
    """Read, parse, and validate an instance file."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise _fail(f"{path} is not valid JSON: {exc}") from exc
    return instance_from_json(data)


def save_json(path: str, document: dict) -> None:
    """Write a document with stable formatting and a trailing newline."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=2, sort_keys=False)
        handle.write("\n")


def save_instance(path: str, instance: Instance) -> None:
    save_json(path, instance_to_json(instance))
