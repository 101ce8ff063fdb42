"""Exact rational parsing and formatting.

All arithmetic in the package is done on fractions.Fraction, which keeps
values in lowest terms with a positive denominator.  JSON carries numbers
as strings ("3/4", "-1/16", "0.25") or plain integers; binary floats are
rejected so no rounding can sneak in.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import MalformedRational


def parse_rational(value) -> Fraction:
    """Convert a JSON-level number into an exact Fraction.

    Accepts int, Fraction, or a string holding either a ratio "p/q" or a
    decimal literal.  Floats and anything unparsable raise
    MalformedRational.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise MalformedRational(f"boolean is not a number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise MalformedRational(
            f"floats are inexact, write the value as a string: {value!r}"
        )
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise MalformedRational(f"cannot parse rational from {value!r}") from exc
    raise MalformedRational(f"cannot parse rational from {value!r}")


def format_rational(value: Fraction) -> str:
    """Render a Fraction in the canonical "p/q" (or integer) string form."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def as_float_repr(value: Fraction) -> str:
    """Best-effort decimal rendering for display next to the exact form."""
    return f"{float(value):.12g}"
