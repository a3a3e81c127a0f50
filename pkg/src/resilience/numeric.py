"""Number handling for the two numeric modes.

Rational mode keeps every probability as a ``fractions.Fraction``; float mode
uses plain floats and compares with ``FLOAT_TOL``.
"""

from __future__ import annotations

import os
from fractions import Fraction
from typing import Iterable, Union

Number = Union[Fraction, float, int]

FLOAT_TOL = 1e-9
DEFAULT_BUDGET = 10**6


def parse_number(text, mode="rational") -> Number:
    """Parse ``"1/3"``, ``"0.25"`` or ``"1"`` into a Fraction (or float)."""
    if isinstance(text, bool):
        raise ValueError(f"not a number: {text!r}")
    if isinstance(text, (int, Fraction)):
        value = Fraction(text)
    elif isinstance(text, float):
        value = Fraction(repr(text))
    elif isinstance(text, str):
        value = Fraction(text.strip())
    else:
        raise ValueError(f"not a number: {text!r}")
    return float(value) if mode == "float" else value


def fmt(value: Number) -> str:
    """Canonical text for a number: ``"2"``, ``"6/5"`` or a float repr."""
    if isinstance(value, float):
        return repr(value)
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def is_exact(values: Iterable[Number]) -> bool:
    return all(not isinstance(v, float) for v in values)


def tolerance(*values: Number) -> float:
    return 0 if is_exact(values) else FLOAT_TOL


def breaks(value: Number, threshold: Number, strict: bool) -> bool:
    """Does an adversary achieving ``value`` (probability of the violation
    event) break an objective whose violation threshold is ``threshold``?

    ``strict`` refers to the objective: ``P(phi) > q`` is violated as soon as
    ``P(not phi) >= 1-q``; ``P(phi) >= q`` needs ``P(not phi) > 1-q``.
    """
    tol = tolerance(value, threshold)
    if strict:
        return value >= threshold - tol
    return value > threshold + tol


def same(a: Number, b: Number) -> bool:
    tol = tolerance(a, b)
    return abs(a - b) <= tol


def budget_from_env(default: int = DEFAULT_BUDGET) -> int:
    raw = os.environ.get("RESIL_BUDGET")
    if raw:
        try:
            return int(raw)
        except ValueError:
            pass
    return default
