"""Helpers for exact rational values at the API boundary.

Everything numeric in this package is a `fractions.Fraction`. Floats are
rejected on input: a float that looks like 1.5 is fine, one that looks like
0.1 silently is not, and the difference is invisible at the call site.
Strings are accepted in either fraction ("3/2") or decimal ("1.5") notation,
both of which convert exactly.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ParameterError

RationalLike = Fraction | int | str


def to_fraction(value: RationalLike, what: str = "value") -> Fraction:
    """Convert an int, Fraction, or exact string to a Fraction."""
    if isinstance(value, bool):
        raise ParameterError(f"{what} must be a rational number, got a bool")
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, float):
        raise ParameterError(
            f"{what} given as float; pass an int, Fraction, or exact string "
            "such as '3/2' or '1.5'"
        )
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParameterError(f"{what} is not a valid rational: {value!r}") from exc
    raise ParameterError(f"{what} has unsupported type {type(value).__name__}")


def frac_str(value: Fraction) -> str:
    """Render exactly, 'p/q' or plain integer."""
    return str(value)


def frac_json(value: Fraction) -> dict:
    """JSON-friendly view: exact string plus a decimal convenience field."""
    return {"exact": frac_str(value), "approx": float(value)}
