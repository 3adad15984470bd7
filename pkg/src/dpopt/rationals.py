"""Exact rational scalars: parsing and canonical rendering.

Every probability, loss and LP coefficient in this package is a
`fractions.Fraction`.  Floats are rejected at every boundary; values enter
as ints, Fractions or "p/q" strings and leave as "p/q" strings.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InputError

ZERO = Fraction(0)
ONE = Fraction(1)


def rat(value) -> Fraction:
    """Convert an int, Fraction or "p/q" string to an exact Fraction.

    Floats (and bools) are rejected: they are not exact rationals.
    """
    if isinstance(value, bool):
        raise InputError("booleans are not rational values")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise InputError(
            f"floats are not exact; pass an int or a 'p/q' string (got {value!r})"
        )
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot parse rational {value!r}: {exc}") from exc
    raise InputError(f"cannot interpret {type(value).__name__} as a rational")


def rat_str(value) -> str:
    """Render a rational canonically: "p" for integers, "p/q" otherwise."""
    f = rat(value)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def parse_alpha(value) -> Fraction:
    """Parse a privacy parameter and require 0 < alpha < 1."""
    alpha = rat(value)
    if not ZERO < alpha < ONE:
        raise InputError(f"privacy parameter must lie strictly in (0,1), got {rat_str(alpha)}")
    return alpha
