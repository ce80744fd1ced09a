"""Exact rational helpers: coercion and the "p/q" string encoding.

All time points, measures and probabilities in this package are
`fractions.Fraction` values; floats appear only inside exponentials.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil

from .errors import SpecParseError

FractionLike = Fraction | int | str


def to_frac(x: FractionLike) -> Fraction:
    """Coerce ints, "p/q" / decimal strings, or Fractions to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecParseError(f"not a rational: {x!r}") from exc
    raise TypeError(f"cannot interpret {type(x).__name__} as an exact rational")


def frac_str(x: Fraction) -> str:
    """Encode a Fraction as "p/q", or just "p" for integers."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def ceil_to_grid(x: float, denominator: int = 1 << 20) -> Fraction:
    """Smallest Fraction with the given denominator that is >= x + one grid step.

    The extra step absorbs the rounding error of the float input, so the
    result is a strict upper bound on the intended real value.
    """
    return Fraction(ceil(x * denominator) + 1, denominator)
