"""Exact rational helpers shared by every module.

Lengths in the plane are square roots of rationals. They are carried as a
``Fraction`` when the root happens to be rational and as a ``float``
otherwise; Python's mixed arithmetic then degrades to ``float`` on its own.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Union

Real = Union[Fraction, float]


class RationalParseError(ValueError):
    """A value could not be read as an exact rational."""


def parse_rational(value) -> Fraction:
    """Read ``"p/q"`` strings, decimal strings and integers exactly.

    JSON floats are refused: they have already lost whatever exact value the
    author meant.
    """
    if isinstance(value, bool):
        raise RationalParseError(f"not a rational: {value!r}")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise RationalParseError(f"not a rational: {value!r}") from exc
    raise RationalParseError(f"not a rational: {value!r} (use a \"p/q\" string)")


def format_rational(q: Fraction) -> str:
    return str(Fraction(q))


def format_real(x: Real):
    if isinstance(x, Fraction):
        return format_rational(x)
    return float(x)


def parse_real(value) -> Real:
    if isinstance(value, float):
        return value
    return parse_rational(value)


def exact_sqrt(q: Fraction) -> Fraction | None:
    """Square root of a nonnegative rational when it is itself rational."""
    if q < 0:
        raise ValueError("square root of a negative number")
    num, den = q.numerator, q.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


def sqrt_length(q: Fraction) -> Real:
    r = exact_sqrt(q)
    if r is not None:
        return r
    return math.sqrt(float(q))


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def rational_upper_bound(x: Real, grid_bits: int = 40) -> Fraction:
    """Smallest multiple of ``2**-grid_bits`` that is >= x (exact inputs pass through).

    Float inputs are first padded by a few ulps so the result really bounds the
    value the float approximates.
    """
    if is_exact(x):
        return Fraction(x)
    padded = x + 4 * math.ulp(x) if x != 0 else 0.0
    scale = 1 << grid_bits
    return Fraction(math.ceil(Fraction(padded) * scale), scale)


def ceil_log2(q: Fraction) -> int:
    """Smallest integer n >= 0 with 2**n >= q."""
    q = Fraction(q)
    n = 0
    while Fraction(2) ** n < q:
        n += 1
    return n
