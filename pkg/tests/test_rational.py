from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rtree_forge._rational import (
    ceil_log2,
    exact_sqrt,
    format_rational,
    parse_rational,
    rational_upper_bound,
    sqrt_length,
)


@pytest.mark.parametrize("text,value", [("3/2", Fraction(3, 2)), (" -1/4 ", Fraction(-1, 4)),
                                        ("0.125", Fraction(1, 8)), (7, Fraction(7)), ("2", Fraction(2))])
def test_parse(text, value):
    assert parse_rational(text) == value


@pytest.mark.parametrize("bad", ["", "1/0", "a", True, 0.5, None, [1]])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        parse_rational(bad)


@given(st.fractions())
def test_format_round_trip(q):
    assert parse_rational(format_rational(q)) == q


def test_square_roots():
    assert exact_sqrt(Fraction(9, 4)) == Fraction(3, 2)
    assert exact_sqrt(Fraction(2)) is None
    assert sqrt_length(Fraction(2)) == math.sqrt(2)


@given(st.floats(min_value=0, max_value=1e6, allow_nan=False))
def test_upper_bound_dominates(x):
    ub = rational_upper_bound(x)
    assert ub >= Fraction(x)
    assert ub - Fraction(x) <= Fraction(1, 2 ** 39) + Fraction(8 * math.ulp(x))


def test_ceil_log2():
    assert [ceil_log2(q) for q in (Fraction(1, 2), 1, 2, 3, 16, 17)] == [0, 0, 1, 2, 4, 5]
