from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import strategies as st

from rtree_forge.rtree import RTreePoint, RTreeSpace
from rtree_forge.wtree import WeightedTree


@st.composite
def weighted_trees(draw, max_nodes=12, max_weight=10, denominator=8):
    n = draw(st.integers(1, max_nodes))
    parent = [None] + [draw(st.integers(0, t - 1)) for t in range(1, n)]
    weight = [Fraction(0)] + [Fraction(draw(st.integers(1, max_weight * denominator)), denominator)
                              for _ in range(1, n)]
    return WeightedTree(parent, weight)


@st.composite
def tree_points(draw, S: RTreeSpace, grid=16):
    t = draw(st.integers(0, len(S.tree) - 1))
    if S.tree.parents[t] is None:
        return S.root_point
    return RTreePoint(t, S.tree.weights[t] * Fraction(draw(st.integers(1, grid)), grid))


@st.composite
def spaces_with_points(draw, k=2, max_nodes=10):
    S = RTreeSpace(draw(weighted_trees(max_nodes=max_nodes)))
    return (S, *[draw(tree_points(S)) for _ in range(k)])


# -- acceptance summary lines ------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    def _record(n: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[n] = (ok, detail)
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
