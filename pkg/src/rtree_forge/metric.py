"""Finite metric spaces with exact rational distances."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Sequence

from ._rational import format_rational, parse_rational


class MalformedMetricError(ValueError):
    """The distance table is not even a candidate metric (shape, sign, type)."""


class UnknownPointError(KeyError):
    pass


@dataclass(frozen=True)
class Violation:
    axiom: str  # "zero_diagonal", "positivity", "symmetry" or "triangle"
    witness: tuple

    def to_dict(self) -> dict:
        return {"axiom": self.axiom, "witness": [str(w) for w in self.witness]}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {"valid": self.ok, "violations": [v.to_dict() for v in self.violations]}


class FiniteMetricSpace:
    """Points (any hashable ids) with a symmetric table of exact distances.

    Construction only checks structure; call :func:`validate_metric` to test
    the axioms.
    """

    def __init__(self, points: Sequence[Hashable], dist: Sequence[Sequence]):
        points = tuple(points)
        n = len(points)
        if len(set(points)) != n:
            raise MalformedMetricError("duplicate point ids")
        if len(dist) != n or any(len(row) != n for row in dist):
            raise MalformedMetricError(f"distance table must be {n}x{n}")
        table = []
        for row in dist:
            out = []
            for v in row:
                try:
                    q = parse_rational(v)
                except ValueError as exc:
                    raise MalformedMetricError(str(exc)) from exc
                if q < 0:
                    raise MalformedMetricError(f"negative distance {q}")
                out.append(q)
            table.append(tuple(out))
        self._points = points
        self._dist = tuple(table)
        self._index = {p: i for i, p in enumerate(points)}

    @property
    def points(self) -> tuple:
        return self._points

    @property
    def matrix(self) -> tuple[tuple[Fraction, ...], ...]:
        return self._dist

    def __len__(self) -> int:
        return len(self._points)

    def index(self, x) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise UnknownPointError(x) from None

    def d(self, x, y) -> Fraction:
        return self._dist[self.index(x)][self.index(y)]

    def di(self, i: int, j: int) -> Fraction:
        """Distance by position, skipping id lookups."""
        return self._dist[i][j]

    def subspace(self, ids: Sequence) -> FiniteMetricSpace:
        idx = [self.index(x) for x in ids]
        return FiniteMetricSpace([self._points[i] for i in idx],
                                 [[self._dist[i][j] for j in idx] for i in idx])

    def __eq__(self, other) -> bool:
        return (isinstance(other, FiniteMetricSpace)
                and self._points == other._points and self._dist == other._dist)

    def __hash__(self) -> int:
        return hash((self._points, self._dist))

    def __repr__(self) -> str:
        return f"FiniteMetricSpace({len(self)} points)"

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {"points": list(self._points),
                "dist": [[format_rational(q) for q in row] for row in self._dist]}

    @classmethod
    def from_dict(cls, data: dict) -> FiniteMetricSpace:
        if not isinstance(data, dict) or "points" not in data or "dist" not in data:
            raise MalformedMetricError('expected {"points": [...], "dist": [[...]]}')
        points, dist = data["points"], data["dist"]
        if not isinstance(points, list) or not isinstance(dist, list):
            raise MalformedMetricError("points and dist must be lists")
        if any(not isinstance(row, list) for row in dist):
            raise MalformedMetricError("dist rows must be lists")
        return cls(points, dist)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> FiniteMetricSpace:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class EpsilonNet:
    centers: tuple
    radius: Fraction
    assignment: dict = field(default_factory=dict, compare=False)


def validate_metric(M: FiniteMetricSpace) -> ValidationReport:
    """List every violated metric axiom with its witness.

    Triangle violations are reported as ``(x, z, y)`` meaning
    ``d(x, z) > d(x, y) + d(y, z)``, one entry per ``x < z`` (by position).
    """
    n = len(M)
    P, D = M.points, M.matrix
    out: list[Violation] = []
    for i in range(n):
        if D[i][i] != 0:
            out.append(Violation("zero_diagonal", (P[i],)))
    for i in range(n):
        for j in range(i + 1, n):
            if D[i][j] != D[j][i]:
                out.append(Violation("symmetry", (P[i], P[j])))
            if D[i][j] == 0 or D[j][i] == 0:
                out.append(Violation("positivity", (P[i], P[j])))
    for i in range(n):
        for k in range(i + 1, n):
            dik = D[i][k]
            for j in range(n):
                if j != i and j != k and dik > D[i][j] + D[j][k]:
                    out.append(Violation("triangle", (P[i], P[k], P[j])))
    return ValidationReport(tuple(out))


def metric_segment(M: FiniteMetricSpace, x, y) -> frozenset:
    """All z with d(x, z) + d(z, y) == d(x, y)."""
    i, j = M.index(x), M.index(y)
    D = M.matrix
    dxy = D[i][j]
    return frozenset(M.points[k] for k in range(len(M)) if D[i][k] + D[k][j] == dxy)


def diameter(M: FiniteMetricSpace) -> Fraction:
    if len(M) == 0:
        raise ValueError("diameter of an empty space")
    D = M.matrix
    return max((D[i][j] for i in range(len(M)) for j in range(i, len(M))), default=Fraction(0))


def greedy_epsilon_net(M: FiniteMetricSpace, eps) -> EpsilonNet:
    """Farthest-point net from the first point; ties go to the lower index.

    Stops as soon as every point is within ``eps`` of a center, so the centers
    are pairwise more than ``eps`` apart.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = len(M)
    if n == 0:
        raise ValueError("epsilon net of an empty space")
    D = M.matrix
    centers = [0]
    near = [D[0][k] for k in range(n)]
    owner = [0] * n
    while True:
        far = max(range(n), key=lambda k: (near[k], -k))
        if near[far] <= eps:
            break
        centers.append(far)
        for k in range(n):
            if D[far][k] < near[k]:
                near[k] = D[far][k]
                owner[k] = far
    P = M.points
    return EpsilonNet(tuple(P[c] for c in centers), eps,
                      {P[k]: P[owner[k]] for k in range(n)})
