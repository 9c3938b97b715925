"""The R-tree of a weighted tree: exact metric, geodesics, completion points.

Node ``t`` of weight ``w_t`` becomes the half-open edge ``{t} x (0, w_t]``
hanging below its parent's top point ``(parent, w_parent)``; the root is the
single point ``(root, 0)``. Heights ``H(t)`` (total weight of the down-set of
``t``) are cached, and the distance is ``h(p) + h(q) - 2 h(p ^ q)``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence, Union

from ._rational import format_rational, parse_rational
from .wtree import WeightedTree, precompact_certificate


class PointError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class RTreePoint:
    node: int
    offset: Fraction

    def to_dict(self) -> dict:
        return {"node": self.node, "offset": format_rational(self.offset)}

    @classmethod
    def from_dict(cls, data: dict) -> RTreePoint:
        try:
            return cls(int(data["node"]), parse_rational(data["offset"]))
        except (KeyError, TypeError) as exc:
            raise PointError(f'point needs "node" and "offset": {data!r}') from exc

    def __repr__(self) -> str:
        return f"({self.node}, {self.offset})"


@dataclass(frozen=True)
class IdealPoint:
    """An infinite branch: a stored prefix plus a summable continuation.

    ``tail_weight`` is the total weight beyond the last prefix node;
    continuations with different ``tail_id`` part ways right after the prefix.
    """

    prefix: tuple[int, ...]
    tail_weight: Fraction
    tail_id: str = ""

    def to_dict(self) -> dict:
        return {"prefix": list(self.prefix), "tail_weight": format_rational(self.tail_weight),
                "tail_id": self.tail_id}

    @classmethod
    def from_dict(cls, data: dict) -> IdealPoint:
        return cls(tuple(int(t) for t in data["prefix"]), parse_rational(data["tail_weight"]),
                   str(data.get("tail_id", "")))


AnyPoint = Union[RTreePoint, IdealPoint]


class Infeasible(NamedTuple):
    """A ball family with ``d(x_i, x_j) > r_i + r_j``."""

    i: int
    j: int
    distance: Fraction
    radius_sum: Fraction


class RTreeSpace:
    """Immutable view of ``T_w`` for a :class:`WeightedTree`."""

    def __init__(self, tree: WeightedTree):
        self.tree = tree
        H = [Fraction(0)] * len(tree)
        for t in tree.bfs_order():
            p = tree.parents[t]
            if p is not None:
                H[t] = H[p] + tree.weights[t]
        self._H = tuple(H)
        self._w = tree.weights
        self._par = tree.parents
        self._depth = tuple(tree.depth(t) for t in tree.nodes)
        self.root_point = RTreePoint(tree.root, Fraction(0))

    def node_height(self, t: int) -> Fraction:
        return self._H[t]

    @property
    def node_heights(self) -> tuple[Fraction, ...]:
        return self._H

    def point(self, node: int, offset) -> RTreePoint:
        p = RTreePoint(node, Fraction(offset))
        self.check(p)
        return p

    def top(self, node: int) -> RTreePoint:
        """The child endpoint ``(node, w_node)`` of an edge."""
        return self.point(node, self._w[node])

    def check(self, p: RTreePoint) -> RTreePoint:
        if not isinstance(p, RTreePoint):
            raise PointError(f"not an R-tree point: {p!r}")
        if not (isinstance(p.node, int) and 0 <= p.node < len(self._w)):
            raise PointError(f"unknown node {p.node!r}")
        if self._par[p.node] is None:
            if p.offset != 0:
                raise PointError("the root carries offset 0 only")
        elif not 0 < p.offset <= self._w[p.node]:
            raise PointError(f"offset {p.offset} outside (0, {self._w[p.node]}] for node {p.node}")
        return p

    def contains(self, p) -> bool:
        try:
            self.check(p)
        except PointError:
            return False
        return True

    # -- order and metric ----------------------------------------------------

    def height(self, p: RTreePoint) -> Fraction:
        self.check(p)
        return self._H[p.node] - self._w[p.node] + p.offset

    def _node_meet(self, s: int, t: int) -> int:
        P, D = self._par, self._depth
        while D[s] > D[t]:
            s = P[s]
        while D[t] > D[s]:
            t = P[t]
        while s != t:
            s, t = P[s], P[t]
        return s

    def lex_meet(self, p: RTreePoint, q: RTreePoint) -> RTreePoint:
        """Largest common lower bound in the lexicographic order."""
        self.check(p)
        self.check(q)
        if p.node == q.node:
            return p if p.offset <= q.offset else q
        m = self._node_meet(p.node, q.node)
        if m == p.node:
            return p
        if m == q.node:
            return q
        return RTreePoint(m, self._w[m])

    def distance(self, p: RTreePoint, q: RTreePoint) -> Fraction:
        self.check(p)
        self.check(q)
        H, w = self._H, self._w
        hp = H[p.node] - w[p.node] + p.offset
        hq = H[q.node] - w[q.node] + q.offset
        if p.node == q.node:
            return abs(hp - hq)
        m = self._node_meet(p.node, q.node)
        if m == p.node:
            return hq - hp
        if m == q.node:
            return hp - hq
        return hp + hq - 2 * H[m]

    def at_height(self, node: int, h) -> RTreePoint:
        """Point at height ``h`` on the path from the root to ``(node, w_node)``."""
        h = Fraction(h)
        if h < 0 or h > self._H[node]:
            raise PointError(f"height {h} not on the root path of node {node}")
        if h == 0:
            return self.root_point
        u = node
        while self._H[u] - self._w[u] >= h:
            u = self._par[u]
        return RTreePoint(u, h - self._H[u] + self._w[u])

    # -- completion ------------------------------------------------------------

    def check_ideal(self, b: IdealPoint) -> IdealPoint:
        pre = b.prefix
        if not pre or pre[0] != self.tree.root:
            raise PointError("ideal prefix must start at the root")
        for a, c in zip(pre, pre[1:]):
            if not (0 <= c < len(self._w)) or self._par[c] != a:
                raise PointError("ideal prefix is not a parent/child chain")
        if b.tail_weight < 0:
            raise PointError("negative tail weight")
        return b

    def branch_weight(self, b: IdealPoint) -> Fraction:
        return self._H[b.prefix[-1]] + b.tail_weight

    def truncation(self, b: IdealPoint, k: int) -> RTreePoint:
        """Top point of the depth-``k`` node of the branch's prefix."""
        self.check_ideal(b)
        return self.top(b.prefix[k])

    def tail_after(self, b: IdealPoint, k: int) -> Fraction:
        """Weight of the branch strictly beyond its depth-``k`` node."""
        return self.branch_weight(b) - self._H[b.prefix[k]]

    def completion_distance(self, x: AnyPoint, y: AnyPoint) -> Fraction:
        if isinstance(x, RTreePoint) and isinstance(y, RTreePoint):
            return self.distance(x, y)
        if isinstance(x, IdealPoint) and isinstance(y, RTreePoint):
            x, y = y, x
        if isinstance(x, RTreePoint):
            b = self.check_ideal(y)
            hx = self.height(x)
            if x.node in b.prefix:
                return self.branch_weight(b) - hx
            on = set(b.prefix)
            m = x.node
            while m not in on:
                m = self._par[m]
            return hx + self.branch_weight(b) - 2 * self._H[m]
        a, b = self.check_ideal(x), self.check_ideal(y)
        if a.prefix == b.prefix and a.tail_id == b.tail_id:
            if a.tail_weight != b.tail_weight:
                raise PointError("same branch label with different tail weights")
            return Fraction(0)
        k = 0
        while k < min(len(a.prefix), len(b.prefix)) and a.prefix[k] == b.prefix[k]:
            k += 1
        split = self._H[a.prefix[k - 1]]
        return self.branch_weight(a) + self.branch_weight(b) - 2 * split

    # -- geodesics -------------------------------------------------------------

    def geodesic(self, p: RTreePoint, q: RTreePoint) -> Geodesic:
        return Geodesic(self, p, q)

    def segment_intersection_point(self, x: RTreePoint, y: RTreePoint, z: RTreePoint) -> RTreePoint:
        """The ``u`` with ``[x, y] & [x, z] == [x, u]``."""
        d = self.distance
        s = (d(x, y) + d(x, z) - d(y, z)) / 2
        return self.geodesic(x, y)(s)

    def four_point_defect(self, p, q, r, s) -> Fraction:
        d = self.distance
        return d(p, q) + d(r, s) - max(d(p, r) + d(q, s), d(p, s) + d(q, r))

    # -- nets and balls ----------------------------------------------------------

    def epsilon_net_points(self, eps) -> list[RTreePoint]:
        """Finite ``eps``-net built from a precompactness certificate.

        Every edge of the certificate is cut at ``w_t, w_t - eps, ...`` down to
        its parent; points off the certificate are covered by the top point
        of their deepest certified ancestor.
        """
        eps = Fraction(eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        F = precompact_certificate(self.tree, eps)
        net = [self.root_point]
        for t in sorted(F):
            if t == self.tree.root:
                continue
            off = self._w[t]
            while off > 0:
                net.append(RTreePoint(t, off))
                off -= eps
        return net

    def hyperconvex_witness(self, centers: Sequence[RTreePoint], radii: Sequence) -> RTreePoint | Infeasible:
        """Common point of the closed balls ``B[x_i, r_i]``, or the failing pair.

        The excess ``max_i d(z, x_i) - r_i`` is convex and piecewise linear
        along the subtree spanned by the centers, with kinks only at centers,
        branch points and pairwise balance points, so those candidates contain
        a minimizer. The lexicographically least minimizer is returned.
        """
        if len(centers) != len(radii):
            raise ValueError("centers and radii differ in length")
        if not centers:
            raise ValueError("need at least one ball")
        radii = [Fraction(r) for r in radii]
        if any(r < 0 for r in radii):
            raise ValueError("negative radius")
        for c in centers:
            self.check(c)
        n = len(centers)
        d = self.distance
        dist = [[d(centers[i], centers[j]) for j in range(n)] for i in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                if dist[i][j] > radii[i] + radii[j]:
                    return Infeasible(i, j, dist[i][j], radii[i] + radii[j])
        cands = set(centers)
        for i in range(n):
            for j in range(i + 1, n):
                s = (dist[i][j] + radii[i] - radii[j]) / 2
                s = min(max(s, Fraction(0)), dist[i][j])
                cands.add(self.geodesic(centers[i], centers[j])(s))
                for k in range(j + 1, n):
                    cands.add(self.segment_intersection_point(centers[i], centers[j], centers[k]))

        def excess(z):
            return max(d(z, c) - r for c, r in zip(centers, radii))

        return min(cands, key=lambda z: (excess(z), z.node, z.offset))

    # -- rendering -------------------------------------------------------------

    def to_dot(self, labels: Sequence[str] | None = None, name: str = "T") -> str:
        return tree_to_dot(self.tree, labels, name)


class Geodesic:
    """Arc-length path from ``p`` up to ``p ^ q`` and down to ``q``."""

    def __init__(self, space: RTreeSpace, p: RTreePoint, q: RTreePoint):
        self.space = space
        self.start, self.end = space.check(p), space.check(q)
        self.meet = space.lex_meet(p, q)
        self._hp, self._hq = space.height(p), space.height(q)
        self._hm = space.height(self.meet)
        self.ascent = self._hp - self._hm
        self.length = self.ascent + self._hq - self._hm

    def __call__(self, t) -> RTreePoint:
        t = Fraction(t)
        if t < 0 or t > self.length:
            raise ValueError(f"time {t} outside [0, {self.length}]")
        if t == 0:
            return self.start
        if t == self.length:
            return self.end
        if t <= self.ascent:
            return self.space.at_height(self.start.node, self._hp - t)
        return self.space.at_height(self.end.node, self._hm + (t - self.ascent))


def height(S: RTreeSpace, p: RTreePoint) -> Fraction:
    return S.height(p)


def lex_meet(S: RTreeSpace, p: RTreePoint, q: RTreePoint) -> RTreePoint:
    return S.lex_meet(p, q)


def distance(S: RTreeSpace, p: RTreePoint, q: RTreePoint) -> Fraction:
    return S.distance(p, q)


def completion_distance(S: RTreeSpace, x: AnyPoint, y: AnyPoint) -> Fraction:
    return S.completion_distance(x, y)


def geodesic(S: RTreeSpace, p: RTreePoint, q: RTreePoint) -> Geodesic:
    return S.geodesic(p, q)


def segment_intersection_point(S: RTreeSpace, x, y, z) -> RTreePoint:
    return S.segment_intersection_point(x, y, z)


def epsilon_net_points(S: RTreeSpace, eps) -> list[RTreePoint]:
    return S.epsilon_net_points(eps)


def four_point_defect(S: RTreeSpace, p, q, r, s) -> Fraction:
    return S.four_point_defect(p, q, r, s)


def hyperconvex_witness(S: RTreeSpace, centers, radii) -> RTreePoint | Infeasible:
    return S.hyperconvex_witness(centers, radii)


def tree_to_dot(tree: WeightedTree, labels: Sequence[str] | None = None, name: str = "T") -> str:
    """Graphviz source with one edge per non-root node, labelled by its weight."""
    lines = [f"digraph {name} {{", "  node [shape=circle];"]
    for t in tree.nodes:
        text = labels[t] if labels is not None else str(t)
        lines.append(f'  n{t} [label="{_dot_escape(text)}"];')
    for t in tree.nodes:
        p = tree.parents[t]
        if p is not None:
            lines.append(f'  n{p} -> n{t} [label="{format_rational(tree.weights[t])}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


# -- sampling helpers --------------------------------------------------------------

GRID = 1 << 16


def random_point(S: RTreeSpace, rng: random.Random, grid: int = GRID) -> RTreePoint:
    """Uniform node, then a uniform offset on a ``1/grid`` lattice of its edge."""
    t = rng.randrange(len(S.tree))
    if S.tree.parents[t] is None:
        return S.root_point
    return RTreePoint(t, S.tree.weights[t] * Fraction(rng.randint(1, grid), grid))


def random_weighted_tree(rng: random.Random, n_nodes: int, max_weight=10, denominator: int = 100) -> WeightedTree:
    """Random recursive tree with weights in ``(0, max_weight]`` on a ``1/denominator`` grid."""
    if n_nodes < 1:
        raise ValueError("need at least one node")
    top = int(Fraction(max_weight) * denominator)
    parent: list[int | None] = [None] + [rng.randrange(t) for t in range(1, n_nodes)]
    weight = [Fraction(0)] + [Fraction(rng.randint(1, top), denominator) for _ in range(1, n_nodes)]
    return WeightedTree(parent, weight)
