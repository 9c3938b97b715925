"""Rooted weighted trees: down-sets, meets, chains and precompactness certificates."""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Sequence

from ._rational import format_rational, parse_rational


class TreeError(ValueError):
    pass


class WeightedTree:
    """Finite rooted tree on nodes ``0..n-1`` with exact weights.

    The root is the only node of weight zero.

    >>> t = WeightedTree([None, 0, 0], [0, 2, 3])
    >>> t.meet(1, 2)
    0
    """

    def __init__(self, parent: Sequence[int | None], weight: Sequence):
        if len(parent) != len(weight):
            raise TreeError("parent and weight lists differ in length")
        n = len(parent)
        if n == 0:
            raise TreeError("a tree needs a root")
        par: list[int | None] = []
        for t, p in enumerate(parent):
            if p is not None and not (isinstance(p, int) and not isinstance(p, bool) and 0 <= p < n):
                raise TreeError(f"node {t} has invalid parent {p!r}")
            if p == t:
                raise TreeError(f"node {t} is its own parent")
            par.append(p)
        roots = [t for t, p in enumerate(par) if p is None]
        if len(roots) != 1:
            raise TreeError(f"expected exactly one root, found {len(roots)}")
        w = []
        for t, x in enumerate(weight):
            try:
                q = parse_rational(x)
            except ValueError as exc:
                raise TreeError(f"node {t}: {exc}") from exc
            if q < 0:
                raise TreeError(f"node {t} has negative weight")
            if (q == 0) != (par[t] is None):
                raise TreeError(f"node {t}: weight must be zero exactly at the root")
            w.append(q)
        self._parent = tuple(par)
        self._weight = tuple(w)
        self._root = roots[0]
        self._children: list[list[int]] = [[] for _ in range(n)]
        for t, p in enumerate(par):
            if p is not None:
                self._children[p].append(t)
        depth = [-1] * n
        depth[self._root] = 0
        order = [self._root]
        for u in order:
            for c in self._children[u]:
                depth[c] = depth[u] + 1
                order.append(c)
        if len(order) != n:
            raise TreeError("parent links contain a cycle")
        self._depth = tuple(depth)
        self._preorder = tuple(order)

    # -- basic structure -------------------------------------------------------

    def __len__(self) -> int:
        return len(self._parent)

    @property
    def root(self) -> int:
        return self._root

    @property
    def parents(self) -> tuple[int | None, ...]:
        return self._parent

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return self._weight

    @property
    def nodes(self) -> range:
        return range(len(self._parent))

    def parent(self, t: int) -> int | None:
        return self._parent[self._check(t)]

    def weight(self, t: int) -> Fraction:
        return self._weight[self._check(t)]

    def children(self, t: int) -> tuple[int, ...]:
        return tuple(self._children[self._check(t)])

    def depth(self, t: int) -> int:
        return self._depth[self._check(t)]

    def bfs_order(self) -> tuple[int, ...]:
        return self._preorder

    def leaves(self) -> list[int]:
        return [t for t in self.nodes if not self._children[t]]

    def _check(self, t) -> int:
        if not (isinstance(t, int) and 0 <= t < len(self._parent)):
            raise TreeError(f"unknown node {t!r}")
        return t

    def precedes(self, s: int, t: int) -> bool:
        """s is an ancestor of t or equal to it."""
        self._check(s)
        self._check(t)
        while self._depth[t] > self._depth[s]:
            t = self._parent[t]
        return s == t

    def down_set(self, t: int) -> list[int]:
        """Root-to-``t`` chain, root first."""
        self._check(t)
        out = []
        cur: int | None = t
        while cur is not None:
            out.append(cur)
            cur = self._parent[cur]
        out.reverse()
        return out

    def meet(self, s: int, t: int) -> int:
        self._check(s)
        self._check(t)
        P, D = self._parent, self._depth
        while D[s] > D[t]:
            s = P[s]
        while D[t] > D[s]:
            t = P[t]
        while s != t:
            s, t = P[s], P[t]
        return s

    def branches(self) -> list[list[int]]:
        """All root-to-leaf chains, in leaf-id order."""
        return [self.down_set(leaf) for leaf in self.leaves()]

    def is_chain(self, nodes: Iterable[int]) -> bool:
        ns = sorted(set(nodes), key=lambda t: self._depth[self._check(t)])
        return all(self.precedes(a, b) for a, b in zip(ns, ns[1:]))

    def down_closure(self, nodes: Iterable[int]) -> frozenset[int]:
        out: set[int] = set()
        for t in nodes:
            out.update(self.down_set(t))
        return frozenset(out)

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {"parent": list(self._parent), "weight": [format_rational(w) for w in self._weight]}

    @classmethod
    def from_dict(cls, data: dict) -> WeightedTree:
        if not isinstance(data, dict) or "parent" not in data or "weight" not in data:
            raise TreeError('expected {"parent": [...], "weight": [...]}')
        if not isinstance(data["parent"], list) or not isinstance(data["weight"], list):
            raise TreeError("parent and weight must be lists")
        return cls(data["parent"], data["weight"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> WeightedTree:
        return cls.from_dict(json.loads(text))

    def __eq__(self, other) -> bool:
        return isinstance(other, WeightedTree) and self._parent == other._parent and self._weight == other._weight

    def __hash__(self) -> int:
        return hash((self._parent, self._weight))

    def __repr__(self) -> str:
        return f"WeightedTree({len(self)} nodes)"


def down_set(T: WeightedTree, t: int) -> list[int]:
    return T.down_set(t)


def meet(T: WeightedTree, s: int, t: int) -> int:
    return T.meet(s, t)


def branches(T: WeightedTree) -> list[list[int]]:
    return T.branches()


def _chain_sums(T: WeightedTree, F: frozenset[int]) -> list[Fraction]:
    """best[t] = total weight of the chain down_set(t) minus F."""
    best = [Fraction(0)] * len(T)
    W, P = T.weights, T.parents
    for t in T.bfs_order():
        p = P[t]
        own = W[t] if t not in F else Fraction(0)
        best[t] = own + (best[p] if p is not None else 0)
    return best


def _as_node_set(T: WeightedTree, F: Iterable[int]) -> frozenset[int]:
    F = frozenset(F)
    for t in F:
        T._check(t)
    return F


def max_chain_weight_avoiding(T: WeightedTree, F: Iterable[int]) -> Fraction:
    """Largest total weight of a chain disjoint from ``F`` (0 for the empty chain).

    Weights are nonnegative, so the heaviest chain ending at ``t`` is
    ``down_set(t)`` with ``F`` removed.
    """
    return max(_chain_sums(T, _as_node_set(T, F)))


def heaviest_chain_avoiding(T: WeightedTree, F: Iterable[int]) -> list[int]:
    F = _as_node_set(T, F)
    best = _chain_sums(T, F)
    top = max(T.nodes, key=lambda t: (best[t], -t))
    return [x for x in T.down_set(top) if x not in F]


def precompact_certificate(T: WeightedTree, eps) -> frozenset[int]:
    """Downward-closed ``F`` such that every chain outside ``F`` weighs less than ``eps``.

    Greedy: while the heaviest chain outside ``F`` reaches ``eps``, add its
    shallowest node. Among equally heavy chains the one ending at the lowest
    node id is used. ``F`` is not promised to be minimal.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    F = {T.root}
    while True:
        frozen = frozenset(F)
        best = _chain_sums(T, frozen)
        top = max(T.nodes, key=lambda t: (best[t], -t))
        if best[top] < eps:
            return frozen
        chain = [x for x in T.down_set(top) if x not in frozen]
        F.add(chain[0])


def certificate_residual(T: WeightedTree, F: Iterable[int]) -> Fraction:
    return max_chain_weight_avoiding(T, F)
