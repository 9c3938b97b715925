"""Adaptive weights over a finite domain, and what happens when the map stretches.

Run: python demos/separable_identity.py
"""
from __future__ import annotations

from fractions import Fraction as F

from rtree_forge import (
    EmbeddedPolygonalSpace,
    FiniteMetricSpace,
    NotLipschitzError,
    branch_limit,
    build_separable_surjection,
    verify_bundle,
)

X = EmbeddedPolygonalSpace([(0, 0), (1, 0)], [(0, 1)])
zs = [F(k, 8) for k in range(9)]
Z = FiniteMetricSpace(zs, [[abs(a - b) for b in zs] for a in zs])
identity = {z: X.point(0, z) for z in zs}

B = build_separable_surjection(Z, identity, X, 4)
for t in B.tree.nodes:
    n = B.levels[t]
    if 0 < n <= 2:
        print(f"level {n} {B.labels[t]:>22}: weight {B.tree.weights[t]} < {F(1, 2 ** (n - 1)) + F(1, 2 ** n)}")
leaf_branch = B.tree.branches()[-1]
print("last branch limit:", branch_limit(B, leaf_branch))
print("certificate passed:", verify_bundle(B, pair_samples=2000).passed)

doubled = {z: X.point(0, min(2 * z, F(1))) for z in zs}
try:
    build_separable_surjection(Z, doubled, X, 4)
except NotLipschitzError as exc:
    print("rejected:", exc)
