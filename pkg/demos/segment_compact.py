"""Grow the partition tree over a sampled segment and watch the density improve.

Run: python demos/segment_compact.py
"""
from __future__ import annotations

from fractions import Fraction as F

from rtree_forge import (
    EmbeddedPolygonalSpace,
    branch_weight_sums,
    build_compact_surjection,
    intrinsic_sample,
    verify_bundle,
)

S = EmbeddedPolygonalSpace([(0, 0), (1, 0)], [(0, 1)])
sample = intrinsic_sample(S, [S.point(0, F(k, 8)) for k in range(9)])

print("depth  nodes  tail bound  observed gap  max ratio")
for depth in range(1, 6):
    B = build_compact_surjection(S, sample, depth)
    rep = verify_bundle(B, pair_samples=1000, seed=depth)
    print(f"{depth:5d}  {len(B.tree):5d}  {str(B.tail_bound):>10}  {str(rep.max_gap):>12}  {rep.max_ratio:.4f}")

B = build_compact_surjection(S, sample, 4)
print("\nlevel-1 blocks:", [lbl for lbl, n in zip(B.labels, B.levels) if n == 1])
branch, total = branch_weight_sums(B)[0]
print(f"first branch {branch} weighs {total}; an infinite branch would weigh {2 * (B.diameter + 1)}")
