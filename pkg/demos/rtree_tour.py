"""A short tour of the R-tree of a weighted tree.

Run: python demos/rtree_tour.py
"""
from __future__ import annotations

from fractions import Fraction as F

from rtree_forge import IdealPoint, RTreePoint, RTreeSpace, WeightedTree, precompact_certificate

# root r with an edge a of length 2, which has a child c of length 1, and a second edge b of length 3
T = WeightedTree([None, 0, 0, 1], [0, 2, 3, 1])
S = RTreeSpace(T)
p, q, c = RTreePoint(1, F(3, 2)), RTreePoint(2, F(2)), RTreePoint(3, F(1, 2))

print("heights:", S.height(p), S.height(q), S.height(c))
print("d(p, q) =", S.distance(p, q), " meet:", S.lex_meet(p, q))
# p sits below c on the same root path, so the distance is just the height gap
print("d(p, c) =", S.distance(p, c), " meet:", S.lex_meet(p, c))

g = S.geodesic(p, q)
for t in (0, F(3, 4), F(3, 2), F(7, 4), g.length):
    print(f"  geodesic at {t}: {g(t)}")

print("branch point of p, q, c:", S.segment_intersection_point(p, q, c))
print("four-point defect:", S.four_point_defect(p, q, c, S.root_point))

# balls B[p, 3/2] and B[q, 2] just touch at the root
print("common point of two balls:", S.hyperconvex_witness([p, q], [F(3, 2), F(2)]))
print("radii too small:", S.hyperconvex_witness([p, q], [1, 1]))

eps = F(1, 2)
cert = precompact_certificate(T, eps)
net = S.epsilon_net_points(eps)
print(f"certificate for eps={eps}: {sorted(cert)}, net of {len(net)} points")

# a geometric spine and the ideal point at its end
spine = RTreeSpace(WeightedTree([None, 0, 1, 2], [0, F(1, 2), F(1, 4), F(1, 8)]))
end = IdealPoint((0, 1, 2, 3), F(1, 8), "halving")
for k in range(4):
    approx = spine.distance(spine.root_point, spine.truncation(end, k))
    print(f"  depth {k}: distance {approx}, limit {spine.completion_distance(spine.root_point, end)}, "
          f"tail {spine.tail_after(end, k)}")
