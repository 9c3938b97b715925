"""Hang one spike per base point off the apex of a cone and check the map.

Run: python demos/cone_star.py
"""
from __future__ import annotations

from fractions import Fraction as F

from rtree_forge import build_star, chord_distance, cone_space, evaluate_map, intrinsic_distance, verify_bundle

X = cone_space((0, 1), [(-1, 0), (0, 0), (1, 0)])


def xy(p):
    return "({}, {})".format(*X.coords(p))


apex = X.vertex_point(0)
base = [X.vertex_point(v) for v in (1, 2, 3)]

for a in base:
    print(f"{xy(a)}: chord {float(chord_distance(X, apex, a)):.6f}, "
          f"intrinsic {float(intrinsic_distance(X, apex, a)):.6f}")
print("across the cone:", float(intrinsic_distance(X, base[0], base[2])), "vs chord", chord_distance(X, base[0], base[2]))

# 3/2 is a rational upper bound for sqrt(2), the longest spike
B = build_star(X, apex, base, [F(3, 2)] * 3)
for node in (1, 2, 3):
    print(f"spike {node} ends at", xy(evaluate_map(B, B.rtree.top(node))))

report = verify_bundle(B, pair_samples=5000, seed=1)
print(f"largest sampled ratio {report.max_ratio:.6f} on pair {report.worst_pair}; passed: {report.passed}")
