"""Building 1-Lipschitz surjections from R-trees onto polygonal spaces.

Three builders share one output type, :class:`SurjectionBundle`:

* :func:`build_star` hangs one spike per target point off a base point;
* :func:`build_compact_surjection` grows a tree of nested partitions with
  geometrically shrinking weights ``(D+1)/2**(n-1)``;
* :func:`build_separable_surjection` does the same over a finite domain ``Z``
  mapped into the space, with weights adapted to the image distances.

In every case node ``t`` carries a constant-speed path of duration ``w_t``
from the image of its parent's top point to the node's own target, and the
map sends ``(t, s)`` to that path at time ``s``.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, NamedTuple, Sequence

from ._rational import Real, ceil_log2, format_rational, format_real, is_exact, rational_upper_bound
from .metric import FiniteMetricSpace, diameter
from .rtree import RTreePoint, RTreeSpace, random_point
from .spaces import (
    EmbeddedPolygonalSpace,
    LipschitzPath,
    SpacePoint,
    chord_distance_sq,
    geodesic_path,
    intrinsic_distance,
)
from .wtree import WeightedTree

LIPSCHITZ_TOL = 1e-12
DENSITY_TOL = 1e-9


class HierarchyError(ValueError):
    pass


class NotLipschitzError(ValueError):
    """The supplied map expands some pair of points."""

    def __init__(self, pair: tuple, image_distance: Real, domain_distance: Fraction):
        self.pair = pair
        self.image_distance = image_distance
        self.domain_distance = domain_distance
        super().__init__(f"map is not 1-Lipschitz on pair {pair[0]}, {pair[1]}: "
                         f"image distance {float(image_distance):.12g} > {domain_distance}")


# -- partitions ------------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    members: tuple[int, ...]  # positions in the metric space, ascending
    center: int
    parent: int | None  # index of the enclosing block one level up


@dataclass(frozen=True)
class PartitionHierarchy:
    levels: tuple[tuple[Block, ...], ...]
    bounds: tuple[Fraction | None, ...]  # level 0 has no bound

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def validate(self, M: FiniteMetricSpace) -> None:
        n = len(M)
        if not self.levels or len(self.levels[0]) != 1 or self.levels[0][0].members != tuple(range(n)):
            raise HierarchyError("level 0 must be the single block of all points")
        if len(self.bounds) != len(self.levels):
            raise HierarchyError("one bound per level required")
        for lvl, blocks in enumerate(self.levels):
            seen = sorted(i for b in blocks for i in b.members)
            if seen != list(range(n)):
                raise HierarchyError(f"level {lvl} is not a partition")
            bound = self.bounds[lvl]
            for b in blocks:
                if b.center not in b.members:
                    raise HierarchyError(f"level {lvl}: center outside its block")
                if bound is not None and _block_diameter(M, b.members) >= bound:
                    raise HierarchyError(f"level {lvl}: block diameter not below {bound}")
                if lvl == 0:
                    continue
                if b.parent is None or not set(b.members) <= set(self.levels[lvl - 1][b.parent].members):
                    raise HierarchyError(f"level {lvl}: block not inside its parent")
        for lvl in range(1, len(self.levels)):
            for k, parent in enumerate(self.levels[lvl - 1]):
                kids = sorted(i for b in self.levels[lvl] if b.parent == k for i in b.members)
                if kids != list(parent.members):
                    raise HierarchyError(f"level {lvl} does not partition block {k} of level {lvl - 1}")


def _block_diameter(M: FiniteMetricSpace, members: Sequence[int]) -> Fraction:
    D = M.matrix
    return max((D[i][j] for i in members for j in members), default=Fraction(0))


def _greedy_blocks(M: FiniteMetricSpace, bound: Fraction) -> list[list[int]]:
    """Farthest-point seeding until every nearest-seed cluster is narrower than ``bound``."""
    n = len(M)
    D = M.matrix
    seeds = [0]
    while True:
        owner = [min(seeds, key=lambda s: (D[s][k], s)) for k in range(n)]
        clusters: dict[int, list[int]] = {}
        for k in range(n):
            clusters.setdefault(owner[k], []).append(k)
        if all(_block_diameter(M, c) < bound for c in clusters.values()):
            return list(clusters.values())
        near = [min(D[s][k] for s in seeds) for k in range(n)]
        seeds.append(max(range(n), key=lambda k: (near[k], -k)))


def build_partition_hierarchy(M: FiniteMetricSpace, depth: int, bounds: Sequence) -> PartitionHierarchy:
    """Nested partitions; level ``n`` blocks have diameter below ``bounds[n-1]``.

    Each level is clustered from scratch and then intersected with the level
    above, so blocks nest. Centers are the lowest-position member.
    """
    if len(M) == 0:
        raise HierarchyError("empty space")
    if depth < 0 or len(bounds) != depth:
        raise HierarchyError(f"need exactly {depth} bounds")
    bounds = [Fraction(b) for b in bounds]
    if any(b <= 0 for b in bounds):
        raise HierarchyError("bounds must be positive")
    if any(b2 >= b1 for b1, b2 in zip(bounds, bounds[1:])):
        raise HierarchyError("bounds must decrease")
    everything = tuple(range(len(M)))
    levels = [(Block(everything, 0, None),)]
    for bound in bounds:
        prev = levels[-1]
        where = {i: k for k, b in enumerate(prev) for i in b.members}
        pieces: dict[tuple[int, int], list[int]] = {}
        for cluster in _greedy_blocks(M, bound):
            for i in cluster:
                pieces.setdefault((where[i], min(cluster)), []).append(i)
        blocks = sorted((tuple(sorted(m)) for m in pieces.values()), key=lambda m: m[0])
        levels.append(tuple(Block(m, m[0], where[m[0]]) for m in blocks))
    H = PartitionHierarchy(tuple(levels), (None, *bounds))
    H.validate(M)
    return H


# -- bundles ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightCheck:
    node: int
    name: str
    holds: bool
    detail: str

    def to_dict(self) -> dict:
        return {"node": self.node, "check": self.name, "holds": self.holds, "detail": self.detail}


@dataclass
class SurjectionBundle:
    """An R-tree together with a 1-Lipschitz map onto (a sample of) a space."""

    kind: str
    space: EmbeddedPolygonalSpace
    rtree: RTreeSpace
    root_image: SpacePoint
    paths: dict[int, LipschitzPath]
    targets: dict[int, SpacePoint]
    labels: tuple[str, ...]
    levels: tuple[int, ...]
    sample_points: tuple[SpacePoint, ...]
    truncation_depth: int
    tail_bound: Fraction
    weight_checks: tuple[WeightCheck, ...] = ()
    diameter: Fraction | None = None
    hierarchy: PartitionHierarchy | None = None
    sample: FiniteMetricSpace | None = field(default=None, repr=False)

    @property
    def tree(self) -> WeightedTree:
        return self.rtree.tree

    def __call__(self, p: RTreePoint) -> SpacePoint:
        return evaluate_map(self, p)

    def image_breakpoints(self) -> list[SpacePoint]:
        seen = {self.root_image: None}
        for t in sorted(self.paths):
            for pt in self.paths[t].points:
                seen.setdefault(pt, None)
        return list(seen)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "space": self.space.to_dict(),
            "tree": self.tree.to_dict(),
            "labels": list(self.labels),
            "levels": list(self.levels),
            "root_image": self.root_image.to_dict(),
            "paths": {str(t): self.paths[t].to_dict() for t in sorted(self.paths)},
            "sample_points": [p.to_dict() for p in self.sample_points],
            "truncation_depth": self.truncation_depth,
            "tail_bound": format_rational(self.tail_bound),
            "diameter": None if self.diameter is None else format_rational(self.diameter),
            "weight_checks": [c.to_dict() for c in self.weight_checks],
        }


def _star_tree(weights: Sequence[Fraction]) -> WeightedTree:
    return WeightedTree([None] + [0] * len(weights), [Fraction(0), *weights])


def _le(a: Real, b: Real) -> bool:
    if is_exact(a) and is_exact(b):
        return a <= b
    return float(a) <= float(b) + DENSITY_TOL


def build_star(X: EmbeddedPolygonalSpace, x0: SpacePoint, targets: Sequence[SpacePoint],
               durations: Sequence) -> SurjectionBundle:
    """One spike of length ``durations[k]`` per target, carrying a path from ``x0``.

    A zero duration is allowed only for ``x0`` itself, which is then covered
    by the root. Repeated targets become separate spikes.
    """
    if len(targets) != len(durations):
        raise ValueError("targets and durations differ in length")
    x0 = X.normalize(x0)
    pts = [X.normalize(a) for a in targets]
    weights, paths, node_targets, labels, checks = [], {}, {}, ["x0"], []
    for k, (a, dur) in enumerate(zip(pts, durations)):
        dur = Fraction(dur)
        if dur == 0:
            if a != x0:
                raise ValueError(f"target {k} differs from x0 but has duration 0")
            continue
        node = len(weights) + 1
        paths[node] = geodesic_path(X, x0, a, dur)
        d = intrinsic_distance(X, x0, a)
        checks.append(WeightCheck(node, "duration>=distance", _le(d, dur), f"{float(d):.12g} <= {dur}"))
        weights.append(dur)
        node_targets[node] = a
        labels.append(f"target {k}")
    tree = _star_tree(weights)
    return SurjectionBundle(
        kind="star", space=X, rtree=RTreeSpace(tree), root_image=x0, paths=paths,
        targets=node_targets, labels=tuple(labels), levels=(0,) + (1,) * len(weights),
        sample_points=tuple(pts), truncation_depth=1 if weights else 0,
        tail_bound=Fraction(0), weight_checks=tuple(checks))


def intrinsic_sample(S: EmbeddedPolygonalSpace, points: Sequence[SpacePoint], grid_bits: int = 40) -> FiniteMetricSpace:
    """Sample points with their intrinsic distances as an exact finite metric.

    Irrational distances force every entry to be rounded up onto a dyadic
    grid; rounding up keeps the triangle inequality and never undercuts the
    true intrinsic distance.
    """
    pts = [S.normalize(p) for p in points]
    n = len(pts)
    raw = [[Fraction(0)] * n for _ in range(n)]
    exact = True
    for i in range(n):
        for j in range(i + 1, n):
            d = intrinsic_distance(S, pts[i], pts[j])
            exact &= is_exact(d)
            raw[i][j] = raw[j][i] = d
    if not exact:
        raw = [[rational_upper_bound(d, grid_bits) if i != j else Fraction(0) for j, d in enumerate(row)]
               for i, row in enumerate(raw)]
    return FiniteMetricSpace(pts, raw)


def depth_for_density(D, eps) -> int:
    """Smallest ``N`` with ``(D+1)/2**N <= eps``."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    return ceil_log2((Fraction(D) + 1) / eps)


def _hierarchy_tree(H: PartitionHierarchy, weight_of) -> tuple[WeightedTree, list[tuple[int, int]]]:
    """Tree whose nodes are ``(level, block index)``, listed level by level."""
    ids: dict[tuple[int, int], int] = {}
    order: list[tuple[int, int]] = []
    parent: list[int | None] = []
    for lvl, blocks in enumerate(H.levels):
        for k, b in enumerate(blocks):
            ids[(lvl, k)] = len(order)
            order.append((lvl, k))
            parent.append(None if lvl == 0 else ids[(lvl - 1, b.parent)])
    weights = [Fraction(0) if lvl == 0 else weight_of(lvl, H.levels[lvl][k]) for lvl, k in order]
    return WeightedTree(parent, weights), order


def _trivial_bundle(kind: str, S: EmbeddedPolygonalSpace, point: SpacePoint, sample=None) -> SurjectionBundle:
    return SurjectionBundle(
        kind=kind, space=S, rtree=RTreeSpace(WeightedTree([None], [0])), root_image=point,
        paths={}, targets={}, labels=("root",), levels=(0,), sample_points=(point,),
        truncation_depth=0, tail_bound=Fraction(0), diameter=Fraction(0), sample=sample)


def _block_label(lvl: int, b: Block, names: Sequence) -> str:
    return f"{lvl}:{{{','.join(str(names[i]) for i in b.members)}}}"


def build_compact_surjection(S: EmbeddedPolygonalSpace, sample: FiniteMetricSpace, N: int) -> SurjectionBundle:
    """Depth-``N`` truncation of the nested-partition tree over a sample of ``S``.

    ``sample`` holds :class:`SpacePoint` ids with intrinsic distances (or
    upper bounds on them, see :func:`intrinsic_sample`).
    """
    if N < 1:
        raise ValueError("depth must be at least 1")
    pts = [S.normalize(p) for p in sample.points]
    if len(pts) == 0:
        raise ValueError("empty sample")
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if not _le(intrinsic_distance(S, pts[i], pts[j]), sample.di(i, j)):
                raise ValueError(f"sample distance {sample.di(i, j)} undercuts the intrinsic distance "
                                 f"between {pts[i]!r} and {pts[j]!r}")
    if len(pts) == 1:
        return _trivial_bundle("compact", S, pts[0], sample)
    D = diameter(sample)
    bounds = [(D + 1) / 2 ** n for n in range(1, N + 1)]
    H = build_partition_hierarchy(sample, N, bounds)
    tree, order = _hierarchy_tree(H, lambda lvl, b: (D + 1) / 2 ** (lvl - 1))
    R = RTreeSpace(tree)
    paths, targets, checks = {}, {}, []
    for node, (lvl, k) in enumerate(order):
        if lvl == 0:
            continue
        b = H.levels[lvl][k]
        up = H.levels[lvl - 1][b.parent]
        w = tree.weights[node]
        paths[node] = geodesic_path(S, pts[up.center], pts[b.center], w)
        targets[node] = pts[b.center]
        diam = _block_diameter(sample, up.members)
        checks.append(WeightCheck(node, "parent_diameter<weight", diam < w, f"{diam} < {w}"))
    labels = tuple(_block_label(lvl, H.levels[lvl][k], range(len(pts))) for lvl, k in order)
    return SurjectionBundle(
        kind="compact", space=S, rtree=R, root_image=pts[0], paths=paths, targets=targets,
        labels=labels, levels=tuple(lvl for lvl, _ in order), sample_points=tuple(pts),
        truncation_depth=N, tail_bound=(D + 1) / 2 ** N, weight_checks=tuple(checks),
        diameter=D, hierarchy=H, sample=sample)


def check_one_lipschitz(Z: FiniteMetricSpace, f_values: Mapping, X: EmbeddedPolygonalSpace) -> None:
    """Raise :class:`NotLipschitzError` on the first pair that ``f`` expands."""
    pts = Z.points
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = intrinsic_distance(X, f_values[pts[i]], f_values[pts[j]])
            dz = Z.di(i, j)
            over = d > dz if is_exact(d) else float(d) > float(dz) * (1 + LIPSCHITZ_TOL)
            if over:
                raise NotLipschitzError((pts[i], pts[j]), d, dz)


def build_separable_surjection(Z: FiniteMetricSpace, f_values: Mapping, X: EmbeddedPolygonalSpace,
                               N: int) -> SurjectionBundle:
    """Depth-``N`` tree over partitions of ``Z`` with weights ``d(f c_up, f c) + 1/2**n``.

    ``f`` must already be 1-Lipschitz from ``Z`` into the intrinsic metric of
    ``X``; re-metrizing ``Z`` to make it so is left to the caller.
    """
    if N < 1:
        raise ValueError("depth must be at least 1")
    if len(Z) == 0:
        raise ValueError("empty domain")
    missing = [z for z in Z.points if z not in f_values]
    if missing:
        raise ValueError(f"f has no value at {missing[0]!r}")
    f = {z: X.normalize(f_values[z]) for z in Z.points}
    check_one_lipschitz(Z, f, X)
    names = Z.points
    if len(Z) == 1:
        b = _trivial_bundle("separable", X, f[names[0]], Z)
        return b
    bounds = [Fraction(1, 2 ** n) for n in range(1, N + 1)]
    H = build_partition_hierarchy(Z, N, bounds)
    diamZ = diameter(Z)

    def weight_of(lvl, b):
        up = H.levels[lvl - 1][b.parent]
        d = intrinsic_distance(X, f[names[up.center]], f[names[b.center]])
        return min(rational_upper_bound(d), Z.di(up.center, b.center)) + Fraction(1, 2 ** lvl)

    tree, order = _hierarchy_tree(H, weight_of)
    paths, targets, checks = {}, {}, []
    for node, (lvl, k) in enumerate(order):
        if lvl == 0:
            continue
        b = H.levels[lvl][k]
        up = H.levels[lvl - 1][b.parent]
        w = tree.weights[node]
        a, c = f[names[up.center]], f[names[b.center]]
        paths[node] = geodesic_path(X, a, c, w)
        targets[node] = c
        step = Z.di(up.center, b.center) + Fraction(1, 2 ** lvl)
        checks.append(WeightCheck(node, "weight<=domain_step+2^-n", w <= step, f"{w} <= {step}"))
        bound = Fraction(1, 2 ** (lvl - 1)) + Fraction(1, 2 ** lvl)
        if lvl >= 2 or diamZ < 1:
            checks.append(WeightCheck(node, "weight<2^(1-n)+2^-n", w < bound, f"{w} < {bound}"))
        else:
            top = diamZ + Fraction(1, 2)
            checks.append(WeightCheck(node, "weight<=diam(Z)+1/2", w <= top, f"{w} <= {top}"))
    labels = tuple(_block_label(lvl, H.levels[lvl][k], names) for lvl, k in order)
    return SurjectionBundle(
        kind="separable", space=X, rtree=RTreeSpace(tree), root_image=f[names[0]], paths=paths,
        targets=targets, labels=labels, levels=tuple(lvl for lvl, _ in order),
        sample_points=tuple(f[z] for z in names), truncation_depth=N,
        tail_bound=Fraction(3, 2 ** N), weight_checks=tuple(checks), diameter=diamZ,
        hierarchy=H, sample=Z)


# -- evaluation -------------------------------------------------------------------------


def evaluate_map(B: SurjectionBundle, p: RTreePoint) -> SpacePoint:
    B.rtree.check(p)
    if B.tree.parents[p.node] is None:
        return B.root_image
    return B.paths[p.node](p.offset)


class BranchLimit(NamedTuple):
    point: SpacePoint
    error_bound: Fraction


def _tail_bound_at(B: SurjectionBundle, depth: int) -> Fraction:
    if B.kind == "star" or not B.paths:
        return Fraction(0)
    if B.kind == "compact":
        return (B.diameter + 1) / 2 ** depth
    return Fraction(3, 2 ** depth)


def branch_limit(B: SurjectionBundle, branch: Sequence[int]) -> BranchLimit:
    """Image of the deepest stored point of a branch and how far the limit can be from it."""
    branch = list(branch)
    if not branch or not B.tree.is_chain(branch):
        raise ValueError("not a chain of the tree")
    leaf = branch[-1]
    if B.tree.children(leaf) or B.tree.down_set(leaf) != branch:
        raise ValueError("branch is not a maximal chain")
    end = B.rtree.top(leaf) if leaf != B.tree.root else B.rtree.root_point
    return BranchLimit(evaluate_map(B, end), _tail_bound_at(B, B.tree.depth(leaf)))


def branch_weight_sums(B: SurjectionBundle) -> list[tuple[list[int], Fraction]]:
    return [(b, sum((B.tree.weights[t] for t in b), Fraction(0))) for b in B.tree.branches()]


# -- verification --------------------------------------------------------------------------


@dataclass
class CertificateReport:
    seed: int
    pair_samples: int
    max_ratio: float
    worst_pair: tuple | None
    lipschitz_ok: bool
    density_probes: int
    max_gap: Real
    worst_probe: SpacePoint | None
    density_bound: Fraction
    density_ok: bool
    failed_weight_checks: list[WeightCheck]
    failed_paths: list[int]

    @property
    def weights_ok(self) -> bool:
        return not self.failed_weight_checks

    @property
    def paths_ok(self) -> bool:
        return not self.failed_paths

    @property
    def passed(self) -> bool:
        return self.lipschitz_ok and self.density_ok and self.weights_ok and self.paths_ok

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "passed": self.passed,
            "lipschitz": {"pairs": self.pair_samples, "max_ratio": self.max_ratio,
                          "tolerance": LIPSCHITZ_TOL, "ok": self.lipschitz_ok,
                          "worst_pair": None if self.worst_pair is None else [p.to_dict() for p in self.worst_pair]},
            "density": {"probes": self.density_probes, "max_gap": format_real(self.max_gap),
                        "bound": format_rational(self.density_bound), "ok": self.density_ok,
                        "worst_probe": None if self.worst_probe is None else self.worst_probe.to_dict()},
            "weights": {"ok": self.weights_ok, "failures": [c.to_dict() for c in self.failed_weight_checks]},
            "paths": {"ok": self.paths_ok, "failures": self.failed_paths},
        }


def _gap(S: EmbeddedPolygonalSpace, probe: SpacePoint, image: Sequence[SpacePoint], image_set) -> Real:
    if probe in image_set:
        return Fraction(0)
    best: Real | None = None
    for b in image:
        d = intrinsic_distance(S, probe, b)
        if best is None or d < best:
            best = d
    return best


def verify_bundle(B: SurjectionBundle, pair_samples: int = 10_000, density_probes: int | None = None,
                  seed: int = 0) -> CertificateReport:
    """Sample the Lipschitz ratio, measure density of the image, re-check weights and paths.

    ``pair_samples`` counts pairs of distinct points; coincident draws are
    redrawn. The ratio uses the chord metric of the plane. Density is measured in the
    intrinsic metric from each probed sample point to the nearest path
    breakpoint; ``density_probes`` caps how many sample points are probed.
    """
    rng = random.Random(seed)
    R = B.rtree
    worst_sq, worst_pair, used = Fraction(0), None, 0
    attempts = 0
    while len(B.tree) > 1 and used < pair_samples and attempts < 20 * pair_samples:
        attempts += 1
        p, q = random_point(R, rng), random_point(R, rng)
        dw = R.distance(p, q)
        if dw != 0:
            used += 1
            r_sq = chord_distance_sq(B.space, evaluate_map(B, p), evaluate_map(B, q)) / (dw * dw)
            if r_sq > worst_sq:
                worst_sq, worst_pair = r_sq, (p, q)
    max_ratio = math.sqrt(worst_sq)
    lip_ok = worst_sq <= Fraction(1 + LIPSCHITZ_TOL) ** 2

    probes = list(B.sample_points)
    if density_probes is not None and density_probes < len(probes):
        probes = rng.sample(probes, density_probes)
    image = B.image_breakpoints()
    image_set = set(image)
    max_gap: Real = Fraction(0)
    worst_probe = None
    for s in probes:
        g = _gap(B.space, s, image, image_set)
        if g > max_gap:
            max_gap, worst_probe = g, s
    dens_ok = _le(max_gap, B.tail_bound)

    failed_paths = []
    for t in sorted(B.paths):
        path = B.paths[t]
        parent = B.tree.parents[t]
        start = B.root_image if B.tree.parents[parent] is None else B.targets[parent]
        if (path.violations() or path.duration != B.tree.weights[t]
                or path.start != start or path.end != B.targets[t]):
            failed_paths.append(t)
    return CertificateReport(
        seed=seed, pair_samples=used, max_ratio=max_ratio, worst_pair=worst_pair, lipschitz_ok=lip_ok,
        density_probes=len(probes), max_gap=max_gap, worst_probe=worst_probe, density_bound=B.tail_bound,
        density_ok=dens_ok, failed_weight_checks=[c for c in B.weight_checks if not c.holds],
        failed_paths=failed_paths)
