"""Polygonal spaces in the plane with their chord and intrinsic metrics.

A space is a finite union of straight segments with rational endpoints. Points
are addressed by a segment and a parameter along it; the two endpoints of a
segment are stored as vertex points so that every location has exactly one
representation.
"""
from __future__ import annotations

import bisect
import heapq
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ._rational import Real, format_rational, format_real, is_exact, parse_rational, parse_real, sqrt_length

Coord = tuple[Fraction, Fraction]

TOL = 1e-9


class SpaceError(ValueError):
    """Invalid space geometry or an invalid point reference."""


class DisconnectedSpaceError(SpaceError):
    pass


class DurationTooShortError(ValueError):
    """No 1-Lipschitz path of the requested duration joins the two points."""


@dataclass(frozen=True)
class SpacePoint:
    """Either ``vertex`` is set, or ``seg`` with ``0 < lam < 1``."""

    seg: int | None = None
    lam: Fraction = Fraction(0)
    vertex: int | None = None

    def to_dict(self) -> dict:
        if self.vertex is not None:
            return {"vertex": self.vertex}
        return {"seg": self.seg, "lambda": format_rational(self.lam)}

    def __repr__(self) -> str:
        if self.vertex is not None:
            return f"SpacePoint(vertex={self.vertex})"
        return f"SpacePoint(seg={self.seg}, lam={self.lam})"


def _orient(a: Coord, b: Coord, c: Coord) -> Fraction:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _within_box(a: Coord, b: Coord, c: Coord) -> bool:
    return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))


def _closed_segments_meet(a: Coord, b: Coord, c: Coord, d: Coord) -> bool:
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if ((o1 > 0 and o2 < 0) or (o1 < 0 and o2 > 0)) and ((o3 > 0 and o4 < 0) or (o3 < 0 and o4 > 0)):
        return True
    return ((o1 == 0 and _within_box(a, b, c)) or (o2 == 0 and _within_box(a, b, d))
            or (o3 == 0 and _within_box(c, d, a)) or (o4 == 0 and _within_box(c, d, b)))


class EmbeddedPolygonalSpace:
    """Union of non-crossing segments in the plane, required to be connected.

    A single vertex with no segments is accepted as the one-point space.
    """

    def __init__(self, vertices: Sequence[Sequence], segments: Sequence[Sequence[int]]):
        verts = []
        for v in vertices:
            if len(v) != 2:
                raise SpaceError(f"vertex {v!r} is not a planar coordinate")
            verts.append((parse_rational(v[0]), parse_rational(v[1])))
        segs = [tuple(int(i) for i in s) for s in segments]
        self._vertices: tuple[Coord, ...] = tuple(verts)
        self._segments: tuple[tuple[int, int], ...] = tuple(segs)  # type: ignore[assignment]
        self._check_geometry()
        self._incident: list[list[int]] = [[] for _ in verts]
        for k, (i, j) in enumerate(self._segments):
            self._incident[i].append(k)
            self._incident[j].append(k)
        self._check_connected()
        self._len_sq = tuple(self._seg_len_sq(k) for k in range(len(segs)))
        self._len = tuple(sqrt_length(q) for q in self._len_sq)

    def _check_geometry(self) -> None:
        V, S = self._vertices, self._segments
        if not V:
            raise SpaceError("a space needs at least one vertex")
        if len(set(V)) != len(V):
            raise SpaceError("two vertices share coordinates")
        seen = set()
        for k, s in enumerate(S):
            if len(s) != 2:
                raise SpaceError(f"segment {k} must have two endpoints")
            i, j = s
            if not (0 <= i < len(V) and 0 <= j < len(V)):
                raise SpaceError(f"segment {k} references a missing vertex")
            if i == j:
                raise SpaceError(f"segment {k} has equal endpoints")
            key = frozenset(s)
            if key in seen:
                raise SpaceError(f"segment {k} is repeated")
            seen.add(key)
        for k in range(len(S)):
            a, b = S[k]
            for m in range(k + 1, len(S)):
                c, d = S[m]
                shared = {a, b} & {c, d}
                if shared:
                    v = shared.pop()
                    x = b if a == v else a
                    y = d if c == v else c
                    pv, px, py = V[v], V[x], V[y]
                    dot = (px[0] - pv[0]) * (py[0] - pv[0]) + (px[1] - pv[1]) * (py[1] - pv[1])
                    if _orient(pv, px, py) == 0 and dot > 0:
                        raise SpaceError(f"segments {k} and {m} overlap")
                elif _closed_segments_meet(V[a], V[b], V[c], V[d]):
                    raise SpaceError(f"segments {k} and {m} intersect away from a shared vertex")

    def _check_connected(self) -> None:
        n = len(self._vertices)
        if n == 1:
            return
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for k in self._incident[u]:
                i, j = self._segments[k]
                w = j if i == u else i
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != n:
            raise DisconnectedSpaceError("the union of segments is not connected")

    def _seg_len_sq(self, k: int) -> Fraction:
        (x0, y0), (x1, y1) = (self._vertices[i] for i in self._segments[k])
        return (x1 - x0) ** 2 + (y1 - y0) ** 2

    # -- accessors -------------------------------------------------------

    @property
    def vertices(self) -> tuple[Coord, ...]:
        return self._vertices

    @property
    def segments(self) -> tuple[tuple[int, int], ...]:
        return self._segments

    def segment_length(self, k: int) -> Real:
        return self._len[k]

    def segment_length_sq(self, k: int) -> Fraction:
        return self._len_sq[k]

    def total_length(self) -> Real:
        return sum(self._len, Fraction(0))

    def vertex_point(self, v: int) -> SpacePoint:
        if not 0 <= v < len(self._vertices):
            raise SpaceError(f"no vertex {v}")
        return SpacePoint(vertex=v)

    def point(self, seg: int, lam) -> SpacePoint:
        """Canonical point at parameter ``lam`` along segment ``seg``."""
        if not 0 <= seg < len(self._segments):
            raise SpaceError(f"no segment {seg}")
        lam = Fraction(lam)
        if not 0 <= lam <= 1:
            raise SpaceError(f"parameter {lam} outside [0, 1]")
        if lam == 0:
            return SpacePoint(vertex=self._segments[seg][0])
        if lam == 1:
            return SpacePoint(vertex=self._segments[seg][1])
        return SpacePoint(seg=seg, lam=lam)

    def normalize(self, p: SpacePoint) -> SpacePoint:
        if p.vertex is not None:
            return self.vertex_point(p.vertex)
        if p.seg is None:
            raise SpaceError("point has neither a vertex nor a segment")
        return self.point(p.seg, p.lam)

    def coords(self, p: SpacePoint) -> Coord:
        if p.vertex is not None:
            return self._vertices[p.vertex]
        (x0, y0), (x1, y1) = (self._vertices[i] for i in self._segments[p.seg])
        return (x0 + p.lam * (x1 - x0), y0 + p.lam * (y1 - y0))

    def param_on(self, p: SpacePoint, seg: int) -> Fraction:
        """Parameter of ``p`` along ``seg``; ``p`` must lie on that segment."""
        i, j = self._segments[seg]
        if p.vertex is None and p.seg == seg:
            return p.lam
        if p.vertex == i:
            return Fraction(0)
        if p.vertex == j:
            return Fraction(1)
        raise SpaceError(f"{p!r} is not on segment {seg}")

    def segments_at(self, p: SpacePoint) -> list[int]:
        if p.vertex is not None:
            return list(self._incident[p.vertex])
        return [p.seg]

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {"vertices": [[format_rational(x), format_rational(y)] for x, y in self._vertices],
                "segments": [list(s) for s in self._segments]}

    @classmethod
    def from_dict(cls, data: dict) -> EmbeddedPolygonalSpace:
        if not isinstance(data, dict) or "vertices" not in data or "segments" not in data:
            raise SpaceError('expected {"vertices": [[x, y], ...], "segments": [[i, j], ...]}')
        return cls(data["vertices"], data["segments"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> EmbeddedPolygonalSpace:
        return cls.from_dict(json.loads(text))

    def point_from_dict(self, data: dict) -> SpacePoint:
        if not isinstance(data, dict):
            raise SpaceError(f"point must be an object, got {data!r}")
        if "vertex" in data:
            return self.vertex_point(int(data["vertex"]))
        if "seg" not in data or "lambda" not in data:
            raise SpaceError('point needs "seg" and "lambda" (or "vertex")')
        return self.point(int(data["seg"]), parse_rational(data["lambda"]))

    def __repr__(self) -> str:
        return f"EmbeddedPolygonalSpace({len(self._vertices)} vertices, {len(self._segments)} segments)"


def cone_space(apex: Sequence, base: Sequence[Sequence]) -> EmbeddedPolygonalSpace:
    """One segment from ``apex`` to every base point."""
    if not base:
        raise SpaceError("cone needs a nonempty base")
    o = (parse_rational(apex[0]), parse_rational(apex[1]))
    pts = [(parse_rational(b[0]), parse_rational(b[1])) for b in base]
    if o in pts:
        raise SpaceError("apex coincides with a base point")
    if len(pts) >= 2 and all(_orient(pts[0], pts[1], c) == 0 for c in pts[2:]):
        if _orient(pts[0], pts[1], o) == 0:
            raise SpaceError("apex lies on the line of a collinear base")
    return EmbeddedPolygonalSpace([o] + pts, [(0, k) for k in range(1, len(pts) + 1)])


def chord_distance_sq(S: EmbeddedPolygonalSpace, p: SpacePoint, q: SpacePoint) -> Fraction:
    (x0, y0), (x1, y1) = S.coords(p), S.coords(q)
    return (x1 - x0) ** 2 + (y1 - y0) ** 2


def chord_distance(S: EmbeddedPolygonalSpace, p: SpacePoint, q: SpacePoint) -> Real:
    """Euclidean distance between embedded locations (exact when rational)."""
    return sqrt_length(chord_distance_sq(S, p, q))


def sum_of_sqrts_ge(a: Fraction, b: Fraction, c: Fraction) -> bool:
    """Decide sqrt(a) + sqrt(b) >= c exactly for rationals a, b >= 0."""
    a, b, c = Fraction(a), Fraction(b), Fraction(c)
    if c <= 0:
        return True
    # sqrt(a) >= c - sqrt(b); if the right side is <= 0 we are done
    if b >= c * c:
        return True
    rhs = c * c + b - a  # sqrt(a) >= c - sqrt(b)  <=>  2c sqrt(b) >= c^2 + b - a
    if rhs <= 0:
        return True
    return 4 * c * c * b >= rhs * rhs


# -- shortest paths ----------------------------------------------------------

_P, _Q = "p", "q"


def _graph(S: EmbeddedPolygonalSpace, p: SpacePoint, q: SpacePoint):
    """Vertex graph with interior points ``p`` and ``q`` spliced into their segments."""
    extra: dict[int, list[tuple[Fraction, str]]] = {}
    for name, pt in ((_P, p), (_Q, q)):
        if pt.vertex is None:
            extra.setdefault(pt.seg, []).append((pt.lam, name))
    adj: dict = {v: [] for v in range(len(S.vertices))}
    adj[_P] = []
    adj[_Q] = []
    for k, (i, j) in enumerate(S.segments):
        L = S.segment_length(k)
        chain = [(Fraction(0), i)] + sorted(extra.get(k, [])) + [(Fraction(1), j)]
        for (la, u), (lb, v) in zip(chain, chain[1:]):
            w = (lb - la) * L
            adj[u].append((v, w, k))
            adj[v].append((u, w, k))
    src = p.vertex if p.vertex is not None else _P
    dst = q.vertex if q.vertex is not None else _Q
    return adj, src, dst


def _tight(du: Real, w: Real, dv: Real) -> bool:
    if is_exact(du) and is_exact(w) and is_exact(dv):
        return w + dv == du
    return abs(float(w) + float(dv) - float(du)) <= 1e-12 * max(1.0, float(du))


def _shortest(S: EmbeddedPolygonalSpace, p: SpacePoint, q: SpacePoint):
    """Length, visited points and per-leg segments of the preferred shortest path.

    Among equal-length paths the one with the lexicographically least vertex
    sequence wins.
    """
    p, q = S.normalize(p), S.normalize(q)
    if p == q:
        return Fraction(0), [p], []
    adj, src, dst = _graph(S, p, q)
    dist: dict = {dst: Fraction(0)}
    heap = [(0.0, 0, dst)]
    done = set()
    counter = 1
    while heap:
        _, _, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w, _seg in adj[u]:
            nd = dist[u] + w
            if v not in dist or nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (float(nd), counter, v))
                counter += 1
    if src not in dist:
        raise DisconnectedSpaceError("points lie in different components")

    def key(v):
        if v == dst:
            return -1
        return v if isinstance(v, int) else len(adj)

    seq, legs = [src], []
    u = src
    while u != dst:
        options = [(v, seg) for v, w, seg in adj[u]
                   if v in dist and v not in seq and _tight(dist[u], w, dist[v])]
        v, seg = min(options, key=lambda o: (key(o[0]), o[1]))
        seq.append(v)
        legs.append(seg)
        u = v
    named = {_P: p, _Q: q}
    pts = [named[u] if u in named else S.vertex_point(u) for u in seq]
    return dist[src], pts, legs


def intrinsic_distance(S: EmbeddedPolygonalSpace, p: SpacePoint, q: SpacePoint) -> Real:
    """Length of a shortest path inside the space.

    Returned as a ``Fraction`` when every segment on the path has rational
    length, else as a ``float``.
    """
    return _shortest(S, p, q)[0]


def intrinsic_distances_from(S: EmbeddedPolygonalSpace, p: SpacePoint, targets: Sequence[SpacePoint]) -> list[Real]:
    return [intrinsic_distance(S, p, t) for t in targets]


@dataclass(frozen=True)
class LipschitzPath:
    """Piecewise constant-speed path; leg ``k`` runs inside segment ``legs[k]``."""

    space: EmbeddedPolygonalSpace = field(repr=False, compare=False)
    times: tuple
    points: tuple[SpacePoint, ...]
    legs: tuple

    @property
    def duration(self) -> Real:
        return self.times[-1]

    @property
    def start(self) -> SpacePoint:
        return self.points[0]

    @property
    def end(self) -> SpacePoint:
        return self.points[-1]

    def leg_length_sq(self, k: int) -> Fraction:
        seg = self.legs[k]
        if seg is None:
            return Fraction(0)
        a = self.space.param_on(self.points[k], seg)
        b = self.space.param_on(self.points[k + 1], seg)
        return (b - a) ** 2 * self.space.segment_length_sq(seg)

    def length(self) -> Real:
        return sum((sqrt_length(self.leg_length_sq(k)) for k in range(len(self.legs))), Fraction(0))

    def violations(self) -> list[int]:
        """Legs whose length exceeds their time span (exact when times are)."""
        bad = []
        if any(b <= a for a, b in zip(self.times, self.times[1:])) and len(self.times) > 1:
            return [k for k, (a, b) in enumerate(zip(self.times, self.times[1:])) if b <= a]
        for k in range(len(self.legs)):
            dt = self.times[k + 1] - self.times[k]
            lsq = self.leg_length_sq(k)
            if is_exact(dt):
                if lsq > dt * dt:
                    bad.append(k)
            elif math.sqrt(float(lsq)) > float(dt) + TOL:
                bad.append(k)
        return bad

    def __call__(self, t) -> SpacePoint:
        times = self.times
        if t < 0 or t > times[-1]:
            raise ValueError(f"time {t} outside [0, {times[-1]}]")
        if len(times) == 1 or t == 0:
            return self.points[0]
        if t == times[-1]:
            return self.points[-1]
        k = bisect.bisect_right([float(x) for x in times], float(t)) - 1
        k = min(max(k, 0), len(self.legs) - 1)
        if t == times[k]:
            return self.points[k]
        if t == times[k + 1]:
            return self.points[k + 1]
        seg = self.legs[k]
        a, b = self.points[k], self.points[k + 1]
        if seg is None or a == b:
            return a
        la, lb = self.space.param_on(a, seg), self.space.param_on(b, seg)
        frac = (t - times[k]) / (times[k + 1] - times[k])
        lam = la + (lb - la) * frac
        if not is_exact(lam):
            lam = min(max(Fraction(lam), Fraction(0)), Fraction(1))
        return self.space.point(seg, lam)

    def to_dict(self) -> dict:
        return {"times": [format_real(t) for t in self.times],
                "points": [p.to_dict() for p in self.points],
                "legs": list(self.legs)}

    @classmethod
    def from_dict(cls, space: EmbeddedPolygonalSpace, data: dict) -> LipschitzPath:
        return cls(space, tuple(parse_real(t) for t in data["times"]),
                   tuple(space.point_from_dict(p) for p in data["points"]), tuple(data["legs"]))


def _duration_suffices(length: Real, legs_sq: list[Fraction], duration: Real) -> bool:
    if is_exact(duration):
        if is_exact(length):
            return duration >= length
        if len(legs_sq) == 1:
            return duration >= 0 and duration * duration >= legs_sq[0]
    return float(duration) >= float(length) - TOL


def geodesic_path(S: EmbeddedPolygonalSpace, p: SpacePoint, q: SpacePoint, duration) -> LipschitzPath:
    """Shortest path from ``p`` to ``q`` traversed at constant speed over ``[0, duration]``."""
    if not isinstance(duration, float):
        duration = Fraction(duration)
    if duration < 0:
        raise DurationTooShortError("negative duration")
    length, pts, legs = _shortest(S, p, q)
    if length == 0:
        if duration == 0:
            return LipschitzPath(S, (Fraction(0),), (pts[0],), ())
        segs = S.segments_at(pts[0])
        return LipschitzPath(S, (Fraction(0), duration), (pts[0], pts[0]), (segs[0] if segs else None,))
    scratch = LipschitzPath(S, tuple(range(len(pts))), tuple(pts), tuple(legs))
    legs_sq = [scratch.leg_length_sq(k) for k in range(len(legs))]
    if not _duration_suffices(length, legs_sq, duration):
        raise DurationTooShortError(f"duration {duration} is shorter than the intrinsic distance {float(length):.12g}")
    times = [Fraction(0)]
    acc: Real = Fraction(0)
    for lsq in legs_sq[:-1]:
        acc = acc + sqrt_length(lsq)
        times.append(duration * acc / length)
    times.append(duration)
    return LipschitzPath(S, tuple(times), tuple(pts), tuple(legs))
