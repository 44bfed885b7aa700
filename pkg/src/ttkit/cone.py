"""Flat cones: tracks reachable from a basepoint by lambda-splitting sequences.

Vertices are keyed by their lattice point: the number of splits performed at
each inherited branch identifier of the basepoint. Each fast-path query (meet,
join, distance) has a brute-force counterpart working on the cone graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .errors import NotInCone, RadiusExceeded, TieCollision, NotCarried, TrackError
from .moves import SplitMove, as_proxy, lambda_step
from .track import TrainTrack, validate

Phi = tuple  # tuple of nonnegative ints indexed like FlatCone.index


class ConeInconsistency(AssertionError):
    """Two splitting words reached one lattice point with different tracks."""


@dataclass(frozen=True)
class ConeVertex:
    track: TrainTrack
    phi: Phi
    word: tuple[SplitMove, ...]
    proxy: object = field(repr=False, compare=False, default=None)

    @property
    def norm(self) -> int:
        return sum(self.phi)


@dataclass
class FlatCone:
    basepoint: TrainTrack
    proxy: object
    radius: int
    index: tuple[int, ...]
    vertices: dict = field(default_factory=dict)
    edges: list = field(default_factory=list)  # (phi_from, phi_to, branch, direction)
    truncated: list = field(default_factory=list)  # (phi, branch, reason)
    collisions: int = 0

    def position(self, b: int) -> int:
        return self.index.index(b)

    def unit(self, phi: Phi, b: int) -> Phi:
        i = self.position(b)
        return phi[:i] + (phi[i] + 1,) + phi[i + 1:]

    def __getitem__(self, phi) -> ConeVertex:
        try:
            return self.vertices[tuple(phi)]
        except KeyError:
            raise NotInCone(f"{tuple(phi)} is not a vertex of the enumerated cone") from None

    def __contains__(self, phi) -> bool:
        return tuple(phi) in self.vertices

    def sorted_vertices(self) -> list[ConeVertex]:
        return [self.vertices[p] for p in sorted(self.vertices)]

    def ball(self, k: int) -> list[ConeVertex]:
        return [v for v in self.vertices.values() if v.norm <= k]

    @property
    def origin(self) -> ConeVertex:
        return self.vertices[(0,) * len(self.index)]

    def children(self, phi) -> list[Phi]:
        return self._out.get(tuple(phi), [])

    def neighbours(self, phi) -> list[Phi]:
        return self._adj.get(tuple(phi), [])

    def _index_edges(self):
        self._out, self._adj = {}, {}
        for a, b, _, _ in self.edges:
            self._out.setdefault(a, []).append(b)
            self._adj.setdefault(a, []).append(b)
            self._adj.setdefault(b, []).append(a)


def cone_ball(basepoint: TrainTrack, lam, radius: int, check: bool = True) -> FlatCone:
    """Breadth-first enumeration of the flat cone up to lattice norm ``radius``.

    Splits that hit a tie truncate the cone at that vertex; the truncation is
    recorded rather than raised.
    """
    lam = as_proxy(lam)
    index = tuple(basepoint.branches)
    cone = FlatCone(basepoint, lam, radius, index)
    root = ConeVertex(basepoint, (0,) * len(index), (), lam)
    cone.vertices[root.phi] = root
    level = [root]
    for _ in range(radius):
        nxt = []
        for v in level:
            for e in v.track.large_branches():
                try:
                    out, d = lambda_step(v.track, e, v.proxy)
                except (TieCollision, NotCarried) as exc:
                    cone.truncated.append((v.phi, e, type(exc).__name__))
                    continue
                phi = cone.unit(v.phi, e)
                cone.edges.append((v.phi, phi, e, d))
                old = cone.vertices.get(phi)
                if old is not None:
                    cone.collisions += 1
                    if old.track.key() != out.track.key():
                        raise ConeInconsistency(f"lattice point {phi} reached by two different tracks")
                    continue
                if check and not validate(out.track).ok:
                    raise ConeInconsistency(f"invalid track at {phi}")
                w = ConeVertex(out.track, phi, v.word + (SplitMove(e, d),), out.proxy)
                cone.vertices[phi] = w
                nxt.append(w)
        level = nxt
    cone._index_edges()
    return cone


def phi(cone: FlatCone, word: Sequence[SplitMove]) -> Phi:
    """Lattice point of a lambda-splitting word replayed from the basepoint."""
    track, lam = cone.basepoint, cone.proxy
    point = (0,) * len(cone.index)
    for m in word:
        out, d = lambda_step(track, m.at, lam)
        if d != m.direction:
            raise NotCarried(f"{m} is not a lambda-split")
        track, lam = out.track, out.proxy
        point = cone.unit(point, m.at)
    return point


def replay(cone: FlatCone, word: Sequence[SplitMove]) -> TrainTrack:
    track, lam = cone.basepoint, cone.proxy
    for m in word:
        out, d = lambda_step(track, m.at, lam)
        if d != m.direction:
            raise NotCarried(f"{m} is not a lambda-split")
        track, lam = out.track, out.proxy
    return track


def _phi(v) -> Phi:
    return v.phi if isinstance(v, ConeVertex) else tuple(v)


def theta_minus(cone: FlatCone, s, t) -> ConeVertex:
    a, b = cone[_phi(s)], cone[_phi(t)]
    return cone[tuple(map(min, a.phi, b.phi))]


def theta_plus(cone: FlatCone, s, t) -> ConeVertex:
    a, b = cone[_phi(s)], cone[_phi(t)]
    point = tuple(map(max, a.phi, b.phi))
    if point not in cone:
        raise RadiusExceeded(f"join {point} lies outside the enumerated ball")
    return cone[point]


def distance(cone: FlatCone, s, t) -> int:
    a, b = cone[_phi(s)], cone[_phi(t)]
    return sum(abs(x - y) for x, y in zip(a.phi, b.phi))


# -- brute force on the cone graph -------------------------------------------------

def descendants(cone: FlatCone, p) -> set:
    """Vertices reachable by directed splitting edges, p included."""
    p = _phi(p)
    seen, stack = {p}, [p]
    while stack:
        for q in cone.children(stack.pop()):
            if q not in seen:
                seen.add(q)
                stack.append(q)
    return seen


def graph_distances(cone: FlatCone, sources) -> dict:
    """Undirected BFS distances in the enumerated cone graph from a set of vertices."""
    dist = {_phi(s): 0 for s in sources}
    queue = deque(dist)
    while queue:
        p = queue.popleft()
        for q in cone.neighbours(p):
            if q not in dist:
                dist[q] = dist[p] + 1
                queue.append(q)
    return dist


def brute_theta_minus(cone: FlatCone, s, t, desc=None) -> Phi:
    desc = desc or {}

    def d(p):
        if p not in desc:
            desc[p] = descendants(cone, p)
        return desc[p]

    a, b = _phi(s), _phi(t)
    common = [p for p in cone.vertices if a in d(p) and b in d(p)]
    top = [p for p in common if all(p in d(q) for q in common)]
    if len(top) != 1:
        raise ConeInconsistency(f"no unique maximal common ancestor of {a} and {b}")
    return top[0]


def brute_theta_plus(cone: FlatCone, s, t, desc=None) -> Phi:
    desc = desc or {}

    def d(p):
        if p not in desc:
            desc[p] = descendants(cone, p)
        return desc[p]

    common = d(_phi(s)) & d(_phi(t))
    bottom = [p for p in common if common <= d(p)]
    if len(bottom) != 1:
        raise RadiusExceeded("no unique minimal common descendant inside the ball")
    return bottom[0]


@dataclass
class ConvexityReport:
    sigma: Phi
    pairs_checked: int = 0
    geodesic_violations: list = field(default_factory=list)
    hausdorff: int = 0
    hausdorff_bound: int = 0
    far_vertices: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.geodesic_violations and not self.far_vertices


def subcone_convexity_check(cone: FlatCone, sigma, radius: int | None = None) -> ConvexityReport:
    """Exhaustive geodesic and Hausdorff check of the sub-cone below ``sigma``.

    Geodesics are enumerated only for pairs whose join stays inside ``radius``;
    those geodesics then lie inside the enumerated ball. The Hausdorff bound is
    checked for every vertex of norm at most ``radius``. The cone should be
    enumerated to ``radius + |sigma|`` so the nearest sub-cone point is present.
    """
    radius = cone.radius if radius is None else radius
    s = _phi(sigma)
    bound = sum(s)
    rep = ConvexityReport(s, hausdorff_bound=bound)
    sub = descendants(cone, s)
    inner = sorted(p for p in sub if sum(p) <= radius)
    dist = {p: graph_distances(cone, [p]) for p in inner}
    for i, x in enumerate(inner):
        for y in inner[i + 1:]:
            if sum(map(max, x, y)) > radius:
                continue
            rep.pairs_checked += 1
            dxy = dist[x][y]
            for z, dz in dist[x].items():
                if dz + dist[y].get(z, 1 << 30) == dxy and z not in sub:
                    rep.geodesic_violations.append((x, y, z))
    near = graph_distances(cone, sub)
    for p in cone.vertices:
        if sum(p) <= radius:
            d = near.get(p)
            if d is None or d > bound:
                rep.far_vertices.append((p, d))
            else:
                rep.hausdorff = max(rep.hausdorff, d)
    return rep


def growth(cone: FlatCone) -> list[int]:
    """|B(k)| for k = 0..radius."""
    counts = [0] * (cone.radius + 1)
    for p in cone.vertices:
        counts[sum(p)] += 1
    out, total = [], 0
    for c in counts:
        total += c
        out.append(total)
    return out


def full_split_target(basepoint: TrainTrack, lam, p: int):
    """The p-fold full lambda-split with its lattice point."""
    from .moves import full_lambda_split

    lam = as_proxy(lam)
    track, point, word = basepoint, dict.fromkeys(basepoint.branches, 0), []
    for _ in range(p):
        out = full_lambda_split(track, lam)
        for m in out.moves:
            point[m.at] += 1
        word += out.moves
        track, lam = out.track, out.proxy
    return track, tuple(point[b] for b in basepoint.branches), word


def splitting_search(track: TrainTrack, lam, start_phi: Phi, target_phi: Phi,
                     index: Sequence[int], target_key=None):
    """Depth-first lambda-splitting search from a vertex to a lattice point.

    Only splits that keep the lattice point below the target are tried.
    Returns the witness word or None.
    """
    lam = as_proxy(lam)
    pos = {b: i for i, b in enumerate(index)}
    seen = set()

    def go(track, lam, point):
        if point == target_phi:
            return [] if target_key is None or track.key() == target_key else None
        if point in seen:
            return None
        seen.add(point)
        for e in track.large_branches():
            i = pos[e]
            if point[i] >= target_phi[i]:
                continue
            try:
                out, d = lambda_step(track, e, lam)
            except TrackError:
                continue
            rest = go(out.track, out.proxy, point[:i] + (point[i] + 1,) + point[i + 1:])
            if rest is not None:
                return [SplitMove(e, d)] + rest
        return None

    return go(track, lam, tuple(start_phi))


def cone_json(cone: FlatCone) -> dict:
    verts = []
    for v in cone.sorted_vertices():
        verts.append({"phi": list(v.phi), "word": [str(m) for m in v.word],
                      "large": v.track.large_branches()})
    edges = sorted((list(a), list(b), e, d) for a, b, e, d in cone.edges)
    return {
        "schema": "ttkit-1",
        "kind": "flat-cone",
        "radius": cone.radius,
        "index": list(cone.index),
        "vertices": verts,
        "edges": [{"from": a, "to": b, "branch": e, "direction": d} for a, b, e, d in edges],
        "truncated": [{"phi": list(p), "branch": e, "reason": r} for p, e, r in sorted(cone.truncated)],
    }


def cone_dot(cone: FlatCone) -> str:
    names = {v.phi: f"v{i}" for i, v in enumerate(cone.sorted_vertices())}
    lines = ["digraph cone {"]
    for v in cone.sorted_vertices():
        lines.append(f'  {names[v.phi]} [label="{",".join(map(str, v.phi))}"];')
    for a, b, e, d in sorted(cone.edges):
        lines.append(f'  {names[a]} -> {names[b]} [label="{e}{"R" if d == "right" else "L"}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
