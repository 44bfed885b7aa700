"""The ambient graph of complete train tracks, explored by breadth-first search.

Vertices are complete tracks up to isotopy; edges are splits (and, unless
``directed``, their inverse collapses), optionally shifts. A track reached by
a word is identified by its labelled combinatorial key together with the
images of a fixed basis of the starting track's weight space under the
linear weight maps of the moves along the word. The key alone cannot tell a
track from its image under a mapping class that preserves the labelling,
such as a Dehn twist; the weight images can. Two isotopic tracks reached
with different labellings still get different identities, so ball sizes are
upper bounds.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
import random
from fractions import Fraction
from math import lcm

from . import moves as mv
from .cone import cone_ball
from .moves import LEFT, RIGHT, ShiftMove, SplitMove
from .errors import TrackError
from .track import TrainTrack, is_recurrent, measure_basis, random_measure


def _split_frame(track: TrainTrack, frame, move: SplitMove):
    lab = mv.split_labels(track, move.at)
    sign = 1 if move.direction == RIGHT else -1
    out = []
    for vec in frame:
        v = dict(vec)
        v[move.at] = sign * (vec[lab["a"][0]] - vec[lab["b"][0]])
        out.append(v)
    return out


def _step_frame(track: TrainTrack, new: TrainTrack, frame, move):
    if isinstance(move, SplitMove):
        return _split_frame(track, frame, move)
    if isinstance(move, ShiftMove):
        return [mv.measure_after_shift(track, v, move.at, new) for v in frame]
    return [mv.measure_after_collapse(v, move.at, new) for v in frame]


def _frame_key(frame, branches):
    return tuple(tuple(v[b] for b in branches) for v in frame)


@dataclass
class AmbientBall:
    center: TrainTrack
    radius: int
    with_shifts: bool
    directed: bool
    vertices: list = field(default_factory=list)  # index -> (track, distance, word)
    adjacency: list = field(default_factory=list)  # index -> set of indices
    ids: dict = field(default_factory=dict, repr=False)  # (key, frame) -> index
    frames: list = field(default_factory=list, repr=False)

    def counts(self) -> list[int]:
        """Number of vertices at each distance 0..radius."""
        out = [0] * (self.radius + 1)
        for _, d, _ in self.vertices:
            out[d] += 1
        return out

    def distances_from(self, i: int) -> list:
        dist = [-1] * len(self.vertices)
        dist[i] = 0
        queue = deque([i])
        while queue:
            u = queue.popleft()
            for w in self.adjacency[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def locate(self, word) -> int:
        """Index of the vertex reached from the center by ``word``."""
        return self.ids[vertex_id(self.center, word)]

    def _add(self, vid, track, d, word, frame) -> int:
        i = len(self.vertices)
        self.ids[vid] = i
        self.vertices.append((track, d, word))
        self.frames.append(frame)
        self.adjacency.append(set())
        return i


def vertex_id(track: TrainTrack, word) -> tuple:
    """Identity of the track reached from ``track`` by ``word``, as used by ``tt_ball``."""
    frame = _integral_basis(track)
    for m in word:
        new = mv.apply_move(track, m).track
        frame = _step_frame(track, new, frame, m)
        track = new
    return track.key(), _frame_key(frame, track.branches)


def _moves(track: TrainTrack, with_shifts: bool, directed: bool):
    for e in track.large_branches():
        for d in (RIGHT, LEFT):
            yield SplitMove(e, d)
    if not directed:
        yield from mv.collapsible(track)
    if with_shifts:
        for b in track.mixed_branches():
            yield ShiftMove(b)


def _integral_basis(track: TrainTrack) -> list[dict]:
    out = []
    for v in measure_basis(track):
        den = lcm(*(Fraction(x).denominator for x in v.values()))
        out.append({b: int(Fraction(x) * den) for b, x in v.items()})
    return out


def _witnesses(track: TrainTrack, count: int = 3) -> list[dict]:
    rng = random.Random(0)
    return [{b: Fraction(x) for b, x in random_measure(track, rng).items()} for _ in range(count)]


def _carried_witnesses(track, move, new, witnesses):
    """Positive measures on ``new`` obtained from those on ``track``; empty if none survives."""
    out = []
    for mu in witnesses:
        try:
            out.append(mv.transport_measure(track, mu, move, new))
        except TrackError:
            continue
    return out


def tt_ball(track: TrainTrack, radius: int, with_shifts: bool = False, directed: bool = False) -> AmbientBall:
    """All complete tracks within ``radius`` moves of ``track``."""
    ball = AmbientBall(track, radius, with_shifts, directed)
    frame = _integral_basis(track)
    ball._add((track.key(), _frame_key(frame, track.branches)), track, 0, (), frame)
    witnesses = [_witnesses(track)]
    queue = deque([0])
    while queue:
        i = queue.popleft()
        t, d, word = ball.vertices[i]
        if d == radius:
            continue
        fr = ball.frames[i]
        for m in _moves(t, with_shifts, directed):
            new = mv.apply_move(t, m).track
            wit = _carried_witnesses(t, m, new, witnesses[i])
            if not wit:
                point = is_recurrent(new)
                if point is None:
                    continue
                wit = [point]
            nf = _step_frame(t, new, fr, m)
            vid = (new.key(), _frame_key(nf, new.branches))
            j = ball.ids.get(vid)
            if j is None:
                j = ball._add(vid, new, d + 1, word + (m,), nf)
                witnesses.append(wit)
                queue.append(j)
            ball.adjacency[i].add(j)
            if not directed:
                ball.adjacency[j].add(i)
    return ball


@dataclass(frozen=True)
class DistortionReport:
    radius: int
    cone_vertices: int
    ambient_vertices: int
    pairs: int
    max_ratio: Fraction
    worst_pair: tuple

    def lines(self) -> list[str]:
        return [f"radius {self.radius}",
                f"cone vertices {self.cone_vertices}",
                f"ambient vertices {self.ambient_vertices}",
                f"pairs {self.pairs}",
                f"max ratio {self.max_ratio} ({float(self.max_ratio):.4f})",
                f"worst pair {self.worst_pair[0]} {self.worst_pair[1]}"]


def distortion(track: TrainTrack, lam, radius: int, with_shifts: bool = False) -> DistortionReport:
    """Compare cone distance with ambient distance for every pair of cone vertices.

    The ratio is cone distance over ambient distance, so it is at least 1;
    ambient distances are measured inside the ambient ball of the same radius.
    """
    cone = cone_ball(track, lam, radius)
    ball = tt_ball(track, radius, with_shifts=with_shifts)
    verts = cone.sorted_vertices()
    ids = [ball.locate(v.word) for v in verts]
    best, worst, pairs = Fraction(1), ((), ()), 0
    for i, (u, uid) in enumerate(zip(verts, ids)):
        dist = ball.distances_from(uid)
        for v, vid in zip(verts[i + 1:], ids[i + 1:]):
            de = sum(abs(a - b) for a, b in zip(u.phi, v.phi))
            da = dist[vid]
            pairs += 1
            r = Fraction(de, da)
            if r > best:
                best, worst = r, (u.phi, v.phi)
    return DistortionReport(radius, len(verts), len(ball.vertices), pairs, best, worst)
