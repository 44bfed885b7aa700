"""Colored trivalent graphs: the mapping-class orbit invariant of a complete track.

Each switch becomes a vertex with one red (large), one yellow (small left)
and one green (small right) half-edge. Because every vertex sees each color
exactly once, a breadth-first walk from a chosen start vertex that visits
half-edges in the order red, yellow, green fixes a numbering of all vertices.
The certificate is the smallest resulting encoding over all start vertices,
so it is exact rather than heuristic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import SignatureMismatch
from .track import TrainTrack, surface_signature

COLORS = ("red", "yellow", "green")
_SLOT_COLOR = {"L": 0, "A": 1, "B": 2}


@dataclass(frozen=True)
class ColoredGraph:
    # vertex -> (half-edge of color red, yellow, green); a half-edge is (edge, end)
    vertices: Mapping[int, tuple[tuple[int, int], tuple[int, int], tuple[int, int]]]
    # punctured regions, each given by one boundary side (edge, end)
    punctured: tuple[tuple[int, int], ...] = ()

    @property
    def edges(self) -> list[int]:
        return sorted({h[0] for hs in self.vertices.values() for h in hs})

    def where(self) -> dict[tuple[int, int], tuple[int, int]]:
        """half-edge -> (vertex, color index)"""
        return {h: (v, c) for v, hs in self.vertices.items() for c, h in enumerate(hs)}

    def relabel(self, vmap: Mapping[int, int], emap: Mapping[int, int]) -> "ColoredGraph":
        verts = {vmap[v]: tuple((emap[e], end) for e, end in hs) for v, hs in self.vertices.items()}
        return ColoredGraph(verts, tuple((emap[e], end) for e, end in self.punctured))


def colored_graph(track: TrainTrack) -> ColoredGraph:
    verts = {s.id: (s.L, s.A, s.B) for s in track.switches}
    from .track import side_of_key

    return ColoredGraph(verts, tuple(side_of_key(k) for k in sorted(track.punctured)))


@dataclass(frozen=True)
class ColoredRegion:
    sides: tuple[tuple[int, int], ...]
    cusps: int
    punctured: bool


def regions_from_colors(g: ColoredGraph) -> list[ColoredRegion]:
    """Region boundaries from colors only.

    Entering a vertex on red leaves on yellow; entering on green leaves on
    red; entering on yellow meets a cusp and leaves on green.
    """
    where = g.where()
    seen = set()
    regions = []
    marked = set(g.punctured)
    for start in sorted(where):
        if start in seen:
            continue
        sides, cusps = [], 0
        h = start
        while h not in seen:
            seen.add(h)
            sides.append(h)
            v, c = where[h]
            out = g.vertices[v][(1, 2, 0)[c]]
            cusps += c == 1
            h = (out[0], 1 - out[1])
        regions.append(ColoredRegion(tuple(sides), cusps, bool(marked & set(sides))))
    return regions


def _encode_from(g: ColoredGraph, where, start: int) -> tuple:
    label = {start: 0}
    order = [start]
    i = 0
    while i < len(order):
        v = order[i]
        i += 1
        for h in g.vertices[v]:
            u, _ = where[(h[0], 1 - h[1])]
            if u not in label:
                label[u] = len(order)
                order.append(u)
    if len(order) != len(g.vertices):
        raise ValueError("colored graph is not connected")
    body = []
    for v in order:
        for h in g.vertices[v]:
            u, c = where[(h[0], 1 - h[1])]
            body.append((label[u], c))
    return tuple(body), label


def _puncture_code(g: ColoredGraph, where, label) -> tuple:
    regions = regions_from_colors(g)
    code = []
    for r in regions:
        if r.punctured:
            code.append(min((label[where[h][0]], where[h][1]) for h in r.sides))
    return tuple(sorted(code))


def canonical_form(g: ColoredGraph) -> str:
    """Hex certificate; equal iff color- and puncture-preserving isomorphic."""
    where = g.where()
    best = None
    for start in g.vertices:
        body, label = _encode_from(g, where, start)
        cand = (body, _puncture_code(g, where, label))
        if best is None or cand < best:
            best = cand
    body, punct = best
    n = len(g.vertices)
    words = [n, len(punct)]
    for lab, c in body:
        words.append(lab * 3 + c)
    for lab, c in punct:
        words.append(lab * 3 + c)
    width = max(2, (max(words).bit_length() + 7) // 8)
    return bytes([width]).hex() + b"".join(w.to_bytes(width, "big") for w in words).hex()


def certificate(track: TrainTrack) -> str:
    return canonical_form(colored_graph(track))


def automorphism_count(g: ColoredGraph) -> int:
    """Number of start vertices realising the canonical encoding."""
    where = g.where()
    codes = []
    for start in g.vertices:
        body, label = _encode_from(g, where, start)
        codes.append((body, _puncture_code(g, where, label)))
    return codes.count(min(codes))


def isomorphism(a: TrainTrack, b: TrainTrack) -> dict[int, int] | None:
    """A branch map a -> b realising an isomorphism of colored graphs with punctures."""
    ga, gb = colored_graph(a), colored_graph(b)
    wa, wb = ga.where(), gb.where()
    if len(ga.vertices) != len(gb.vertices):
        return None
    sa = min(ga.vertices)
    ca, la = _encode_from(ga, wa, sa)
    pa = _puncture_code(ga, wa, la)
    for sb in gb.vertices:
        cb, lb = _encode_from(gb, wb, sb)
        if cb != ca or _puncture_code(gb, wb, lb) != pa:
            continue
        inv_b = {lab: v for v, lab in lb.items()}
        emap = {}
        for v, lab in la.items():
            for h, k in zip(ga.vertices[v], gb.vertices[inv_b[lab]]):
                emap[h[0]] = k[0]
        return emap
    return None


def same_orbit(a: TrainTrack, b: TrainTrack) -> bool:
    if surface_signature(a) != surface_signature(b):
        raise SignatureMismatch(f"{surface_signature(a)} differs from {surface_signature(b)}")
    return certificate(a) == certificate(b)
