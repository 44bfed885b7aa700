"""Benchmark inputs: standard tracks from pants decompositions, twist words, catalog."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Sequence

from .errors import InvalidGluing, TrackError, UnknownCurve, UnknownName
from .formats import parse_track
from .moves import LEFT, RIGHT, SplitMove
from .track import Switch, TrainTrack, surface_signature, validate, is_recurrent

CATALOG = ("S05A", "S12A", "S20A", "pants_S20", "pants_S05")


@dataclass(frozen=True)
class PantsData:
    """A pants decomposition.

    ``pieces`` lists each pair of pants as three boundary entries, a curve
    name or ``None`` for a puncture. Every curve bounds exactly two entries.
    ``twists`` picks, per curve, the direction of the twist realised by
    splitting; the leaves spiralling into the curve from its two sides then
    run in opposite directions, as the gadget forces.
    """

    curves: tuple[str, ...]
    pieces: tuple[tuple[str | None, str | None, str | None], ...]
    twists: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class PantsTrack:
    track: TrainTrack
    curves: Mapping[str, tuple[int, int]]  # curve -> (large branch, small branch)

    def trainpath(self, curve: str) -> tuple[tuple[int, int], tuple[int, int]]:
        """The length-2 loop carrying the curve as (branch, direction) steps."""
        e, s = self.curves[curve]
        t = self.track
        w = t.locate((e, 1))[0]
        s_end_at_w = 0 if t.locate((s, 0))[0].id == w.id else 1
        return ((e, +1), (s, +1 if s_end_at_w == 0 else -1))


def _check(data: PantsData) -> None:
    count = Counter(c for p in data.pieces for c in p if c is not None)
    for c in data.curves:
        if count[c] != 2:
            raise InvalidGluing(f"curve {c} bounds {count[c]} pants entries instead of 2")
    stray = set(count) - set(data.curves)
    if stray:
        raise InvalidGluing(f"undeclared curve {sorted(stray)[0]}")
    for p in data.pieces:
        if len(p) != 3:
            raise InvalidGluing(f"pants piece {p} does not have three boundary entries")
        if all(c is None for c in p):
            raise InvalidGluing("a thrice-punctured sphere piece is isolated")
    for c, d in data.twists.items():
        if c not in data.curves or d not in (RIGHT, LEFT):
            raise InvalidGluing(f"bad twist entry {c}: {d}")


def pants_standard_track(data: PantsData) -> PantsTrack:
    _check(data)
    switches: list[Switch] = []
    nb, ns = [0], [0]

    def branch():
        nb[0] += 1
        return nb[0]

    def node():
        ns[0] += 1
        return ns[0]

    stems: dict[str, list[tuple[int, int]]] = {}
    loops = {}
    for c in data.curves:
        e, s, t1, t2 = branch(), branch(), branch(), branch()
        v, w = node(), node()
        if data.twists.get(c, RIGHT) == RIGHT:
            switches += [Switch(v, (e, 0), (t1, 0), (s, 0)), Switch(w, (e, 1), (t2, 0), (s, 1))]
        else:
            switches += [Switch(v, (e, 0), (s, 0), (t1, 0)), Switch(w, (e, 1), (s, 1), (t2, 0))]
        stems[c] = [(t1, 1), (t2, 1)]
        loops[c] = (e, s)

    used = Counter()
    for piece in data.pieces:
        ends = []
        for c in piece:
            if c is not None:
                ends.append(stems[c][used[c]])
                used[c] += 1
        if len(ends) == 1:
            x, u = branch(), node()
            switches.append(Switch(u, ends[0], (x, 0), (x, 1)))
        elif len(ends) == 2:
            x, y = branch(), branch()
            u1, u2 = node(), node()
            switches += [Switch(u1, ends[0], (x, 0), (y, 0)), Switch(u2, (x, 1), ends[1], (y, 1))]
        else:
            x, y, z = branch(), branch(), branch()
            u1, u2, u3 = node(), node(), node()
            switches += [Switch(u1, ends[0], (z, 1), (x, 0)),
                         Switch(u2, ends[1], (x, 1), (y, 0)),
                         Switch(u3, ends[2], (y, 1), (z, 0))]

    bare = TrainTrack.build(switches)
    track = TrainTrack.build(switches, [g.key for g in bare.regions if g.cusps == 1])
    report = validate(track)
    if not report.ok:
        raise InvalidGluing("; ".join(report.problems))
    try:
        surface_signature(track)
    except TrackError as exc:
        raise InvalidGluing(str(exc)) from None
    if is_recurrent(track) is None:
        raise InvalidGluing("the glued track is not recurrent")
    return PantsTrack(track, loops)


def recover_pants_map(track: TrainTrack) -> dict[int, tuple[int, int]]:
    """Map each large branch to the small branch closing it into a length-2 loop.

    Only defined when every large branch lies on such a loop.
    """
    out = {}
    for e in track.large_branches():
        v, w = track.locate((e, 0))[0], track.locate((e, 1))[0]
        for slot in ("A", "B"):
            s = v.slot(slot)
            if w.slot(slot)[0] == s[0] and w.slot(slot) != s:
                out[e] = s[0]
    return out


def twist_word(pants: PantsTrack, curve: str) -> list[SplitMove]:
    """Two splits realising the twist about a pants curve: the large branch, then the small one."""
    if curve not in pants.curves:
        raise UnknownCurve(f"unknown curve {curve}")
    e, s = pants.curves[curve]
    slot = pants.track.slot_of(s, 0)
    d = RIGHT if slot == "B" else LEFT
    return [SplitMove(e, d), SplitMove(s, d)]


def twist_power_word(pants: PantsTrack, exponents: Mapping[str, int]) -> list[SplitMove]:
    word = []
    for c in pants.curves:
        word += twist_word(pants, c) * exponents.get(c, 0)
    return word


PANTS_S05 = PantsData(("g1", "g2"), (("g1", None, None), ("g1", None, "g2"), ("g2", None, None)))
PANTS_S20 = PantsData(("g1", "g2", "g3"), (("g1", "g2", "g3"), ("g1", "g2", "g3")))
PANTS_S12 = PantsData(("g1", "g2"), (("g1", "g1", "g2"), ("g2", None, None)))


def pants_catalog(name: str) -> PantsTrack:
    data = {"pants_S05": PANTS_S05, "pants_S20": PANTS_S20}.get(name)
    if data is None:
        raise UnknownName(f"no pants data named {name}")
    return pants_standard_track(data)


def catalog(name: str) -> TrainTrack:
    if name not in CATALOG:
        raise UnknownName(f"unknown catalog track {name}; known: {', '.join(CATALOG)}")
    text = resources.files("ttkit.data").joinpath(f"{name}.tt").read_text(encoding="utf-8")
    return parse_track(text)


def catalog_path(name: str):
    if name not in CATALOG:
        raise UnknownName(f"unknown catalog track {name}")
    return resources.files("ttkit.data").joinpath(f"{name}.tt")
