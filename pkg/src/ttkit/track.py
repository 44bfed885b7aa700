"""Generic train tracks as ribbon graphs with marked punctured regions.

A switch has three slots. ``L`` holds the large half-branch, ``A`` the small
half-branch lying to the left when looking along the large branch into the
switch, and ``B`` the one lying to the right. A half-branch is a pair
``(branch, end)`` with ``end`` in ``{0, 1}``.

A *side* ``(b, e)`` is the traversal of branch ``b`` towards its end ``e``
with the complementary region on the left. It is also written ``(b, e, "L")``;
the same side seen from the other end is ``(b, 1 - e, "R")``. A region is
identified by the smallest of these names over its boundary.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

from . import lp
from .errors import ExceptionalSurface, MalformedSlots, UnknownBranch

SLOTS = ("L", "A", "B")


@dataclass(frozen=True, order=True)
class Switch:
    id: int
    L: tuple[int, int]
    A: tuple[int, int]
    B: tuple[int, int]

    def slot(self, name: str) -> tuple[int, int]:
        return getattr(self, name)

    def slots(self):
        return (("L", self.L), ("A", self.A), ("B", self.B))

    def mirrored(self) -> "Switch":
        return Switch(self.id, self.L, self.B, self.A)


@dataclass(frozen=True)
class Region:
    key: tuple[int, int, str]
    sides: tuple[tuple[int, int], ...]
    cusps_after: tuple[int, ...]  # indices i such that a cusp follows sides[i]
    punctured: bool

    @property
    def cusps(self) -> int:
        return len(self.cusps_after)

    def segments(self) -> list[tuple[tuple[int, int], ...]]:
        """Maximal smooth trainpath pieces between consecutive cusps."""
        if not self.cusps_after:
            return [self.sides]
        out, start = [], 0
        for i in self.cusps_after:
            out.append(self.sides[start : i + 1])
            start = i + 1
        if start < len(self.sides):
            out[0] = self.sides[start:] + out[0]
        return out

    @property
    def kind(self) -> str:
        if self.cusps == 3 and not self.punctured:
            return "trigon"
        if self.cusps == 1 and self.punctured:
            return "punctured monogon"
        return f"{self.cusps}-gon" + (" (punctured)" if self.punctured else "")


@dataclass(frozen=True)
class SurfaceSignature:
    genus: int
    punctures: int

    @property
    def complexity(self) -> int:
        return 3 * self.genus - 3 + self.punctures

    @property
    def dimension(self) -> int:
        return 6 * self.genus - 6 + 2 * self.punctures


@dataclass(frozen=True)
class ValidationReport:
    generic: bool
    connected: bool
    maximal: bool
    slot_consistent: bool
    problems: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.generic and self.connected and self.maximal and self.slot_consistent


def side_names(side: tuple[int, int]) -> tuple[tuple[int, int, str], tuple[int, int, str]]:
    b, e = side
    return (b, e, "L"), (b, 1 - e, "R")


def side_of_key(key: tuple[int, int, str]) -> tuple[int, int]:
    b, e, lr = key
    return (b, e) if lr == "L" else (b, 1 - e)


@dataclass(frozen=True)
class TrainTrack:
    switches: tuple[Switch, ...]
    punctured: frozenset = field(default_factory=frozenset)

    @classmethod
    def build(cls, switches: Iterable[Switch], punctured: Iterable = ()) -> "TrainTrack":
        """Assemble a track, checking slot consistency and normalising puncture keys."""
        sws = tuple(sorted(switches, key=lambda s: s.id))
        raw = cls(sws, frozenset())
        raw.locations  # raises MalformedSlots
        keys = set()
        for p in punctured:
            keys.add(raw.region_key_of(side_of_key(p)))
        return cls(sws, frozenset(keys))

    # -- lookups --------------------------------------------------------

    @cached_property
    def locations(self) -> dict[tuple[int, int], tuple[int, str]]:
        where: dict[tuple[int, int], tuple[int, str]] = {}
        ids = Counter(s.id for s in self.switches)
        dup = [i for i, c in ids.items() if c > 1]
        if dup:
            raise MalformedSlots(f"duplicate switch id {dup[0]}")
        for sw in self.switches:
            for name, hb in sw.slots():
                if hb[1] not in (0, 1):
                    raise MalformedSlots(f"bad end {hb} at switch {sw.id}")
                if hb in where:
                    raise MalformedSlots(f"branch end {hb[0]}.{hb[1]} occurs twice")
                where[hb] = (sw.id, name)
        for b, e in list(where):
            if (b, 1 - e) not in where:
                raise MalformedSlots(f"branch end {b}.{1 - e} is missing")
        return where

    @cached_property
    def by_id(self) -> dict[int, Switch]:
        return {s.id: s for s in self.switches}

    @cached_property
    def branches(self) -> tuple[int, ...]:
        return tuple(sorted({b for b, _ in self.locations}))

    def switch(self, sid: int) -> Switch:
        return self.by_id[sid]

    def locate(self, hb: tuple[int, int]) -> tuple[Switch, str]:
        try:
            sid, slot = self.locations[hb]
        except KeyError:
            raise UnknownBranch(f"no branch end {hb}") from None
        return self.by_id[sid], slot

    def slot_of(self, b: int, end: int) -> str:
        return self.locate((b, end))[1]

    def _check_branch(self, b: int) -> None:
        if (b, 0) not in self.locations:
            raise UnknownBranch(f"unknown branch {b}")

    def classify(self, b: int) -> str:
        self._check_branch(b)
        n = sum(self.slot_of(b, e) == "L" for e in (0, 1))
        return ("small", "mixed", "large")[n]

    def large_branches(self) -> list[int]:
        return [b for b in self.branches if self.classify(b) == "large"]

    def mixed_branches(self) -> list[int]:
        return [b for b in self.branches if self.classify(b) == "mixed"]

    def small_branches(self) -> list[int]:
        return [b for b in self.branches if self.classify(b) == "small"]

    # -- regions --------------------------------------------------------

    def next_side(self, side: tuple[int, int]) -> tuple[tuple[int, int], bool]:
        """Successor of a side on its region boundary and whether a cusp lies between."""
        sw, slot = self.locate(side)
        if slot == "L":
            out, cusp = sw.A, False
        elif slot == "B":
            out, cusp = sw.L, False
        else:
            out, cusp = sw.B, True
        return (out[0], 1 - out[1]), cusp

    @cached_property
    def _region_cycles(self):
        seen: set[tuple[int, int]] = set()
        cycles = []
        for start in sorted(self.locations):
            if start in seen:
                continue
            sides, cusps = [], []
            s = start
            while s not in seen:
                seen.add(s)
                sides.append(s)
                s, c = self.next_side(s)
                if c:
                    cusps.append(len(sides) - 1)
            cycles.append((sides, cusps))
        return cycles

    @cached_property
    def _side_region(self) -> dict[tuple[int, int], tuple[int, int, str]]:
        table = {}
        for sides, _ in self._region_cycles:
            key = min(n for s in sides for n in side_names(s))
            for s in sides:
                table[s] = key
        return table

    def region_key_of(self, side: tuple[int, int]) -> tuple[int, int, str]:
        try:
            return self._side_region[side]
        except KeyError:
            raise UnknownBranch(f"no side {side}") from None

    @cached_property
    def regions(self) -> tuple[Region, ...]:
        out = []
        for sides, cusps in self._region_cycles:
            key = min(n for s in sides for n in side_names(s))
            # rotate so the boundary starts right after a cusp, at the smallest such side
            n = len(sides)
            starts = [(c + 1) % n for c in cusps] or [0]
            r = min(starts, key=lambda i: sides[i])
            sides = sides[r:] + sides[:r]
            cusps = tuple(sorted((c - r) % n for c in cusps))
            out.append(Region(key, tuple(sides), cusps, key in self.punctured))
        return tuple(sorted(out, key=lambda g: g.key))

    # -- global structure -------------------------------------------------

    def is_connected(self) -> bool:
        if not self.switches:
            return True
        adj: dict[int, set[int]] = {s.id: set() for s in self.switches}
        for b in self.branches:
            u = self.locations[(b, 0)][0]
            v = self.locations[(b, 1)][0]
            adj[u].add(v)
            adj[v].add(u)
        start = self.switches[0].id
        stack, seen = [start], {start}
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(adj)

    def euler_characteristic(self) -> int:
        return len(self.switches) - len(self.branches) + len(self.regions)

    def key(self):
        """Labelled identity ignoring switch ids: slot triples plus puncture keys."""
        return (frozenset((s.L, s.A, s.B) for s in self.switches), self.punctured)

    def relabel(self, branch_map: Mapping[int, int], switch_map: Mapping[int, int] | None = None,
                flip: Iterable[int] = ()) -> "TrainTrack":
        """Rename branches (and switches); branches in ``flip`` have their ends swapped."""
        flip = set(flip)

        def hb(h):
            b, e = h
            return (branch_map[b], 1 - e if b in flip else e)

        sm = switch_map or {s.id: s.id for s in self.switches}
        sws = [Switch(sm[s.id], hb(s.L), hb(s.A), hb(s.B)) for s in self.switches]
        punct = [hb(side_of_key(k)) + ("L",) for k in self.punctured]
        return TrainTrack.build(sws, punct)

    def mirror(self) -> "TrainTrack":
        """The same graph with the opposite surface orientation."""
        sws = [s.mirrored() for s in self.switches]
        # the region left of (b, e) becomes the region right of it
        punct = [(b, 1 - e, "L") for (b, e) in (side_of_key(k) for k in self.punctured)]
        return TrainTrack.build(sws, punct)

    def replace(self, switches: Iterable[Switch], punctured: Iterable) -> "TrainTrack":
        return TrainTrack.build(switches, punctured)


def validate(track: TrainTrack) -> ValidationReport:
    """Check slot consistency, connectivity and maximality.

    Raises MalformedSlots when a branch end is missing or occurs twice.
    """
    track.locations
    problems = []
    if not track.switches:
        problems.append("track has no switches")
    connected = track.is_connected()
    if not connected:
        problems.append("track is not connected")
    region_keys = {g.key for g in track.regions}
    for k in sorted(track.punctured - region_keys):
        problems.append(f"puncture mark {k} names no region")
    bad = [g for g in track.regions if g.kind not in ("trigon", "punctured monogon")]
    for g in bad:
        problems.append(f"region {format_key(g.key)} is a {g.kind}")
    return ValidationReport(
        generic=True,
        connected=connected,
        maximal=not bad and bool(track.switches),
        slot_consistent=True,
        problems=tuple(problems),
    )


def format_key(key) -> str:
    b, e, lr = key
    return f"{b}.{e}.{lr}"


def surface_signature(track: TrainTrack) -> SurfaceSignature:
    chi = track.euler_characteristic()
    if chi % 2:
        raise ExceptionalSurface(f"odd Euler characteristic {chi}")
    sig = SurfaceSignature((2 - chi) // 2, len(track.punctured))
    if sig.complexity < 2:
        raise ExceptionalSurface(
            f"3g-3+k = {sig.complexity} < 2 for genus {sig.genus} with {sig.punctures} punctures")
    return sig


# -- transverse measures --------------------------------------------------

def switch_rows(track: TrainTrack) -> list[list[int]]:
    """One row per switch: large weight minus both small weights."""
    idx = {b: i for i, b in enumerate(track.branches)}
    rows = []
    for s in track.switches:
        row = [0] * len(idx)
        row[idx[s.L[0]]] += 1
        row[idx[s.A[0]]] -= 1
        row[idx[s.B[0]]] -= 1
        rows.append(row)
    return rows


def check_measure(track: TrainTrack, mu: Mapping[int, Fraction]) -> list[int]:
    """Ids of switches where the switch condition fails."""
    for b in mu:
        if (b, 0) not in track.locations:
            raise UnknownBranch(f"measure names unknown branch {b}")
    missing = [b for b in track.branches if b not in mu]
    if missing:
        raise UnknownBranch(f"measure lacks branch {missing[0]}")
    return [s.id for s in track.switches if mu[s.L[0]] != mu[s.A[0]] + mu[s.B[0]]]


def is_positive(mu: Mapping[int, Fraction]) -> bool:
    return all(v > 0 for v in mu.values())


def is_recurrent(track: TrainTrack) -> dict[int, Fraction] | None:
    """A positive transverse measure with minimum weight 1, or None.

    Solves ``A w = 0, w >= 1`` exactly by writing ``w = 1 + y`` with ``y >= 0``.
    """
    rows = switch_rows(track)
    rhs = [-sum(r) for r in rows]
    y = lp.feasible_point(rows, rhs)
    if y is None:
        return None
    w = [1 + v for v in y]
    lo = min(w)
    return {b: v / lo for b, v in zip(track.branches, w)}


def measure_basis(track: TrainTrack) -> list[dict[int, Fraction]]:
    """Canonical basis of the solution space of the switch equations."""
    vecs = lp.nullspace(switch_rows(track), len(track.branches))
    return [dict(zip(track.branches, v)) for v in vecs]


def random_measure(track: TrainTrack, rng, spread: int = 1000) -> dict[int, int]:
    """A random strictly positive integer transverse measure.

    A positive witness scaled by ``spread`` plus a random integer combination
    of a null-space basis; redrawn until every weight is positive.
    """
    from math import lcm

    w0 = is_recurrent(track)
    if w0 is None:
        raise ValueError("track is not recurrent")
    basis = measure_basis(track)
    den = lcm(*(v.denominator for v in w0.values()),
              *(x.denominator for vec in basis for x in vec.values()))
    while True:
        mu = {b: w0[b] * spread * den for b in track.branches}
        for vec in basis:
            c = rng.randint(-spread, spread)
            for b in track.branches:
                mu[b] += c * vec[b] * den
        if all(v > 0 for v in mu.values()):
            return {b: int(v) for b, v in mu.items()}
