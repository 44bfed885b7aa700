"""Carried positions of a track sigma inside a fibered neighbourhood of a track tau.

Over each branch ``b`` of tau the strands of sigma form a *rectangle*: an
ordered list of strand tokens entering at end 0 (left to right when looking
from end 0 towards end 1) followed by an ordered list of events. An event is a
switch of sigma: a ``merge`` replaces two adjacent tokens by one, a
``diverge`` replaces one token by two. Each token is labelled by the branch of
sigma it belongs to. Rectangles are glued at the switches of tau by position:
if ``face(h)`` lists the tokens at half-branch ``h`` looking out of its switch,
then ``reversed(face(L)) == face(A) + face(B)`` at every switch.

Slot convention for an event read in the storage direction of its rectangle:
a diverge has ``L = ins[0]``, ``A = outs[0]``, ``B = outs[1]``; a merge has
``L = outs[0]``, ``A = ins[1]``, ``B = ins[0]``.

Reordering events inside a rectangle along any linear extension of the token
dependencies is treated as isotopy. The strand count ``nu(b)`` is read from
the taut form: events are pushed across faces of tau towards their two-strand
side whenever both strands lead into the same rectangle, then each rectangle
is ordered to minimise its thinnest slice.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping

import networkx as nx

from . import moves as mv
from .errors import (Ambiguous, CarriedBySplit, IncompatibleLocalPicture, NonTermination,
                     NotCarriedBySplit, NotCollapsible, NotLargeBranch, NotMixedBranch,
                     TrackError)
from .moves import LEFT, RIGHT, CollapseMove, ShiftMove, SplitMove
from .track import Switch, TrainTrack

MERGE, DIVERGE = "merge", "diverge"


@dataclass(frozen=True)
class Event:
    sw: int
    kind: str
    ins: tuple
    outs: tuple

    def flipped(self) -> "Event":
        kind = DIVERGE if self.kind == MERGE else MERGE
        return Event(self.sw, kind, tuple(reversed(self.outs)), tuple(reversed(self.ins)))

    def slot_tokens(self) -> dict[str, int]:
        if self.kind == DIVERGE:
            return {"L": self.ins[0], "A": self.outs[0], "B": self.outs[1]}
        return {"L": self.outs[0], "A": self.ins[1], "B": self.ins[0]}

    def renamed(self, m: Mapping[int, int]) -> "Event":
        return Event(self.sw, self.kind, tuple(m.get(t, t) for t in self.ins),
                     tuple(m.get(t, t) for t in self.outs))


def _apply(slice_: tuple, ev: Event) -> tuple:
    k = len(ev.ins)
    for i in range(len(slice_) - k + 1):
        if slice_[i:i + k] == ev.ins:
            return slice_[:i] + ev.outs + slice_[i + k:]
    raise IncompatibleLocalPicture(f"event at switch {ev.sw} does not find its strands adjacent")


@dataclass(frozen=True)
class Rect:
    face0: tuple
    events: tuple = ()

    def slices(self) -> list[tuple]:
        out = [self.face0]
        for ev in self.events:
            out.append(_apply(out[-1], ev))
        return out

    @property
    def face1(self) -> tuple:
        return self.slices()[-1]

    def reversed(self) -> "Rect":
        return Rect(tuple(reversed(self.face1)), tuple(ev.flipped() for ev in reversed(self.events)))

    def mirrored(self) -> "Rect":
        return Rect(tuple(reversed(self.face0)),
                    tuple(Event(e.sw, e.kind, tuple(reversed(e.ins)), tuple(reversed(e.outs)))
                          for e in self.events))

    def index(self, sw: int) -> int:
        for i, ev in enumerate(self.events):
            if ev.sw == sw:
                return i
        raise KeyError(sw)

    def producer(self) -> dict[int, int]:
        return {t: i for i, ev in enumerate(self.events) for t in ev.outs}

    def consumer(self) -> dict[int, int]:
        return {t: i for i, ev in enumerate(self.events) for t in ev.ins}

    def parents(self) -> list[set[int]]:
        prod = self.producer()
        return [{prod[t] for t in ev.ins if t in prod} for ev in self.events]

    def reordered(self, order) -> "Rect":
        r = Rect(self.face0, tuple(self.events[i] for i in order))
        r.slices()
        return r


@dataclass(frozen=True, eq=False)
class CarriedPosition:
    base: TrainTrack
    carried: TrainTrack
    rects: Mapping[int, Rect]
    labels: Mapping[int, int]  # token -> branch of the carried track

    def frame(self, b: int, end: int) -> Rect:
        r = self.rects[b]
        return r if end == 0 else r.reversed()

    def face(self, h) -> tuple:
        return self.frame(h[0], h[1]).face0

    def label_seq(self, toks) -> tuple:
        return tuple(self.labels[t] for t in toks)

    def locate_event(self, sw: int) -> tuple[int, int]:
        for b, r in self.rects.items():
            for i, ev in enumerate(r.events):
                if ev.sw == sw:
                    return b, i
        raise KeyError(sw)

    def fresh(self, n: int = 1) -> list[int]:
        top = max(self.labels, default=0)
        return list(range(top + 1, top + 1 + n))


class _Editor:
    """Mutable working copy of a position used while rewriting."""

    def __init__(self, pos: CarriedPosition):
        self.base = pos.base
        self.carried = pos.carried
        self.rects = dict(pos.rects)
        self.labels = dict(pos.labels)
        self.next_token = max(self.labels, default=0) + 1

    def new_token(self, label: int) -> int:
        t = self.next_token
        self.next_token += 1
        self.labels[t] = label
        return t

    def frame(self, b, end) -> Rect:
        r = self.rects[b]
        return r if end == 0 else r.reversed()

    def set_frame(self, b, end, rect: Rect) -> None:
        self.rects[b] = rect if end == 0 else rect.reversed()

    def face(self, h) -> tuple:
        return self.frame(*h).face0

    def locate_event(self, sw):
        for b, r in self.rects.items():
            for i, ev in enumerate(r.events):
                if ev.sw == sw:
                    return b, i
        raise KeyError(sw)

    def freeze(self) -> CarriedPosition:
        used = set()
        for r in self.rects.values():
            used.update(r.face0)
            for ev in r.events:
                used.update(ev.ins)
                used.update(ev.outs)
        labels = {t: l for t, l in self.labels.items() if t in used}
        return CarriedPosition(self.base, self.carried, dict(self.rects), labels)

    # -- gluing across a switch of the base ----------------------------------

    def partner(self, h, i):
        """The (half-branch, position) glued to position i of face(h)."""
        sw, slot = self.base.locate(h)
        if slot == "L":
            n = len(self.face(h))
            k = n - 1 - i
            na = len(self.face(sw.A))
            return (sw.A, k) if k < na else (sw.B, k - na)
        na = len(self.face(sw.A))
        k = i if slot == "A" else na + i
        n = len(self.face(sw.L))
        return sw.L, n - 1 - k

    def push(self, b: int, end: int, sw: int) -> bool:
        """Move event ``sw`` out of rectangle b through its face at ``end``.

        The event must have no predecessors in the frame looking out of that
        face, and every strand it meets at the face must lead into one
        neighbouring rectangle. Returns False when blocked.
        """
        fr = self.frame(b, end)
        idx = fr.index(sw)
        if fr.parents()[idx]:
            return False
        order = [idx] + [i for i in range(len(fr.events)) if i != idx]
        fr = fr.reordered(order)
        ev = fr.events[0]
        face = fr.face0
        k = len(ev.ins)
        start = next(i for i in range(len(face) - k + 1) if face[i:i + k] == ev.ins)
        targets = [self.partner((b, end), p) for p in range(start, start + k)]
        h2 = targets[0][0]
        if any(t[0] != h2 for t in targets):
            return False
        self.set_frame(b, end, Rect(face[:start] + ev.outs + face[start + k:], fr.events[1:]))
        fr2 = self.frame(*h2)
        face2 = fr2.face0
        js = sorted(t[1] for t in targets)
        j0 = js[0]
        J = face2[j0:j0 + k]
        onew = tuple(self.new_token(self.labels[o]) for o in reversed(ev.outs))
        kind = DIVERGE if ev.kind == MERGE else MERGE
        e2 = Event(ev.sw, kind, onew, J)
        self.set_frame(h2[0], h2[1], Rect(face2[:j0] + onew + face2[j0 + k:], (e2,) + fr2.events))
        return True

    def make_adjacent(self, b: int, sw1: int, sw2: int) -> None:
        """Reorder rectangle b so that sw2 directly follows sw1."""
        r = self.rects[b]
        i1, i2 = r.index(sw1), r.index(sw2)
        par = r.parents()
        n = len(r.events)
        children = [set() for _ in range(n)]
        for i, ps in enumerate(par):
            for p in ps:
                children[p].add(i)
        desc = _closure(i1, children)
        anc2 = _closure(i2, [set(p) for p in par])
        if (desc & anc2) - {i1, i2}:
            raise IncompatibleLocalPicture(f"switches {sw1} and {sw2} cannot be brought together")
        first = [i for i in range(n) if i not in desc and i != i1]
        rest = [i for i in range(n) if i in desc and i not in (i1, i2)]
        self.rects[b] = r.reordered(first + [i1, i2] + rest)

    def replace_pair(self, b: int, sw1: int, new1: Event, new2: Event) -> None:
        r = self.rects[b]
        i = r.index(sw1)
        ev = list(r.events)
        ev[i:i + 2] = [new1, new2]
        self.rects[b] = Rect(r.face0, tuple(ev))
        self.rects[b].slices()


def _closure(start, nbrs) -> set:
    seen = {start}
    stack = [start]
    while stack:
        for j in nbrs[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return seen


# -- construction and checking ------------------------------------------------------

def identity_position(track: TrainTrack) -> CarriedPosition:
    """The track carried by itself; each switch sits just inside its large branch."""
    ed = _Editor(CarriedPosition(track, track, {}, {}))
    ed.next_token = 1
    for b in track.branches:
        main = ed.new_token(b)
        face0, events = (main,), []
        v, slot0 = track.locate((b, 0))
        if slot0 == "L":
            x, y = ed.new_token(v.B[0]), ed.new_token(v.A[0])
            face0 = (x, y)
            events.append(Event(v.id, MERGE, (x, y), (main,)))
        w, slot1 = track.locate((b, 1))
        if slot1 == "L":
            p, q = ed.new_token(w.A[0]), ed.new_token(w.B[0])
            events.append(Event(w.id, DIVERGE, (main,), (p, q)))
        ed.rects[b] = Rect(face0, tuple(events))
    return ed.freeze()


def check_position(pos: CarriedPosition) -> None:
    """Raise IncompatibleLocalPicture unless the strand data is consistent with both tracks."""
    base, sig = pos.base, pos.carried
    for b, r in pos.rects.items():
        r.slices()
    for s in base.switches:
        lhs = pos.label_seq(reversed(pos.face(s.L)))
        rhs = pos.label_seq(pos.face(s.A) + pos.face(s.B))
        if lhs != rhs:
            raise IncompatibleLocalPicture(f"strands do not match across base switch {s.id}")
    seen = {}
    for b, r in pos.rects.items():
        for ev in r.events:
            if ev.sw in seen:
                raise IncompatibleLocalPicture(f"switch {ev.sw} of the carried track occurs twice")
            seen[ev.sw] = b
            rec = sig.switch(ev.sw)
            for slot, tok in ev.slot_tokens().items():
                if pos.labels[tok] != rec.slot(slot)[0]:
                    raise IncompatibleLocalPicture(f"slot {slot} of switch {ev.sw} carries the wrong strand")
    if set(seen) != {s.id for s in sig.switches}:
        raise IncompatibleLocalPicture("carried switches and events differ")
    for s in sig.switches:
        for slot in ("L", "A", "B"):
            far_sw, far_slot, _ = trace_strand(pos, s.id, slot)
            hb = s.slot(slot)
            if sig.switch(far_sw).slot(far_slot) != (hb[0], 1 - hb[1]):
                raise IncompatibleLocalPicture(f"branch {hb[0]} of the carried track is routed wrongly")


def trace_strand(pos: CarriedPosition, sw: int, slot: str):
    """Follow the carried branch leaving switch ``sw`` through ``slot``.

    Returns (far switch, far slot, list of base branches crossed in order).
    """
    b, i = pos.locate_event(sw)
    r = pos.rects[b]
    ev = r.events[i]
    tok = ev.slot_tokens()[slot]
    forward = tok in ev.outs
    path = [b]
    for _ in range(100000):
        r = pos.rects[b]
        if forward:
            cons = r.consumer()
            if tok in cons:
                e2 = r.events[cons[tok]]
                return e2.sw, _slot_of(e2, tok), path
            face = r.face1
            pos_i = face.index(tok)
            h, idx = (b, 1), len(face) - 1 - pos_i
        else:
            prod = r.producer()
            if tok in prod:
                e2 = r.events[prod[tok]]
                return e2.sw, _slot_of(e2, tok), path
            face = r.face0
            h, idx = (b, 0), face.index(tok)
        ed = _Editor(pos)
        h2, j = ed.partner(h, idx)
        b = h2[0]
        path.append(b)
        face2 = pos.face(h2)
        if h2[1] == 0:
            tok, forward = face2[j], True
        else:
            tok, forward = face2[j], False
    raise IncompatibleLocalPicture("strand does not terminate")


def _slot_of(ev: Event, tok: int) -> str:
    for slot, t in ev.slot_tokens().items():
        if t == tok:
            return slot
    raise KeyError(tok)


# -- taut form and strand counts ---------------------------------------------------------

def _best_closure(rect: Rect) -> tuple[int, set[int]]:
    """Dependency-closed event set maximising #merges - #diverges, with its weight."""
    if not rect.events:
        return 0, set()
    g = nx.DiGraph()
    g.add_nodes_from(["s", "t"])
    total = 0
    for i, ev in enumerate(rect.events):
        if ev.kind == MERGE:
            g.add_edge("s", i, capacity=1)
            total += 1
        else:
            g.add_edge(i, "t", capacity=1)
    for i, ps in enumerate(rect.parents()):
        for p in ps:
            g.add_edge(i, p)  # no capacity: taking i forces its parent
    cut, (src, _) = nx.minimum_cut(g, "s", "t")
    return total - cut, {i for i in src if i != "s"}


def thinnest(rect: Rect) -> int:
    return len(rect.face0) - _best_closure(rect)[0]


def thinnest_slice(rect: Rect) -> tuple:
    _, chosen = _best_closure(rect)
    cur = rect.face0
    for i, ev in enumerate(rect.events):
        if i in chosen:
            cur = _apply(cur, ev)
    return cur


def taut(pos: CarriedPosition) -> CarriedPosition:
    """Push events across base faces towards their two-strand side until none moves."""
    ed = _Editor(pos)
    moved = True
    while moved:
        moved = False
        for b in sorted(ed.rects):
            for end in (0, 1):
                fr = ed.frame(b, end)
                par = fr.parents()
                for i, ev in enumerate(fr.events):
                    if par[i] or len(ev.ins) != 2:
                        continue
                    if ed.push(b, end, ev.sw):
                        moved = True
                        break
                if moved:
                    break
            if moved:
                break
    return ed.freeze()


@dataclass(frozen=True)
class NuProfile:
    values: Mapping[int, int]

    def __getitem__(self, b):
        return self.values[b]

    def __iter__(self):
        return iter(self.values)

    def ones(self) -> int:
        return sum(1 for v in self.values.values() if v == 1)


def nu_profile(pos: CarriedPosition) -> NuProfile:
    t = taut(pos)
    return NuProfile({b: thinnest(t.rects[b]) for b in sorted(t.rects)})


def transition_matrix(pos: CarriedPosition) -> dict[int, dict[int, int]]:
    """Entry [s][b]: strands of carried branch s over base branch b at its thinnest slice."""
    t = taut(pos)
    m = {s: {b: 0 for b in pos.base.branches} for s in pos.carried.branches}
    for b, r in t.rects.items():
        for tok in thinnest_slice(r):
            m[t.labels[tok]][b] += 1
    return m


def pushforward(pos: CarriedPosition, mu) -> dict[int, Fraction]:
    """Measure on the base induced by a measure on the carried track."""
    out = {}
    for b, r in pos.rects.items():
        out[b] = sum((Fraction(mu[pos.labels[t]]) for t in r.face0), Fraction(0))
    return out


def equivalent_positions(a: CarriedPosition, b: CarriedPosition) -> bool:
    """Equality up to token names and reordering of independent events."""
    return _position_key(a) == _position_key(b)


def _position_key(pos: CarriedPosition):
    out = [pos.base.key(), pos.carried.key()]
    for b in sorted(pos.rects):
        r = pos.rects[b]
        names = {}

        def nm(t):
            if t not in names:
                names[t] = len(names)
            return names[t], pos.labels[t]

        face = tuple(nm(t) for t in r.face0)
        # canonical linear extension: always fire the leftmost available event
        pending = list(r.events)
        cur = list(r.face0)
        seq = []
        while pending:
            best = None
            for ev in pending:
                k = len(ev.ins)
                for i in range(len(cur) - k + 1):
                    if tuple(cur[i:i + k]) == ev.ins:
                        if best is None or i < best[0]:
                            best = (i, ev)
                        break
            i, ev = best
            pending.remove(ev)
            cur[i:i + len(ev.ins)] = ev.outs
            seq.append((i, ev.sw, ev.kind, tuple(nm(t) for t in ev.outs)))
        out.append((b, face, tuple(seq)))
    return tuple(out)


# -- mirror ---------------------------------------------------------------------------------

def mirror_position(pos: CarriedPosition) -> CarriedPosition:
    return CarriedPosition(pos.base.mirror(), pos.carried.mirror(),
                           {b: r.mirrored() for b, r in pos.rects.items()}, dict(pos.labels))


# -- carried moves ------------------------------------------------------------------------------

def _event(ed: _Editor, sw: int) -> tuple[int, Event]:
    b, i = ed.locate_event(sw)
    return b, ed.rects[b].events[i]


def _shared_token(ed: _Editor, sw1: int, sw2: int, label: int):
    """(rect, first switch, second switch) if a token labelled ``label`` runs directly between them."""
    b1, e1 = _event(ed, sw1)
    b2, e2 = _event(ed, sw2)
    if b1 != b2:
        return None
    for a, c in ((e1, e2), (e2, e1)):
        for t in a.outs:
            if t in c.ins and ed.labels[t] == label:
                return b1, a.sw, c.sw
    return None


def _slide_along_large(ed: _Editor, sw: int, label: int) -> None:
    """Push the event one face backwards along its one-strand side, which carries ``label``."""
    b, ev = _event(ed, sw)
    tok = ev.ins[0] if ev.kind == DIVERGE else ev.outs[0]
    if ed.labels[tok] != label:
        raise IncompatibleLocalPicture(f"branch {label} is not on the one-strand side of {sw}")
    end = 0 if ev.kind == DIVERGE else 1
    if not ed.push(b, end, sw):
        raise IncompatibleLocalPicture(f"cannot slide switch {sw} along branch {label}")


def _bring_together(ed: _Editor, mover: int, anchor: int, label: int, limit: int = 1000):
    for _ in range(limit):
        got = _shared_token(ed, mover, anchor, label)
        if got:
            return got
        _slide_along_large(ed, mover, label)
    raise IncompatibleLocalPicture("events never meet")


def split_carried(pos: CarriedPosition, at: int, direction: str) -> CarriedPosition:
    sig = pos.carried
    if sig.classify(at) != "large":
        raise NotLargeBranch(f"branch {at} of the carried track is {sig.classify(at)}")
    ed = _Editor(pos)
    v = sig.locate((at, 0))[0].id
    w = sig.locate((at, 1))[0].id
    if v == w:
        raise IncompatibleLocalPicture("large loop")
    b, first, second = _bring_together(ed, w, v, at)
    ed.make_adjacent(b, first, second)
    r = ed.rects[b]
    i = r.index(first)
    m, d = r.events[i], r.events[i + 1]
    if m.kind != MERGE or d.kind != DIVERGE:
        raise IncompatibleLocalPicture("unexpected local picture at a large branch")
    (x, y), (p, q) = m.ins, d.outs
    c = ed.new_token(at)
    if direction == RIGHT:
        n1 = Event(m.sw, DIVERGE, (x,), (p, c))
        n2 = Event(d.sw, MERGE, (c, y), (q,))
    else:
        n1 = Event(m.sw, DIVERGE, (y,), (c, q))
        n2 = Event(d.sw, MERGE, (x, c), (p,))
    ed.replace_pair(b, m.sw, n1, n2)
    ed.carried = mv.split(sig, SplitMove(at, direction)).track
    return taut(ed.freeze())


def is_local(pos: CarriedPosition, at: int) -> bool:
    """Whether both switches at the ends of carried branch ``at`` lie over one base branch
    with the branch running directly between them."""
    sig = pos.carried
    ed = _Editor(pos)
    u = sig.locate((at, 0))[0].id
    w = sig.locate((at, 1))[0].id
    return _shared_token(ed, u, w, at) is not None


def shift_carried(pos: CarriedPosition, at: int) -> CarriedPosition:
    sig = pos.carried
    if sig.classify(at) != "mixed":
        raise NotMixedBranch(f"branch {at} of the carried track is {sig.classify(at)}")
    eu = 0 if sig.slot_of(at, 0) == "L" else 1
    u = sig.locate((at, eu))[0].id
    w = sig.locate((at, 1 - eu))[0].id
    ed = _Editor(pos)
    b, first, second = _bring_together(ed, u, w, at)
    ed.make_adjacent(b, first, second)
    r = ed.rects[b]
    i = r.index(first)
    e1, e2 = r.events[i], r.events[i + 1]
    nb = ed.new_token(at)
    if e1.kind == MERGE and e2.kind == MERGE:
        (x, y), bt = e1.ins, e1.outs[0]
        if e2.ins[0] == bt:
            z = e2.ins[1]
            n1, n2 = Event(e1.sw, MERGE, (y, z), (nb,)), Event(e2.sw, MERGE, (x, nb), e2.outs)
        else:
            z = e2.ins[0]
            n1, n2 = Event(e1.sw, MERGE, (z, x), (nb,)), Event(e2.sw, MERGE, (nb, y), e2.outs)
    elif e1.kind == DIVERGE and e2.kind == DIVERGE:
        (p, q) = e2.outs
        bt = e2.ins[0]
        if e1.outs[0] == bt:
            z = e1.outs[1]
            n1, n2 = Event(e1.sw, DIVERGE, e1.ins, (p, nb)), Event(e2.sw, DIVERGE, (nb,), (q, z))
        else:
            z = e1.outs[0]
            n1, n2 = Event(e1.sw, DIVERGE, e1.ins, (nb, q)), Event(e2.sw, DIVERGE, (nb,), (z, p))
    else:
        raise IncompatibleLocalPicture("unexpected local picture at a mixed branch")
    ed.replace_pair(b, first, n1, n2)
    ed.carried = mv.shift(sig, at).track
    return taut(ed.freeze())


def collapse_carried(pos: CarriedPosition, at: int, direction: str) -> CarriedPosition:
    sig = pos.carried
    mv.collapse(sig, at, direction)  # raises NotCollapsible on a bad pattern
    ed = _Editor(pos)
    s0 = sig.locate((at, 0))[0].id
    s1 = sig.locate((at, 1))[0].id
    got = None
    for _ in range(1000):
        got = _shared_token(ed, s0, s1, at)
        if got:
            break
        if not (_push_along_small(ed, s0, at) or _push_along_small(ed, s1, at)):
            raise IncompatibleLocalPicture(f"switches at the ends of {at} cannot be brought together")
    if not got:
        raise IncompatibleLocalPicture("collapse never became local")
    b, first, second = got
    ed.make_adjacent(b, first, second)
    r = ed.rects[b]
    i = r.index(first)
    d, m = r.events[i], r.events[i + 1]
    if d.kind != DIVERGE or m.kind != MERGE:
        raise IncompatibleLocalPicture("unexpected local picture at a small branch")
    s = ed.new_token(at)
    if direction == RIGHT:
        x, (p, c) = d.ins[0], d.outs
        (c2, y), q = m.ins, m.outs[0]
    else:
        y, (c, q) = d.ins[0], d.outs
        (x, c2), p = m.ins, m.outs[0]
    if c != c2:
        raise NotCollapsible(f"strand picture at {at} does not match a {direction} collapse")
    ed.replace_pair(b, d.sw, Event(d.sw, MERGE, (x, y), (s,)), Event(m.sw, DIVERGE, (s,), (p, q)))
    ed.carried = mv.collapse(sig, at, direction).track
    return taut(ed.freeze())


def _push_along_small(ed: _Editor, sw: int, label: int) -> bool:
    """Push the event one face along its two-strand side following ``label``."""
    b, ev = _event(ed, sw)
    toks = ev.outs if ev.kind == DIVERGE else ev.ins
    if label not in [ed.labels[t] for t in toks]:
        return False
    end = 1 if ev.kind == DIVERGE else 0
    r = ed.rects[b]
    # only useful when the strand actually leaves through that face
    tok = next(t for t in toks if ed.labels[t] == label)
    if ev.kind == DIVERGE and tok in r.consumer():
        return False
    if ev.kind == MERGE and tok in r.producer():
        return False
    return ed.push(b, end, sw)


def apply_carried(pos: CarriedPosition, move) -> CarriedPosition:
    if isinstance(move, SplitMove):
        return split_carried(pos, move.at, move.direction)
    if isinstance(move, ShiftMove):
        return shift_carried(pos, move.at)
    return collapse_carried(pos, move.at, move.direction)


# -- splits of the base -------------------------------------------------------------------------

def _zones_right(pos: CarriedPosition, e: int):
    """Classify the tokens of rectangle e for a right split of the base at e.

    Returns None if some strand runs from the small-left side at the first
    switch to the small-left side at the second switch.
    """
    base = pos.base
    if base.classify(e) != "large":
        raise NotLargeBranch(f"branch {e} is {base.classify(e)}, not large")
    v, w = base.locate((e, 0))[0], base.locate((e, 1))[0]
    r = pos.rects[e]
    nbv = len(pos.face(v.B))
    naw = len(pos.face(w.A))
    frm, to = {}, {}
    for i, t in enumerate(r.face0):
        frm[t] = {"B"} if i < nbv else {"A"}
    for ev in r.events:
        f = set().union(*(frm[t] for t in ev.ins))
        for t in ev.outs:
            frm[t] = f
    for i, t in enumerate(r.face1):
        to[t] = {"A"} if i < naw else {"B"}
    for ev in reversed(r.events):
        s = set().union(*(to[t] for t in ev.outs))
        for t in ev.ins:
            to[t] = s
    for t in frm:
        if "A" in frm[t] and "A" in to[t]:
            return None
    zone = {}
    for t in frm:
        f, g = frm[t], to[t]
        if f == {"B"}:
            zone[t] = "Bv" if g == {"A", "B"} else ("Aw" if g == {"A"} else "e")
        elif f == {"A"}:
            zone[t] = "Av"
        else:
            zone[t] = "Bw"
    return zone


def carried_by_split(pos: CarriedPosition, e: int, direction: str) -> bool:
    if direction == LEFT:
        return _zones_right(mirror_position(pos), e) is not None
    return _zones_right(pos, e) is not None


def _sub_rect(ed: _Editor, face_tokens, events, expect_final):
    """A rectangle whose face0 holds fresh copies of ``face_tokens``; checks the final slice."""
    fresh = {t: ed.new_token(ed.labels[t]) for t in face_tokens}
    rect = Rect(tuple(fresh[t] for t in face_tokens), tuple(ev.renamed(fresh) for ev in events))
    final = rect.face1
    back = {v: k for k, v in fresh.items()}
    if tuple(back.get(t, t) for t in final) != tuple(expect_final):
        raise IncompatibleLocalPicture("strand zones do not separate cleanly")
    return rect


def _concat(ed: _Editor, first: Rect, second: Rect) -> Rect:
    """Glue ``second`` after ``first``; the faces must carry the same labels."""
    f1 = first.face1
    if len(f1) != len(second.face0) or any(ed.labels[a] != ed.labels[b] for a, b in zip(f1, second.face0)):
        raise IncompatibleLocalPicture("faces do not match when gluing")
    m = dict(zip(second.face0, f1))
    return Rect(first.face0, first.events + tuple(ev.renamed(m) for ev in second.events))


def _transport_right(pos: CarriedPosition, e: int) -> CarriedPosition:
    zone = _zones_right(pos, e)
    if zone is None:
        raise NotCarriedBySplit(f"the right split at {e} does not carry the position")
    base = pos.base
    v, w = base.locate((e, 0))[0], base.locate((e, 1))[0]
    ed = _Editor(pos)
    r = pos.rects[e]
    nbv = len(pos.face(v.B))
    naw = len(pos.face(w.A))

    def ev_zone(ev):
        one = ev.outs[0] if ev.kind == MERGE else ev.ins[0]
        return zone[one]

    by_zone = {z: [ev for ev in r.events if ev_zone(ev) == z] for z in ("Bv", "Aw", "e", "Av", "Bw")}

    def run(face, evs):
        cur = tuple(face)
        for ev in evs:
            cur = _apply(cur, ev)
        return cur

    bv_face = r.face0[:nbv]
    av_face = r.face0[nbv:]
    after_bv = run(bv_face, by_zone["Bv"])
    if any(zone[t] == "Bv" for t in after_bv):
        raise IncompatibleLocalPicture("unresolved strands before the new switch")
    aw_in = tuple(t for t in after_bv if zone[t] == "Aw")
    e_in = tuple(t for t in after_bv if zone[t] == "e")
    if after_bv != aw_in + e_in:
        raise IncompatibleLocalPicture("strands cross at the new switch")
    aw_out = r.face1[:naw]
    bw_out = r.face1[naw:]
    after_av = run(av_face, by_zone["Av"])
    e_out = run(e_in, by_zone["e"])

    ext_bv = _sub_rect(ed, bv_face, by_zone["Bv"], after_bv)
    ext_aw = _sub_rect(ed, aw_in, by_zone["Aw"], aw_out)
    new_e = _sub_rect(ed, e_in, by_zone["e"], e_out)
    ext_av = _sub_rect(ed, av_face, by_zone["Av"], after_av)
    ext_bw = _sub_rect(ed, e_out + after_av, by_zone["Bw"], bw_out)

    # Glue. The branch e gets the diagonal; the four neighbours are extended.
    ed.rects[e] = new_e
    b1, b2, b3, b4 = v.B, w.A, v.A, w.B
    # rectangles of B_v and A_v grow at their ends near v: frame travelling towards v
    for h, ext in ((b1, ext_bv), (b3, ext_av)):
        toward = ed.frame(h[0], h[1]).reversed()
        ed.set_frame(h[0], h[1], _concat(ed, toward, ext).reversed())
    for h, ext in ((b2, ext_aw), (b4, ext_bw)):
        away = ed.frame(h[0], h[1])
        ed.set_frame(h[0], h[1], _concat(ed, ext, away))
    ed.base = mv.split(base, SplitMove(e, RIGHT)).track
    return taut(ed.freeze())


def transport_through_base_split(pos: CarriedPosition, move: SplitMove) -> CarriedPosition:
    """The same carried track viewed inside the split base track."""
    if move.direction == RIGHT:
        return _transport_right(pos, move.at)
    out = _transport_right(mirror_position(pos), move.at)
    return mirror_position(out)


# -- cutting connectors and normal form ------------------------------------------------------------

@dataclass(frozen=True)
class Connector:
    branches: tuple[int, ...]  # carried branches in order from the first to the second switch
    switches: tuple[int, ...]  # interior switches
    kinds: tuple[str, ...]  # per interior switch: "in" or "out"
    sides: tuple[str, ...]  # per interior switch: side of the branch leaving the path, "L" or "R"
    start: int
    end: int

    def __len__(self):
        return len(self.branches)


def cutting_connector(pos: CarriedPosition, e: int) -> Connector | None:
    base = pos.base
    if base.classify(e) != "large":
        raise NotLargeBranch(f"branch {e} is {base.classify(e)}, not large")
    v, w = base.locate((e, 0))[0], base.locate((e, 1))[0]
    r = pos.rects[e]
    nbv = len(pos.face(v.B))
    naw = len(pos.face(w.A))
    slices = r.slices()
    # the gap opening at the cusp of v, followed forwards
    gap = nbv
    s1 = None
    for i, ev in enumerate(r.events):
        cur = slices[i]
        k = len(ev.ins)
        at = next(j for j in range(len(cur) - k + 1) if cur[j:j + k] == ev.ins)
        if ev.kind == MERGE and at + 1 == gap:
            s1 = i
            break
        if at < gap:
            gap += len(ev.outs) - len(ev.ins)
    # the gap at the cusp of w, followed backwards
    gap = naw
    s2 = None
    for i in range(len(r.events) - 1, -1, -1):
        ev = r.events[i]
        cur = slices[i + 1]
        k = len(ev.outs)
        at = next(j for j in range(len(cur) - k + 1) if cur[j:j + k] == ev.outs)
        if ev.kind == DIVERGE and at + 1 == gap:
            s2 = i
            break
        if at < gap:
            gap += len(ev.ins) - len(ev.outs)
    if s1 is None or s2 is None or s1 > s2:
        return None
    start_tok = r.events[s1].outs[0]
    goal_tok = r.events[s2].ins[0]
    cons = r.consumer()
    path = _token_path(r, start_tok, goal_tok, cons)
    if path is None:
        return None
    branches = tuple(pos.labels[t] for t in path)
    sws, kinds, sides = [], [], []
    for a, b in zip(path, path[1:]):
        ev = r.events[cons[a]]
        sws.append(ev.sw)
        if ev.kind == MERGE:
            kinds.append("in")
            sides.append("L" if ev.ins[1] == a else "R")
        else:
            kinds.append("out")
            sides.append("R" if ev.outs[0] == b else "L")
    return Connector(branches, tuple(sws), tuple(kinds), tuple(sides),
                     r.events[s1].sw, r.events[s2].sw)


def _token_path(r: Rect, a, goal, cons):
    if a == goal:
        return [a]
    if a not in cons:
        return None
    ev = r.events[cons[a]]
    for nxt in ev.outs:
        rest = _token_path(r, nxt, goal, cons)
        if rest is not None:
            return [a] + rest
    return None


def is_special(c: Connector) -> bool:
    n = len(c.branches)
    if n % 2 == 0:
        return False
    for i, k in enumerate(c.kinds):
        if k != ("out" if i % 2 == 0 else "in"):
            return False
    for s, t in zip(c.sides, c.sides[1:]):
        if s == t:
            return False
    return True


def _reduction(c: Connector):
    """The branch to shift next while bringing the connector to special form, or None."""
    n = len(c.branches)
    if n >= 2 and c.kinds[0] == "in":
        return c.branches[0]
    if n >= 2 and c.kinds[-1] == "out":
        return c.branches[-1]
    for i in range(len(c.kinds) - 1):
        if c.kinds[i] == c.kinds[i + 1] and c.sides[i] == c.sides[i + 1]:
            return c.branches[i + 1]
    return None


def normalize_over(pos: CarriedPosition, e: int, lam=None):
    """Shift the carried track until the connector over e is special.

    Returns (position, shift word, transported measure).
    """
    if carried_by_split(pos, e, RIGHT) or carried_by_split(pos, e, LEFT):
        raise CarriedBySplit(f"a split at {e} carries the position")
    word = []
    for _ in range(10 * len(pos.carried.branches) + 10):
        c = cutting_connector(pos, e)
        if c is None:
            raise IncompatibleLocalPicture(f"no cutting connector over {e}")
        b = _reduction(c)
        if b is None:
            if not is_special(c):
                raise IncompatibleLocalPicture(f"connector over {e} has an unexpected pattern")
            return pos, word, lam
        new = shift_carried(pos, b)
        if lam is not None:
            lam = mv.measure_after_shift(pos.carried, lam, b, new.carried)
        c2 = cutting_connector(new, e)
        if c2 is None or len(c2) >= len(c):
            raise IncompatibleLocalPicture(f"shift along {b} did not shorten the connector over {e}")
        pos = new
        word.append(ShiftMove(b))
    raise NonTermination("normalisation did not terminate")


# -- shift equivalence ----------------------------------------------------------------------------

def _shift_bfs(track: TrainTrack, limit: int = 100000):
    """Breadth-first walk of the shift class, yielding (track, word)."""
    seen = {track.key()}
    queue = deque([(track, ())])
    while queue:
        t, word = queue.popleft()
        yield t, word
        for b in t.mixed_branches():
            nt = mv.shift(t, b).track
            nk = nt.key()
            if nk not in seen:
                seen.add(nk)
                queue.append((nt, word + (ShiftMove(b),)))
                if len(seen) > limit:
                    raise NonTermination("shift class too large")


def shift_class(track: TrainTrack, limit: int = 100000) -> dict:
    """All tracks reachable by shifts, keyed by labelled key, with a witness word."""
    return {t.key(): (t, word) for t, word in _shift_bfs(track, limit)}


def shift_equivalent(a: TrainTrack, b: TrainTrack, branch_map: Mapping[int, set] | None = None):
    """A shift word taking a to a track isomorphic to b, or None.

    With ``branch_map`` (some branches of b -> admissible branches of a) the
    isomorphism must also respect it.
    """
    from .orbit import certificate

    cert = certificate(b)
    for t, word in _shift_bfs(a):
        if certificate(t) != cert:
            continue
        if branch_map is None:
            return list(word)
        for iso in _isomorphisms(b, t):
            if all(iso[s] in allowed for s, allowed in branch_map.items()):
                return list(word)
    return None


def _isomorphisms(a: TrainTrack, b: TrainTrack):
    """All branch maps a -> b realising isomorphisms of colored graphs with punctures."""
    from .orbit import colored_graph, _encode_from, _puncture_code

    ga, gb = colored_graph(a), colored_graph(b)
    wa, wb = ga.where(), gb.where()
    sa = min(ga.vertices)
    ca, la = _encode_from(ga, wa, sa)
    pa = _puncture_code(ga, wa, la)
    for sb in gb.vertices:
        cb, lb = _encode_from(gb, wb, sb)
        if cb != ca or _puncture_code(gb, wb, lb) != pa:
            continue
        inv = {lab: x for x, lab in lb.items()}
        emap = {}
        for x, lab in la.items():
            for h, k in zip(ga.vertices[x], gb.vertices[inv[lab]]):
                emap[h[0]] = k[0]
        yield emap


def carrying_branch_map(pos: CarriedPosition) -> dict[int, set]:
    """Base branches each carried branch runs over."""
    out = {s: set() for s in pos.carried.branches}
    for b, r in pos.rects.items():
        for sl in r.slices():
            for tok in sl:
                out[pos.labels[tok]].add(b)
    return out


# -- the agreement procedure ---------------------------------------------------------------------------

@dataclass
class AgreeResult:
    base_word: list
    carried_word: list
    base: TrainTrack
    carried: TrainTrack
    position: CarriedPosition
    shift_word: list
    phases: int
    measure: dict = field(default_factory=dict)

    @property
    def carried_length(self) -> int:
        return len(self.carried_word)


def agree(pos: CarriedPosition, lam) -> AgreeResult:
    """Split the base and modify the carried track until the two are shift equivalent.

    ``lam`` is a positive transverse measure on the carried track. Base splits
    are always splits carrying the position, hence lambda-splits; the carried
    track is changed by lambda-splits, shifts and collapses.
    """
    lam = {b: Fraction(x) for b, x in lam.items()}
    from .track import check_measure

    if check_measure(pos.carried, lam) or min(lam.values()) <= 0:
        raise TrackError("measure is not a positive transverse measure on the carried track")
    base_word, carried_word = [], []
    last_count = -1
    phases = 0
    for _ in range(4 * len(pos.base.branches) + 4):
        pos, splits = _split_base_while_carried(pos, lam)
        base_word += splits
        nu = nu_profile(pos)
        count = nu.ones()
        if count <= last_count:
            raise NonTermination(f"branches with one strand did not increase ({last_count} -> {count})")
        last_count = count
        todo = [e for e in pos.base.large_branches() if nu[e] >= 2]
        if not todo:
            over = carrying_branch_map(pos)
            word = shift_equivalent(pos.base, pos.carried,
                                    {s: over[s] for s in pos.carried.large_branches()})
            if word is None:
                raise NonTermination("final tracks are not shift equivalent")
            return AgreeResult(base_word, carried_word, pos.base, pos.carried, pos, word, phases, lam)
        phases += 1
        e = todo[0]
        pos, lam, bw, cw = _reduce_over(pos, e, lam)
        base_word += bw
        carried_word += cw
    raise NonTermination("too many phases")


def _split_base_while_carried(pos, lam):
    word = []
    progress = True
    while progress:
        progress = False
        for e in pos.base.large_branches():
            r = carried_by_split(pos, e, RIGHT)
            l = carried_by_split(pos, e, LEFT)
            if r and l:
                raise Ambiguous(f"both splits at {e} carry the position")
            if r or l:
                d = RIGHT if r else LEFT
                _check_lambda_direction(pos, e, d, lam)
                pos = transport_through_base_split(pos, SplitMove(e, d))
                word.append(SplitMove(e, d))
                progress = True
                break
    return pos, word


def _check_lambda_direction(pos, e, d, lam):
    mu = pushforward(pos, lam)
    if mv.split_direction(pos.base, mu, e) != d:
        raise NonTermination(f"carrying split at {e} disagrees with the measure")


def _reduce_over(pos, e, lam):
    base_word, carried_word = [], []
    for _ in range(4 * len(pos.carried.branches) + 4):
        pos, shifts, lam = normalize_over(pos, e, lam)
        carried_word += shifts
        c = cutting_connector(pos, e)
        if len(c) == 1:
            if nu_profile(pos)[e] == 1:
                return pos, lam, base_word, carried_word
            s = c.branches[0]
            d = mv.split_direction(pos.carried, lam, s)
            lam = mv.measure_after_split(pos.carried, lam, SplitMove(s, d))
            pos = split_carried(pos, s, d)
            carried_word.append(SplitMove(s, d))
            if not carried_by_split(pos, e, d):
                raise IncompatibleLocalPicture(f"split at {e} does not carry the split carried track")
            pos = transport_through_base_split(pos, SplitMove(e, d))
            base_word.append(SplitMove(e, d))
            return pos, lam, base_word, carried_word
        small = c.branches[1]
        d = LEFT if c.sides[0] == "R" else RIGHT
        new = collapse_carried(pos, small, d)
        lam = mv.measure_after_collapse(lam, small, new.carried)
        pos = new
        carried_word.append(CollapseMove(small, d))
    raise NonTermination(f"reduction over {e} did not terminate")


# -- random positions ------------------------------------------------------------------------------

def random_position(track: TrainTrack, rng, length: int, shift_prob: float = 0.4, spread: int = 1000):
    """A position reached from the identity by random carried lambda-splits and shifts.

    Returns (position, carried measure, carried word).
    """
    from .track import random_measure
    from .errors import TieCollision

    pos = identity_position(track)
    lam = {b: Fraction(x) for b, x in random_measure(track, rng, spread).items()}
    word = []
    while len(word) < length:
        sig = pos.carried
        if sig.mixed_branches() and rng.random() < shift_prob:
            b = rng.choice(sig.mixed_branches())
            new = shift_carried(pos, b)
            lam = mv.measure_after_shift(sig, lam, b, new.carried)
            word.append(ShiftMove(b))
        else:
            s = rng.choice(sig.large_branches())
            try:
                d = mv.split_direction(sig, lam, s)
            except TieCollision:
                continue
            lam = mv.measure_after_split(sig, lam, SplitMove(s, d))
            new = split_carried(pos, s, d)
            word.append(SplitMove(s, d))
        pos = new
    return pos, lam, word


# -- serialisation -------------------------------------------------------------------------------

def format_position(pos: CarriedPosition, measure=None) -> str:
    from .formats import format_track

    out = ["pos v1", "[base]", format_track(pos.base).rstrip("\n"),
           "[carried]", format_track(pos.carried).rstrip("\n"), "[strands]"]

    def tok(t):
        return f"{t}:{pos.labels[t]}"

    for b in sorted(pos.rects):
        r = pos.rects[b]
        out.append(f"rect {b} " + " ".join(tok(t) for t in r.face0))
        for ev in r.events:
            out.append(f"event {b} {ev.sw} {ev.kind} " + " ".join(tok(t) for t in ev.ins)
                       + " > " + " ".join(tok(t) for t in ev.outs))
    if measure is not None:
        out.append("[measure]")
        out += [f"{b} {measure[b]}" for b in sorted(measure)]
    return "\n".join(out) + "\n"


def parse_position(text: str):
    """Parse a ``.pos`` block; returns (position, measure or None)."""
    from .errors import ParseError
    from .formats import parse_measure, parse_track

    sections, cur = {}, None
    lines = text.splitlines()
    if not lines or lines[0].strip() != "pos v1":
        raise ParseError("first line must be 'pos v1'")
    for raw in lines[1:]:
        line = raw.split("#", 1)[0].rstrip()
        if line.strip().startswith("[") and line.strip().endswith("]"):
            cur = line.strip()[1:-1]
            sections[cur] = []
        elif line.strip():
            if cur is None:
                raise ParseError(f"content outside a section: {line!r}")
            sections[cur].append(line.strip())
    try:
        base = parse_track("\n".join(sections["base"]))
        carried = parse_track("\n".join(sections["carried"]))
    except KeyError as exc:
        raise ParseError(f"missing section {exc}") from None
    rects, labels = {}, {}
    events: dict[int, list] = {}

    def tok(s):
        t, l = s.split(":")
        labels[int(t)] = int(l)
        return int(t)

    for line in sections.get("strands", []):
        parts = line.split()
        try:
            if parts[0] == "rect":
                rects[int(parts[1])] = tuple(tok(s) for s in parts[2:])
            elif parts[0] == "event":
                k = parts.index(">")
                ins = tuple(tok(s) for s in parts[4:k])
                outs = tuple(tok(s) for s in parts[k + 1:])
                if parts[3] not in (MERGE, DIVERGE):
                    raise ValueError
                events.setdefault(int(parts[1]), []).append(Event(int(parts[2]), parts[3], ins, outs))
            else:
                raise ValueError
        except (ValueError, IndexError):
            raise ParseError(f"cannot parse strand line {line!r}") from None
    if set(rects) != set(base.branches):
        raise ParseError("strand data must list one rectangle per base branch")
    pos = CarriedPosition(base, carried, {b: Rect(f, tuple(events.get(b, ()))) for b, f in rects.items()},
                          labels)
    check_position(pos)
    measure = parse_measure("\n".join(sections["measure"])) if "measure" in sections else None
    return pos, measure
