"""Split, shift and collapse moves, measure transport and lambda-splits.

Branch identifiers are inherited through every move: the split branch keeps
its identifier as the diagonal of the new track, so each returned
correspondence is the identity map on branch ids. It is still materialised so
callers never need to rely on that.

Local labels at a large branch ``e`` whose end 0 sits at switch ``v`` and end
1 at switch ``w``: ``a = v.B``, ``b = w.A``, ``c = w.B``, ``d = v.A``. The
right split makes ``a`` and ``c`` the winners and the left split makes ``d``
and ``b`` the winners. Mirroring the surface exchanges the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .errors import (MoveFailed, NotCarried, NotCollapsible, NotLargeBranch,
                     NotMixedBranch, TieCollision, TrackError, UnknownBranch)
from .track import Switch, TrainTrack, validate

RIGHT, LEFT = "right", "left"


@dataclass(frozen=True)
class SplitMove:
    at: int
    direction: str

    def __str__(self):
        return f"split {self.at} {'R' if self.direction == RIGHT else 'L'}"

    def inverse(self):
        return CollapseMove(self.at, self.direction)


@dataclass(frozen=True)
class CollapseMove:
    at: int
    direction: str

    def __str__(self):
        return f"collapse {self.at} {'R' if self.direction == RIGHT else 'L'}"

    def inverse(self):
        return SplitMove(self.at, self.direction)


@dataclass(frozen=True)
class ShiftMove:
    at: int

    def __str__(self):
        return f"shift {self.at}"

    def inverse(self):
        return self


Move = Union[SplitMove, CollapseMove, ShiftMove]


@dataclass(frozen=True)
class MoveOutcome:
    track: TrainTrack
    correspondence: Mapping[int, int]
    moves: tuple = ()
    proxy: object = None


def other(direction: str) -> str:
    return LEFT if direction == RIGHT else RIGHT


def inverse_word(word: Sequence[Move]) -> list[Move]:
    return [m.inverse() for m in reversed(word)]


def _rebuild(track: TrainTrack, switches: Iterable[Switch], moved: int) -> TrainTrack:
    """New track from rewritten switches, carrying puncture marks across.

    A punctured region is followed through any boundary side on a branch other
    than the one the move touched.
    """
    bare = TrainTrack.build(switches)
    regions = {g.key: g for g in track.regions}
    marks = []
    for key in track.punctured:
        side = next(s for s in regions[key].sides if s[0] != moved)
        marks.append(bare.region_key_of(side))
    return TrainTrack(bare.switches, frozenset(marks))


def _identity(track: TrainTrack) -> dict[int, int]:
    return {b: b for b in track.branches}


def _ends(track: TrainTrack, e: int) -> tuple[Switch, Switch]:
    return track.locate((e, 0))[0], track.locate((e, 1))[0]


def split_labels(track: TrainTrack, e: int) -> dict[str, tuple[int, int]]:
    """The half-branches a, b, c, d around the large branch e."""
    if track.classify(e) != "large":
        raise NotLargeBranch(f"branch {e} is {track.classify(e)}, not large")
    v, w = _ends(track, e)
    return {"a": v.B, "b": w.A, "c": w.B, "d": v.A}


def split(track: TrainTrack, move: SplitMove) -> MoveOutcome:
    e = move.at
    if track.classify(e) != "large":
        raise NotLargeBranch(f"branch {e} is {track.classify(e)}, not large")
    v, w = _ends(track, e)
    if move.direction == RIGHT:
        nv = Switch(v.id, v.B, w.A, (e, 0))
        nw = Switch(w.id, w.B, v.A, (e, 1))
    elif move.direction == LEFT:
        nv = Switch(v.id, v.A, (e, 0), w.B)
        nw = Switch(w.id, w.A, (e, 1), v.B)
    else:
        raise ValueError(move.direction)
    rest = [s for s in track.switches if s.id not in (v.id, w.id)]
    new = _rebuild(track, rest + [nv, nw], e)
    return MoveOutcome(new, _identity(track), (move,))


def collapse(track: TrainTrack, at: int, direction: str) -> MoveOutcome:
    track._check_branch(at)
    v, w = _ends(track, at)
    sv, sw = track.slot_of(at, 0), track.slot_of(at, 1)
    want = "B" if direction == RIGHT else "A"
    if v.id == w.id or sv != want or sw != want:
        raise NotCollapsible(f"branch {at} is not the diagonal of a {direction} split")
    if direction == RIGHT:
        nv = Switch(v.id, (at, 0), w.A, v.L)
        nw = Switch(w.id, (at, 1), v.A, w.L)
    else:
        nv = Switch(v.id, (at, 0), v.L, w.B)
        nw = Switch(w.id, (at, 1), w.L, v.B)
    rest = [s for s in track.switches if s.id not in (v.id, w.id)]
    try:
        new = _rebuild(track, rest + [nv, nw], at)
    except TrackError as exc:
        raise NotCollapsible(str(exc)) from None
    if not validate(new).maximal:
        raise NotCollapsible(f"collapsing {at} would leave a non-maximal track")
    return MoveOutcome(new, _identity(track), (CollapseMove(at, direction),))


def collapsible(track: TrainTrack) -> list[CollapseMove]:
    """All collapses whose slot pattern matches and whose result is maximal."""
    out = []
    for b in track.small_branches():
        for d in (RIGHT, LEFT):
            try:
                collapse(track, b, d)
            except NotCollapsible:
                continue
            out.append(CollapseMove(b, d))
    return out


def shift(track: TrainTrack, b: int) -> MoveOutcome:
    if track.classify(b) != "mixed":
        raise NotMixedBranch(f"branch {b} is {track.classify(b)}, not mixed")
    eu = 0 if track.slot_of(b, 0) == "L" else 1
    ew = 1 - eu
    u = track.locate((b, eu))[0]
    w, slot = track.locate((b, ew))
    if u.id == w.id:
        raise NotMixedBranch(f"branch {b} is a loop")
    if slot == "A":
        nw = Switch(w.id, w.L, u.A, (b, ew))
        nu = Switch(u.id, (b, eu), u.B, w.B)
    else:
        nw = Switch(w.id, w.L, (b, ew), u.B)
        nu = Switch(u.id, (b, eu), w.A, u.A)
    rest = [s for s in track.switches if s.id not in (u.id, w.id)]
    new = _rebuild(track, rest + [nu, nw], b)
    return MoveOutcome(new, _identity(track), (ShiftMove(b),))


def apply_move(track: TrainTrack, move: Move) -> MoveOutcome:
    if isinstance(move, SplitMove):
        return split(track, move)
    if isinstance(move, CollapseMove):
        return collapse(track, move.at, move.direction)
    if isinstance(move, ShiftMove):
        return shift(track, move.at)
    raise TypeError(move)


def apply_sequence(track: TrainTrack, word: Sequence[Move]) -> MoveOutcome:
    corr = _identity(track)
    for i, m in enumerate(word):
        try:
            out = apply_move(track, m)
        except TrackError as exc:
            raise MoveFailed(i, m, exc) from exc
        corr = {b: out.correspondence[c] for b, c in corr.items()}
        track = out.track
    return MoveOutcome(track, corr, tuple(word))


# -- measures ----------------------------------------------------------------

def _w(mu, hb):
    return mu[hb[0]]


def split_direction(track: TrainTrack, mu: Mapping[int, Fraction], e: int) -> str:
    """The split direction at e carrying the measure; raises TieCollision on a tie."""
    lab = split_labels(track, e)
    a, b = _w(mu, lab["a"]), _w(mu, lab["b"])
    if a == b:
        raise TieCollision(f"weights of a and b agree ({a}) at branch {e}")
    return RIGHT if a > b else LEFT


def measure_after_split(track: TrainTrack, mu: Mapping[int, Fraction], move: SplitMove,
                        correspondence: Mapping[int, int] | None = None) -> dict[int, Fraction]:
    lab = split_labels(track, move.at)
    diag = _w(mu, lab["a"]) - _w(mu, lab["b"])
    if diag == 0:
        raise TieCollision(f"weights of a and b agree at branch {move.at}")
    if move.direction == LEFT:
        diag = -diag
    if diag < 0:
        raise NotCarried(f"the {move.direction} split at {move.at} does not carry the measure")
    corr = correspondence or {b: b for b in track.branches}
    new = {corr[b]: Fraction(w) for b, w in mu.items()}
    new[corr[move.at]] = Fraction(diag)
    return new


def measure_after_shift(track: TrainTrack, mu, b: int, new_track: TrainTrack) -> dict[int, Fraction]:
    """Weights on the shifted track; only the shifted branch changes."""
    u = new_track.locate((b, 0 if new_track.slot_of(b, 0) == "L" else 1))[0]
    new = dict(mu)
    new[b] = mu[u.A[0]] + mu[u.B[0]]
    return new


def measure_after_collapse(mu, at: int, new_track: TrainTrack) -> dict[int, Fraction]:
    v = new_track.locate((at, 0))[0]
    new = dict(mu)
    new[at] = mu[v.A[0]] + mu[v.B[0]]
    return new


def transport_measure(track: TrainTrack, mu, move: Move, new_track: TrainTrack):
    if isinstance(move, SplitMove):
        return measure_after_split(track, mu, move)
    if isinstance(move, ShiftMove):
        return measure_after_shift(track, mu, move.at, new_track)
    return measure_after_collapse(mu, move.at, new_track)


def pushforward_split(track_before: TrainTrack, mu_after, e: int) -> dict[int, Fraction]:
    """Measure on the unsplit track induced by a measure on its split at e."""
    v = track_before.locate((e, 0))[0]
    new = dict(mu_after)
    new[e] = mu_after[v.A[0]] + mu_after[v.B[0]]
    return new


# -- lamination proxies ---------------------------------------------------------

@dataclass(frozen=True)
class MeasureProxy:
    """A strictly positive transverse measure standing in for a lamination."""

    weights: Mapping[int, Fraction]

    def direction(self, track: TrainTrack, e: int) -> str:
        return split_direction(track, self.weights, e)

    def advance(self, track: TrainTrack, move: SplitMove) -> "MeasureProxy":
        return MeasureProxy(measure_after_split(track, self.weights, move))


@dataclass(frozen=True)
class WordProxy:
    """A recorded splitting word; each split consumes the first matching entry."""

    moves: tuple[SplitMove, ...]

    def direction(self, track: TrainTrack, e: int) -> str:
        for m in self.moves:
            if m.at == e:
                return m.direction
        raise NotCarried(f"recorded word has no split at {e}")

    def advance(self, track: TrainTrack, move: SplitMove) -> "WordProxy":
        moves = list(self.moves)
        i = next(i for i, m in enumerate(moves) if m.at == move.at)
        if moves[i].direction != move.direction:
            raise NotCarried(f"recorded word splits {move.at} to the {moves[i].direction}")
        del moves[i]
        return WordProxy(tuple(moves))


@dataclass(frozen=True)
class CarriedProxy:
    """A carried position over the track; directions come from the strand picture."""

    position: object

    def direction(self, track: TrainTrack, e: int) -> str:
        from .carrying import carried_by_split
        from .errors import Ambiguous

        if self.position.base.key() != track.key():
            raise NotCarried("carried position does not live over this track")
        r = carried_by_split(self.position, e, RIGHT)
        l = carried_by_split(self.position, e, LEFT)
        if r and l:
            raise Ambiguous(f"both splits at {e} carry the position")
        if not (r or l):
            raise NotCarried(f"neither split at {e} carries the position")
        return RIGHT if r else LEFT

    def advance(self, track: TrainTrack, move: SplitMove) -> "CarriedProxy":
        from .carrying import transport_through_base_split

        return CarriedProxy(transport_through_base_split(self.position, move))


def as_proxy(lam) -> object:
    if isinstance(lam, (MeasureProxy, WordProxy, CarriedProxy)):
        return lam
    if isinstance(lam, Mapping):
        return MeasureProxy({b: Fraction(w) for b, w in lam.items()})
    return WordProxy(tuple(lam))


def lambda_step(track: TrainTrack, at: int, lam):
    """One lambda-split: (outcome with transported proxy, direction)."""
    lam = as_proxy(lam)
    if track.classify(at) != "large":
        raise NotLargeBranch(f"branch {at} is {track.classify(at)}, not large")
    d = lam.direction(track, at)
    move = SplitMove(at, d)
    out = split(track, move)
    nxt = lam.advance(track, move)
    return MoveOutcome(out.track, out.correspondence, out.moves, nxt), d


def lambda_split(track: TrainTrack, at: int, lam) -> tuple[MoveOutcome, str]:
    return lambda_step(track, at, lam)


def full_lambda_split(track: TrainTrack, lam, order: Sequence[int] | None = None) -> MoveOutcome:
    """Split once at every branch large in the input, by default in id order."""
    lam = as_proxy(lam)
    large = track.large_branches()
    order = list(order) if order is not None else large
    if sorted(order) != large:
        raise ValueError("order must list exactly the large branches")
    moves = []
    corr = _identity(track)
    for e in order:
        out, d = lambda_step(track, corr[e], lam)
        moves.append(SplitMove(corr[e], d))
        corr = {b: out.correspondence[c] for b, c in corr.items()}
        track, lam = out.track, out.proxy
    return MoveOutcome(track, corr, tuple(moves), lam)


def lambda_word(track: TrainTrack, branches: Sequence[int], lam) -> MoveOutcome:
    """Lambda-split successively at the given (inherited) branch ids."""
    lam = as_proxy(lam)
    moves = []
    for e in branches:
        out, d = lambda_step(track, e, lam)
        moves.append(SplitMove(e, d))
        track, lam = out.track, out.proxy
    return MoveOutcome(track, _identity(track), tuple(moves), lam)
