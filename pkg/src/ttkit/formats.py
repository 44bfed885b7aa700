"""Text formats: ``.tt`` tracks, move words and measure files."""

from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path

from .errors import ParseError
from .track import Switch, TrainTrack, format_key, surface_signature

_SW = re.compile(r"^sw\s+(-?\d+)\s+L=(\d+)\.([01])\s+A=(\d+)\.([01])\s+B=(\d+)\.([01])$")
_PUNCT = re.compile(r"^punct\s+(\d+)\.([01])\.([LR])$")
_SURF = re.compile(r"^surface\s+g=(\d+)\s+k=(\d+)$")


def _lines(text: str):
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield n, line


def parse_track(text: str, check_surface: bool = True) -> TrainTrack:
    lines = list(_lines(text))
    if not lines or lines[0][1] != "tt v1":
        raise ParseError("first line must be 'tt v1'")
    declared = None
    switches, punct = [], []
    for n, line in lines[1:]:
        if m := _SURF.match(line):
            declared = (int(m[1]), int(m[2]))
        elif m := _SW.match(line):
            g = [int(x) for x in m.groups()]
            switches.append(Switch(g[0], (g[1], g[2]), (g[3], g[4]), (g[5], g[6])))
        elif m := _PUNCT.match(line):
            punct.append((int(m[1]), int(m[2]), m[3]))
        else:
            raise ParseError(f"line {n}: cannot parse {line!r}")
    track = TrainTrack.build(switches, punct)
    if check_surface and declared is not None:
        sig = surface_signature(track)
        if (sig.genus, sig.punctures) != declared:
            raise ParseError(
                f"declared surface g={declared[0]} k={declared[1]} but the track gives "
                f"g={sig.genus} k={sig.punctures}")
    return track


def format_track(track: TrainTrack) -> str:
    try:
        sig = surface_signature(track)
        head = f"surface g={sig.genus} k={sig.punctures}"
    except Exception:
        head = None
    out = ["tt v1"]
    if head:
        out.append(head)
    for s in track.switches:
        out.append(f"sw {s.id} L={s.L[0]}.{s.L[1]} A={s.A[0]}.{s.A[1]} B={s.B[0]}.{s.B[1]}")
    for k in sorted(track.punctured):
        out.append(f"punct {format_key(k)}")
    return "\n".join(out) + "\n"


def read_track(path) -> TrainTrack:
    return parse_track(Path(path).read_text(encoding="utf-8"))


# -- moves ------------------------------------------------------------------

def parse_word(text: str):
    from .moves import CollapseMove, ShiftMove, SplitMove

    word = []
    for n, line in _lines(text):
        parts = line.split()
        try:
            if parts[0] == "split" and len(parts) == 3:
                word.append(SplitMove(int(parts[1]), _direction(parts[2])))
            elif parts[0] == "collapse" and len(parts) == 3:
                word.append(CollapseMove(int(parts[1]), _direction(parts[2])))
            elif parts[0] == "shift" and len(parts) == 2:
                word.append(ShiftMove(int(parts[1])))
            else:
                raise ValueError
        except ValueError:
            raise ParseError(f"line {n}: cannot parse move {line!r}") from None
    return word


def _direction(tok: str) -> str:
    if tok not in ("R", "L"):
        raise ValueError
    return "right" if tok == "R" else "left"


def format_word(word) -> str:
    return "".join(f"{m}\n" for m in word)


# -- measures ---------------------------------------------------------------

def parse_measure(text: str) -> dict[int, Fraction]:
    """Lines ``<branch> <weight>``; weights are integers or fractions like ``3/2``."""
    mu = {}
    for n, line in _lines(text):
        parts = line.split()
        if parts[0] == "measure":
            continue
        try:
            b, w = int(parts[0]), Fraction(parts[1])
        except (ValueError, IndexError, ZeroDivisionError):
            raise ParseError(f"line {n}: cannot parse weight {line!r}") from None
        if len(parts) != 2 or b in mu:
            raise ParseError(f"line {n}: malformed or repeated weight {line!r}")
        mu[b] = w
    return mu


def format_measure(mu) -> str:
    return "measure v1\n" + "".join(f"{b} {mu[b]}\n" for b in sorted(mu))
