"""Command-line front end. Exit codes: 0 success, 1 domain error, 2 usage error."""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import ambient, carrying, cone as cones, orbit
from .errors import TrackError
from .formats import format_track, format_word, parse_measure, parse_track, parse_word
from .generators import PantsTrack, recover_pants_map, twist_word
from .moves import apply_sequence
from .track import check_measure, format_key, is_recurrent, random_measure, surface_signature, validate


class UsageError(Exception):
    pass


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _track(path):
    return parse_track(_read(path))


def _measure(args, track):
    if args.measure:
        mu = parse_measure(_read(args.measure))
        bad = check_measure(track, mu)
        if bad:
            raise TrackError(f"measure violates the switch condition at switches {bad}")
        if min(mu.values()) <= 0:
            raise TrackError("measure is not strictly positive")
        return mu
    rng = random.Random(args.seed)
    return {b: Fraction(x) for b, x in random_measure(track, rng).items()}


def _threads() -> int:
    raw = os.environ.get("TTKIT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"TTKIT_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("TTKIT_THREADS must be at least 1")
    return n


def _phi_arg(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"lattice point must be comma-separated integers, got {text!r}") from None


# -- verbs ----------------------------------------------------------------------------------

def cmd_validate(args, out):
    track = _track(args.file)
    rep = validate(track)
    for name in ("generic", "connected", "maximal", "slot_consistent"):
        out.write(f"{name} {'yes' if getattr(rep, name) else 'no'}\n")
    for p in rep.problems:
        out.write(f"problem {p}\n")
    if rep.ok:
        sig = surface_signature(track)
        out.write(f"surface g={sig.genus} k={sig.punctures}\n")
    return 0 if rep.ok else 1


def cmd_regions(args, out):
    track = _track(args.file)
    for g in track.regions:
        out.write(f"region {format_key(g.key)} kind={g.kind} cusps={g.cusps} "
                  f"punctured={'yes' if g.punctured else 'no'} sides={len(g.sides)}\n")
    return 0


def cmd_recurrent(args, out):
    track = _track(args.file)
    mu = is_recurrent(track)
    if mu is None:
        out.write("recurrent no\n")
        return 1
    out.write("recurrent yes\n")
    out.write("".join(f"{b} {mu[b]}\n" for b in sorted(mu)))
    return 0


def cmd_apply(args, out):
    track = _track(args.file)
    word = parse_word(_read(args.word))
    out.write(format_track(apply_sequence(track, word).track))
    return 0


def cmd_cone(args, out):
    track = _track(args.file)
    lam = _measure(args, track)
    c = cones.cone_ball(track, lam, args.radius)
    if args.json:
        out.write(json.dumps(cones.cone_json(c), sort_keys=True) + "\n")
    elif args.dot:
        out.write(cones.cone_dot(c))
    else:
        out.write(f"vertices {len(c.vertices)}\n")
        out.write(f"edges {len(c.edges)}\n")
        out.write("growth " + " ".join(map(str, cones.growth(c))) + "\n")
        out.write(f"truncated {len(c.truncated)}\n")
    return 0


def cmd_dist(args, out):
    try:
        data = json.loads(_read(args.cone))
    except ValueError:
        raise UsageError(f"{args.cone} is not valid JSON") from None
    if data.get("schema") != "ttkit-1" or data.get("kind") != "flat-cone":
        raise UsageError(f"{args.cone} is not a ttkit-1 flat cone export")
    points = {tuple(v["phi"]) for v in data["vertices"]}
    a, b = _phi_arg(args.phi1), _phi_arg(args.phi2)
    for p in (a, b):
        if len(p) != len(data["index"]):
            raise UsageError(f"lattice point {p} has the wrong length")
        if p not in points:
            raise TrackError(f"lattice point {p} is not a vertex of the cone")
    meet = tuple(map(min, a, b))
    join = tuple(map(max, a, b))
    out.write(f"distance {sum(abs(x - y) for x, y in zip(a, b))}\n")
    out.write(f"meet {','.join(map(str, meet))}\n")
    out.write(f"join {','.join(map(str, join)) if join in points else 'outside-ball'}\n")
    return 0


def cmd_orbit_cert(args, out):
    out.write(orbit.certificate(_track(args.file)) + "\n")
    return 0


def cmd_same_orbit(args, out):
    same = orbit.same_orbit(_track(args.a), _track(args.b))
    out.write(f"same-orbit {'yes' if same else 'no'}\n")
    return 0


def cmd_agree(args, out):
    text = _read(args.pos)
    measure = None
    if text.lstrip().startswith("pos v1"):
        pos, measure = carrying.parse_position(text)
    else:
        pos = carrying.identity_position(parse_track(text))
    if args.measure or measure is None:
        measure = _measure(args, pos.carried)
    res = carrying.agree(pos, measure)
    out.write(f"phases {res.phases}\n")
    out.write(f"base-word {len(res.base_word)}\n" + format_word(res.base_word))
    out.write(f"carried-word {len(res.carried_word)}\n" + format_word(res.carried_word))
    out.write(f"shift-word {len(res.shift_word)}\n" + format_word(res.shift_word))
    return 0


def cmd_tt_ball(args, out):
    track = _track(args.file)
    ball = ambient.tt_ball(track, args.radius, with_shifts=args.with_shifts, directed=args.directed)
    for d, n in enumerate(ball.counts()):
        out.write(f"distance {d} vertices {n}\n")
    out.write(f"total {len(ball.vertices)}\n")
    return 0


def cmd_distortion(args, out):
    track = _track(args.file)
    lam = _measure(args, track)
    rep = ambient.distortion(track, lam, args.radius, with_shifts=args.with_shifts)
    out.write("\n".join(rep.lines()) + "\n")
    return 0


def cmd_twist_growth(args, out):
    track = _track(args.file)
    pairs = recover_pants_map(track)
    if not pairs:
        raise TrackError("no large branch closes up into a length-2 loop")
    pants = PantsTrack(track, {f"c{e}": (e, s) for e, s in sorted(pairs.items())})
    index = list(track.branches)
    out.write("curve n word-length phi-l1 phi-support same-track\n")
    for curve in pants.curves:
        base = twist_word(pants, curve)
        for n in range(1, args.n + 1):
            word = base * n
            end = apply_sequence(track, word).track
            phi = dict.fromkeys(index, 0)
            for m in word:
                phi[m.at] += 1
            support = ",".join(f"{b}:{phi[b]}" for b in index if phi[b])
            out.write(f"{curve} {n} {len(word)} {sum(phi.values())} {support} "
                      f"{'yes' if end.key() == track.key() else 'no'}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ttkit", description="Train tracks on punctured surfaces.")
    p.add_argument("--seed", type=int, default=0, help="seed for randomly drawn measures")
    sub = p.add_subparsers(dest="verb", required=True, metavar="verb")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)

    def verb(name, fn, help_):
        s = sub.add_parser(name, help=help_, parents=[common])
        s.set_defaults(fn=fn)
        return s

    verb("validate", cmd_validate, "check a track").add_argument("file")
    verb("regions", cmd_regions, "list complementary regions").add_argument("file")
    verb("recurrent", cmd_recurrent, "find a positive transverse measure").add_argument("file")
    s = verb("apply", cmd_apply, "apply a move word")
    s.add_argument("file")
    s.add_argument("word")
    s = verb("cone", cmd_cone, "enumerate a flat cone ball")
    s.add_argument("file")
    s.add_argument("--measure")
    s.add_argument("--radius", type=int, required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--json", action="store_true")
    g.add_argument("--dot", action="store_true")
    s = verb("dist", cmd_dist, "distance, meet and join in an exported cone")
    s.add_argument("cone")
    s.add_argument("phi1")
    s.add_argument("phi2")
    verb("orbit-cert", cmd_orbit_cert, "orbit certificate").add_argument("file")
    s = verb("same-orbit", cmd_same_orbit, "compare orbit certificates")
    s.add_argument("a")
    s.add_argument("b")
    s = verb("agree", cmd_agree, "make a carried track and its carrier agree")
    s.add_argument("pos")
    s.add_argument("--measure")
    s = verb("tt-ball", cmd_tt_ball, "ball in the ambient graph of tracks")
    s.add_argument("file")
    s.add_argument("--radius", type=int, required=True)
    s.add_argument("--with-shifts", action="store_true")
    s.add_argument("--directed", action="store_true")
    s = verb("distortion", cmd_distortion, "cone distance against ambient distance")
    s.add_argument("file")
    s.add_argument("--measure")
    s.add_argument("--radius", type=int, required=True)
    s.add_argument("--with-shifts", action="store_true")
    s = verb("twist-growth", cmd_twist_growth, "twist word length against cone distance")
    s.add_argument("file")
    s.add_argument("--n", type=int, required=True)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for name in ("radius", "n"):
        if getattr(args, name, 0) is not None and getattr(args, name, 0) < 0:
            print(f"ttkit: --{name} must be nonnegative", file=sys.stderr)
            return 2
    try:
        _threads()
        return args.fn(args, out)
    except UsageError as exc:
        print(f"ttkit: {exc}", file=sys.stderr)
        return 2
    except TrackError as exc:
        print(f"ttkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
