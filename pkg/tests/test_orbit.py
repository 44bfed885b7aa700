import itertools
import random

import networkx as nx
import pytest
from networkx.algorithms.isomorphism import GraphMatcher, categorical_node_match

from conftest import CATALOG, random_walk
from ttkit import orbit
from ttkit.errors import SignatureMismatch
from ttkit.generators import catalog


def oracle_graph(track):
    """Switches, colored half-edges, branches and marked regions as a plain labelled graph."""
    g = nx.Graph()
    for s in track.switches:
        g.add_node(("s", s.id), kind="switch")
        for color, h in zip("ryg", (s.L, s.A, s.B)):
            g.add_node(("h", h), kind=color)
            g.add_edge(("s", s.id), ("h", h))
    for b in track.branches:
        g.add_edge(("h", (b, 0)), ("h", (b, 1)))
    for i, r in enumerate(track.regions):
        g.add_node(("r", i), kind="punctured" if r.punctured else "region")
        for side in r.sides:
            g.add_edge(("r", i), ("h", side))
    return g


def matcher(a, b):
    return GraphMatcher(oracle_graph(a), oracle_graph(b), node_match=categorical_node_match("kind", None))


def random_relabel(track, rng):
    perm = list(track.branches)
    rng.shuffle(perm)
    bm = {b: 50 + p for b, p in zip(track.branches, perm)}
    sids = [s.id for s in track.switches]
    sp = sids[:]
    rng.shuffle(sp)
    flips = [b for b in track.branches if rng.random() < 0.5]
    return track.relabel(bm, dict(zip(sids, sp)), flip=flips)


def region_set(regions):
    return {(frozenset(r.sides), r.cusps, r.punctured) for r in regions}


def sample_tracks(count, seed):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        out.append(random_walk(catalog(rng.choice(CATALOG)), rng, rng.randint(0, 10))[0])
    return out


def test_certificate_invariant_under_relabeling(track):
    rng = random.Random(1)
    cert = orbit.certificate(track)
    for _ in range(25):
        assert orbit.certificate(random_relabel(track, rng)) == cert


def test_regions_from_colors_match_traced_regions(track):
    assert region_set(orbit.regions_from_colors(orbit.colored_graph(track))) == region_set(track.regions)


def test_regions_from_colors_on_random_tracks():
    for t in sample_tracks(30, 2):
        assert region_set(orbit.regions_from_colors(orbit.colored_graph(t))) == region_set(t.regions)


def test_certificate_equality_matches_isomorphism_oracle():
    tracks = sample_tracks(16, 3)
    rng = random.Random(6)
    tracks += [t.mirror() for t in tracks[:4]] + [random_relabel(t, rng) for t in tracks[:6]]
    verdicts = set()
    for a, b in itertools.combinations(tracks, 2):
        if len(a.branches) != len(b.branches):
            continue
        same = orbit.certificate(a) == orbit.certificate(b)
        assert same == matcher(a, b).is_isomorphic()
        verdicts.add(same)
    assert verdicts == {True, False}


def test_mirror_agrees_with_oracle(track):
    m = track.mirror()
    assert (orbit.certificate(m) == orbit.certificate(track)) == matcher(track, m).is_isomorphic()


def test_moving_a_puncture_changes_certificate():
    t = catalog("S12A")
    trigons = [r for r in t.regions if not r.punctured]
    marked = [r for r in t.regions if r.punctured]
    moved = t.replace(t.switches, [(*trigons[0].sides[0], "L"), (*marked[1].sides[0], "L")])
    assert moved.punctured != t.punctured
    assert (orbit.certificate(moved) == orbit.certificate(t)) == matcher(moved, t).is_isomorphic()


def test_automorphism_count_matches_oracle(track):
    g = orbit.colored_graph(track)
    expected = sum(1 for _ in matcher(track, track).isomorphisms_iter())
    assert orbit.automorphism_count(g) == expected


def test_isomorphism_map_relabels_one_track_into_the_other(track):
    rng = random.Random(4)
    other = random_relabel(track, rng)
    emap = orbit.isomorphism(track, other)
    assert emap is not None
    assert orbit.certificate(track.relabel(emap)) == orbit.certificate(other)
    assert {frozenset((s.L[0], s.A[0], s.B[0])) for s in track.relabel(emap).switches} == \
        {frozenset((s.L[0], s.A[0], s.B[0])) for s in other.switches}


def test_same_orbit(track):
    rng = random.Random(5)
    assert orbit.same_orbit(track, random_relabel(track, rng))


def test_same_orbit_rejects_different_surfaces():
    with pytest.raises(SignatureMismatch):
        orbit.same_orbit(catalog("S05A"), catalog("S20A"))


def test_certificate_is_hex(track):
    cert = orbit.certificate(track)
    assert cert == cert.lower()
    int(cert, 16)


def test_colored_graph_commutes_with_relabeling(track):
    bm = {b: b + 40 for b in track.branches}
    sm = {s.id: s.id + 70 for s in track.switches}
    direct = orbit.colored_graph(track.relabel(bm, sm))
    moved = orbit.colored_graph(track).relabel(sm, bm)
    assert direct.vertices == moved.vertices
    assert set(orbit.regions_from_colors(direct)) == set(orbit.regions_from_colors(moved))
