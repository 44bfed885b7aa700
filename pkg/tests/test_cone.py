import itertools
import json
import random

import networkx as nx
import pytest
from hypothesis import given, strategies as st

from conftest import CATALOG
from ttkit import cone as cn
from ttkit.errors import NotInCone, RadiusExceeded, TrackError
from ttkit.generators import catalog
from ttkit.moves import SplitMove, as_proxy, full_lambda_split, lambda_step
from ttkit.track import random_measure, validate


def measure(track, seed):
    return random_measure(track, random.Random(seed))


def undirected(cone):
    g = nx.Graph()
    g.add_nodes_from(cone.vertices)
    g.add_edges_from((a, b) for a, b, _, _ in cone.edges)
    return g


def directed(cone):
    g = nx.DiGraph()
    g.add_nodes_from(cone.vertices)
    g.add_edges_from((a, b) for a, b, _, _ in cone.edges)
    return g


def all_words(track, lam, length):
    """Every lambda-splitting word up to ``length`` with its endpoint, by brute force."""
    out = [((), track)]
    frontier = [((), track, as_proxy(lam))]
    for _ in range(length):
        nxt = []
        for word, t, p in frontier:
            for e in t.large_branches():
                try:
                    o, d = lambda_step(t, e, p)
                except TrackError:
                    continue
                w = word + (SplitMove(e, d),)
                nxt.append((w, o.track, o.proxy))
                out.append((w, o.track))
        frontier = nxt
    return out


def test_radius_zero_is_one_vertex(track):
    c = cn.cone_ball(track, measure(track, 0), 0)
    assert list(c.vertices) == [(0,) * len(track.branches)]
    assert c.origin.track == track and c.edges == []


def test_phi_of_empty_word_is_zero(track):
    c = cn.cone_ball(track, measure(track, 0), 1)
    assert cn.phi(c, []) == (0,) * len(track.branches)


def test_full_split_is_large_branch_indicator(track):
    mu = measure(track, 1)
    c = cn.cone_ball(track, mu, len(track.large_branches()))
    full = full_lambda_split(track, mu)
    expected = tuple(int(b in track.large_branches()) for b in track.branches)
    assert cn.phi(c, full.moves) == expected
    assert c[expected].track.key() == full.track.key()


def test_commuting_splits_reach_same_point(track):
    mu = measure(track, 2)
    c = cn.cone_ball(track, mu, 2)
    e, f = track.large_branches()[:2]
    de = as_proxy(mu).direction(track, e)
    df = as_proxy(mu).direction(track, f)
    one = [SplitMove(e, de), SplitMove(f, df)]
    two = [SplitMove(f, df), SplitMove(e, de)]
    assert cn.phi(c, one) == cn.phi(c, two)
    assert cn.replay(c, one).key() == cn.replay(c, two).key()


@pytest.mark.parametrize("seed", range(3))
def test_every_word_lands_on_its_phi_vertex(track, seed):
    mu = measure(track, seed)
    c = cn.cone_ball(track, mu, 4)
    by_phi = {}
    for word, end in all_words(track, mu, 4):
        p = cn.phi(c, word)
        assert p in c
        assert c[p].track.key() == end.key()
        by_phi.setdefault(p, set()).add(end.key())
    assert set(by_phi) == set(c.vertices)
    assert all(len(keys) == 1 for keys in by_phi.values())


def test_enumerated_tracks_validate(track):
    c = cn.cone_ball(track, measure(track, 3), 4, check=False)
    assert all(validate(v.track).ok for v in c.vertices.values())


@given(st.sampled_from(CATALOG), st.integers(0, 10**6))
def test_growth_bound_and_monotone(name, seed):
    t = catalog(name)
    c = cn.cone_ball(t, measure(t, seed), 5)
    g = cn.growth(c)
    m = len(t.branches)
    assert all(b <= (k + 1) ** m for k, b in enumerate(g))
    assert all(x <= y for x, y in zip(g, g[1:]))


@given(st.sampled_from(CATALOG), st.integers(0, 10**6))
def test_bfs_distance_from_basepoint_is_l1_norm(name, seed):
    t = catalog(name)
    c = cn.cone_ball(t, measure(t, seed), 5)
    dist = nx.single_source_shortest_path_length(undirected(c), c.origin.phi)
    assert all(dist[p] == sum(p) for p in c.vertices)
    assert all(len(v.word) == v.norm for v in c.vertices.values())


def test_l1_distance_matches_bfs_on_all_pairs():
    t = catalog("S05A")
    for seed in range(3):
        c = cn.cone_ball(t, measure(t, seed), 5)
        dist = dict(nx.all_pairs_shortest_path_length(undirected(c)))
        for a, b in itertools.combinations(c.vertices, 2):
            assert cn.distance(c, a, b) == dist[a][b]


def test_theta_fast_path_matches_partial_order(track):
    for seed in range(2):
        c = cn.cone_ball(track, measure(track, seed), 4)
        dg = directed(c)
        below = {p: nx.descendants(dg, p) | {p} for p in c.vertices}
        cache = {}
        for a, b in itertools.combinations(sorted(c.vertices), 2):
            lo = cn.theta_minus(c, a, b).phi
            common = [p for p in c.vertices if a in below[p] and b in below[p]]
            assert lo in common and all(lo in below[q] for q in common)
            assert cn.brute_theta_minus(c, a, b, cache) == lo
            if sum(map(max, a, b)) <= 4:
                hi = cn.theta_plus(c, a, b).phi
                assert cn.brute_theta_plus(c, a, b, cache) == hi
                assert below[hi] == below[a] & below[b]
                assert cn.distance(c, a, lo) == cn.distance(c, b, hi)
                if not any(lo):
                    assert hi == tuple(x + y for x, y in zip(a, b))


def test_theta_on_equal_and_nested_vertices(track):
    c = cn.cone_ball(track, measure(track, 4), 3)
    for v in c.vertices.values():
        assert cn.theta_minus(c, v, v).phi == v.phi == cn.theta_plus(c, v, v).phi
        assert cn.distance(c, v, v) == 0
        prefix = cn.phi(c, v.word[:1])
        assert cn.theta_minus(c, prefix, v).phi == prefix
        assert cn.distance(c, c.origin, v) == len(v.word)


def test_theta_errors(track):
    c = cn.cone_ball(track, measure(track, 5), 1)
    m = len(track.branches)
    with pytest.raises(NotInCone):
        cn.theta_minus(c, (0,) * m, (7,) * m)
    a, b = [p for p in c.vertices if sum(p) == 1][:2]
    with pytest.raises(RadiusExceeded):
        cn.theta_plus(c, a, b)


def test_subcone_of_basepoint_is_everything(track):
    c = cn.cone_ball(track, measure(track, 6), 3)
    rep = cn.subcone_convexity_check(c, c.origin, 3)
    assert rep.ok and rep.hausdorff == 0


def test_one_split_subcones_are_convex_with_hausdorff_one():
    t = catalog("S05A")
    c = cn.cone_ball(t, measure(t, 7), 4)
    for p in [p for p in c.vertices if sum(p) == 1]:
        rep = cn.subcone_convexity_check(c, p, 3)
        assert rep.ok, rep.geodesic_violations[:3] or rep.far_vertices[:3]
        assert rep.hausdorff <= 1 and rep.pairs_checked > 0


def test_two_split_subcones_are_convex():
    t = catalog("S12A")
    c = cn.cone_ball(t, measure(t, 7), 5)
    for p in [p for p in c.vertices if sum(p) == 2]:
        rep = cn.subcone_convexity_check(c, p, 3)
        assert rep.ok and rep.hausdorff <= 2


@pytest.mark.parametrize("p", [1, 2])
def test_random_split_words_reach_full_split(track, p):
    rng = random.Random(p)
    mu = measure(track, 8)
    target, point, _ = cn.full_split_target(track, mu, p)
    for _ in range(5):
        t, lam, start = track, as_proxy(mu), dict.fromkeys(track.branches, 0)
        for _ in range(p):
            e = rng.choice(t.large_branches())
            o, _ = lambda_step(t, e, lam)
            t, lam = o.track, o.proxy
            start[e] += 1
        start = tuple(start[b] for b in track.branches)
        if any(s > q for s, q in zip(start, point)):
            continue
        w = cn.splitting_search(t, lam, start, point, track.branches, target.key())
        assert w is not None


def test_json_export_is_deterministic(track):
    mu = measure(track, 9)
    a = json.dumps(cn.cone_json(cn.cone_ball(track, mu, 3)), sort_keys=True)
    b = json.dumps(cn.cone_json(cn.cone_ball(track, mu, 3)), sort_keys=True)
    assert a == b
    data = json.loads(a)
    assert data["schema"] == "ttkit-1" and data["kind"] == "flat-cone"
    assert [v["phi"] for v in data["vertices"]] == sorted(v["phi"] for v in data["vertices"])


def test_dot_export_lists_every_vertex(track):
    c = cn.cone_ball(track, measure(track, 9), 2)
    dot = cn.cone_dot(c)
    assert dot.startswith("digraph cone {")
    assert dot.count("->") == len(c.edges)
    assert dot.count("[label=") == len(c.edges) + len(c.vertices)
