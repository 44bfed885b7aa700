import itertools

import pytest

from ttkit import moves as mv
from ttkit.cone import cone_ball, phi
from ttkit.errors import InvalidGluing, UnknownCurve, UnknownName
from ttkit.generators import (
    PANTS_S05, PANTS_S12, PANTS_S20, PantsData, catalog, pants_catalog,
    pants_standard_track, recover_pants_map, twist_power_word, twist_word,
)
from ttkit.moves import WordProxy
from ttkit.track import is_recurrent, surface_signature, validate

SIZES = {"S05A": (8, 12), "S12A": (8, 12), "S20A": (12, 18)}


@pytest.mark.parametrize("name", sorted(SIZES))
def test_catalog_sizes(name):
    t = catalog(name)
    assert (len(t.switches), len(t.branches)) == SIZES[name]


def test_unknown_names():
    with pytest.raises(UnknownName):
        catalog("S99Z")
    with pytest.raises(UnknownName):
        pants_catalog("S05A")


@pytest.mark.parametrize("data,sig", [(PANTS_S05, (0, 5)), (PANTS_S12, (1, 2)), (PANTS_S20, (2, 0))])
def test_pants_tracks_are_complete(data, sig):
    p = pants_standard_track(data)
    assert validate(p.track).ok
    s = surface_signature(p.track)
    assert (s.genus, s.punctures) == sig
    assert is_recurrent(p.track) is not None
    assert sorted(p.track.large_branches()) == sorted(e for e, _ in p.curves.values())
    assert recover_pants_map(p.track) == {e: s for e, s in p.curves.values()}


@pytest.mark.parametrize("name", ["pants_S05", "pants_S20"])
def test_shipped_pants_files_match_generator(name):
    assert pants_catalog(name).track == catalog(name)


def test_trainpaths_have_length_two():
    p = pants_catalog("pants_S20")
    for c in p.curves:
        path = p.trainpath(c)
        assert len(path) == 2 and [b for b, _ in path] == list(p.curves[c])


@pytest.mark.parametrize("data", [
    PantsData(("g1",), (("g1", None, None), (None, None, None))),
    PantsData(("g1",), (("g1", "g2", None), ("g1", None, None))),
    PantsData(("g1", "g2"), (("g1", None, None), ("g1", None, None))),
    PantsData(("g1",), (("g1", None), ("g1", None, None))),
    PantsData(("g1", "g2"), (("g1", None, None), ("g1", None, "g2"), ("g2", None, None)), {"g1": "up"}),
])
def test_invalid_gluings(data):
    with pytest.raises(InvalidGluing):
        pants_standard_track(data)


@pytest.mark.parametrize("name", ["pants_S05", "pants_S20"])
def test_twist_returns_to_same_labelled_track(name):
    p = pants_catalog(name)
    for c in p.curves:
        w = twist_word(p, c)
        assert len(w) == 2
        assert mv.apply_sequence(p.track, w).track == p.track


def test_unknown_curve():
    with pytest.raises(UnknownCurve):
        twist_word(pants_catalog("pants_S05"), "g9")


@pytest.mark.parametrize("name", ["pants_S05", "pants_S20"])
def test_twist_words_commute(name):
    p = pants_catalog(name)
    for a, b in itertools.combinations(p.curves, 2):
        ab = twist_word(p, a) + twist_word(p, b)
        ba = twist_word(p, b) + twist_word(p, a)
        assert mv.apply_sequence(p.track, ab).track == mv.apply_sequence(p.track, ba).track


def test_twist_power_phi():
    p = pants_catalog("pants_S05")
    word = twist_power_word(p, {"g1": 2, "g2": 3})
    c = cone_ball(p.track, WordProxy(tuple(word)), 0)
    point = dict(zip(c.index, phi(c, word)))
    for name, n in (("g1", 2), ("g2", 3)):
        e, s = p.curves[name]
        assert point[e] == point[s] == n
    assert sum(point.values()) == 2 * 5
