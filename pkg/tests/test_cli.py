import io
import json
import random
import subprocess
import sys

import pytest

from ttkit import carrying as C
from ttkit.cli import main
from ttkit.formats import format_measure, format_track, format_word
from ttkit.generators import catalog, catalog_path
from ttkit.moves import LEFT, RIGHT, SplitMove, inverse_word, split
from ttkit.track import random_measure


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture
def s05(tmp_path):
    path = tmp_path / "s05.tt"
    path.write_text(format_track(catalog("S05A")))
    return path


def test_validate(s05):
    code, out = run("validate", s05)
    assert code == 0
    assert "maximal yes" in out and "surface g=0 k=5" in out


def test_validate_reports_non_maximal_track(tmp_path):
    t = catalog("S05A")
    # unmark one puncture: that monogon is no longer allowed
    bad = t.replace(t.switches, [(*side, "L") for side in
                                 [r.sides[0] for r in t.regions if r.punctured][1:]])
    path = tmp_path / "bad.tt"
    path.write_text(format_track(bad))
    code, out = run("validate", path)
    assert code == 1
    assert "maximal no" in out and "is a 1-gon" in out


def test_missing_file_is_usage_error(tmp_path):
    assert run("validate", tmp_path / "nope.tt")[0] == 2


def test_malformed_file_is_domain_error(tmp_path):
    path = tmp_path / "broken.tt"
    path.write_text("tt v1\nsw 1 L=1.0 A=2.0\n")
    assert run("validate", path)[0] == 1


def test_unknown_verb_and_negative_radius(s05):
    assert run("frobnicate", s05)[0] == 2
    assert run("cone", s05, "--radius", "-1")[0] == 2
    assert run("twist-growth", s05, "--n", "-2")[0] == 2


def test_regions(s05):
    code, out = run("regions", s05)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 6
    assert sum("kind=trigon" in l for l in lines) == 1


def test_recurrent(s05, tmp_path):
    code, out = run("recurrent", s05)
    assert code == 0 and out.startswith("recurrent yes")
    assert len(out.splitlines()) == 1 + 12
    t = catalog("S05A")
    rng = random.Random(0)
    while True:
        e = rng.choice(t.large_branches())
        t2 = split(t, SplitMove(e, rng.choice([LEFT, RIGHT]))).track
        if run_recurrent(tmp_path, t2) == 1:
            break
        t = t2


def run_recurrent(tmp_path, track):
    path = tmp_path / "r.tt"
    path.write_text(format_track(track))
    return run("recurrent", path)[0]


def test_apply_round_trip(s05, tmp_path):
    t = catalog("S05A")
    word = [SplitMove(t.large_branches()[0], RIGHT), SplitMove(t.large_branches()[1], LEFT)]
    (tmp_path / "w.txt").write_text(format_word(word))
    (tmp_path / "inv.txt").write_text(format_word(inverse_word(word)))
    code, out = run("apply", s05, tmp_path / "w.txt")
    assert code == 0
    (tmp_path / "mid.tt").write_text(out)
    code, back = run("apply", tmp_path / "mid.tt", tmp_path / "inv.txt")
    assert code == 0 and back == format_track(t)


def test_cone_radius_zero_json(s05):
    code, out = run("cone", s05, "--radius", "0", "--json")
    data = json.loads(out)
    assert code == 0 and len(data["vertices"]) == 1
    assert data["vertices"][0]["phi"] == [0] * 12


def test_cone_is_deterministic_per_seed(s05):
    a = run("--seed", "3", "cone", s05, "--radius", "3")
    b = run("cone", s05, "--radius", "3", "--seed", "3")
    assert a == b and a[0] == 0
    assert a[1].splitlines()[2].startswith("growth 1 ")


def test_cone_with_measure_file(s05, tmp_path):
    mu = random_measure(catalog("S05A"), random.Random(1))
    (tmp_path / "m.txt").write_text(format_measure(mu))
    code, out = run("cone", s05, "--radius", "2", "--measure", tmp_path / "m.txt", "--dot")
    assert code == 0 and out.startswith("digraph cone {")
    bad = dict(mu)
    bad[1] += 1
    (tmp_path / "bad.txt").write_text(format_measure(bad))
    assert run("cone", s05, "--radius", "2", "--measure", tmp_path / "bad.txt")[0] == 1


def test_dist(s05, tmp_path):
    code, out = run("cone", s05, "--radius", "3", "--json")
    (tmp_path / "c.json").write_text(out)
    verts = [v["phi"] for v in json.loads(out)["vertices"]]
    a, b = verts[1], verts[-1]
    code, out = run("dist", tmp_path / "c.json", ",".join(map(str, a)), ",".join(map(str, b)))
    assert code == 0
    assert out.splitlines()[0] == f"distance {sum(abs(x - y) for x, y in zip(a, b))}"
    assert run("dist", tmp_path / "c.json", "9," * 11 + "9", ",".join(map(str, b)))[0] == 1
    assert run("dist", tmp_path / "c.json", "1,2", ",".join(map(str, b)))[0] == 2


def test_orbit_verbs(s05, tmp_path):
    t = catalog("S05A")
    perm = {b: 13 - b for b in t.branches}
    (tmp_path / "r.tt").write_text(format_track(t.relabel(perm)))
    c1, cert1 = run("orbit-cert", s05)
    c2, cert2 = run("orbit-cert", tmp_path / "r.tt")
    assert c1 == c2 == 0 and cert1 == cert2
    assert run("same-orbit", s05, tmp_path / "r.tt") == (0, "same-orbit yes\n")
    assert run("same-orbit", s05, catalog_path("S20A"))[0] == 1


def test_agree_verbs(s05, tmp_path):
    code, out = run("agree", s05)
    assert code == 0 and "phases 0" in out
    pos, lam, _ = C.random_position(catalog("S12A"), random.Random(2), 5)
    (tmp_path / "p.pos").write_text(C.format_position(pos, lam))
    code, out = run("agree", tmp_path / "p.pos")
    assert code == 0 and out.startswith("phases ")


def test_tt_ball_and_distortion(s05):
    code, out = run("tt-ball", s05, "--radius", "1")
    assert code == 0 and out.splitlines() == ["distance 0 vertices 1", "distance 1 vertices 14", "total 15"]
    code, out = run("distortion", s05, "--radius", "2")
    assert code == 0 and any(l.startswith("max ratio ") for l in out.splitlines())


def test_twist_growth():
    code, out = run("twist-growth", catalog_path("pants_S05"), "--n", "2")
    rows = [l.split() for l in out.splitlines()[1:]]
    assert code == 0 and len(rows) == 4
    for curve, n, length, l1, _, same in rows:
        assert int(length) == int(l1) == 2 * int(n) and same == "yes"


def test_thread_variable(s05, monkeypatch):
    monkeypatch.setenv("TTKIT_THREADS", "zero")
    assert run("validate", s05)[0] == 2
    monkeypatch.setenv("TTKIT_THREADS", "4")
    assert run("validate", s05)[0] == 0


def test_console_script(s05):
    proc = subprocess.run([sys.executable, "-m", "ttkit.cli", "validate", str(s05)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "slot_consistent yes" in proc.stdout
