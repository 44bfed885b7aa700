import random

import pytest
from hypothesis import HealthCheck, settings

from ttkit.generators import catalog

settings.register_profile(
    "ttkit", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("ttkit")

CATALOG = ("S05A", "S12A", "S20A")


@pytest.fixture(params=CATALOG)
def name(request):
    return request.param


@pytest.fixture
def track(name):
    return catalog(name)


@pytest.fixture
def rng():
    return random.Random(12345)


def random_walk(track, rng, steps):
    """A track reached by random measure-respecting splits and shifts."""
    from ttkit import moves as mv
    from ttkit.track import random_measure

    mu = random_measure(track, rng)
    for _ in range(steps):
        if rng.random() < 0.3 and track.mixed_branches():
            move = mv.ShiftMove(rng.choice(track.mixed_branches()))
        else:
            e = rng.choice(track.large_branches())
            try:
                d = mv.split_direction(track, mu, e)
            except Exception:
                continue
            move = mv.SplitMove(e, d)
        new = mv.apply_move(track, move).track
        mu = mv.transport_measure(track, mu, move, new)
        track = new
    return track, mu


# lines recorded by the acceptance suite, repeated in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
