import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from asyncplan import Plan, Step
from asyncplan.duration import Duration, TimeUnit

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def load_plan(name: str) -> Plan:
    return Plan.from_dict(json.loads((DATA / f"{name}.json").read_text()))


@pytest.fixture
def calzones():
    return load_plan("calzones")


@pytest.fixture
def video_game():
    return load_plan("video_game")


@pytest.fixture
def breakfast():
    return load_plan("breakfast")


def golden(name: str) -> str:
    return (GOLDEN / name).read_text()


@st.composite
def durations(draw, units=tuple(TimeUnit)):
    return Duration(draw(st.integers(1, 60)), draw(st.sampled_from(units)))


@st.composite
def plans(draw, max_steps=8, min_steps=1, units=(TimeUnit.SEC, TimeUnit.MIN, TimeUnit.H, TimeUnit.DAY)):
    """Random valid plans: edges only go from lower to higher index, so always acyclic."""
    n = draw(st.integers(min_steps, max_steps))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    steps = tuple(Step(i, f"Do thing {i}.", draw(durations(units))) for i in range(1, n + 1))
    return Plan("finish the job", steps, tuple(edges))
