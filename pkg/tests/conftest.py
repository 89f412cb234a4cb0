import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from coma.intervals import IntervalSet, normalize

settings.register_profile(
    "default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# acceptance results, printed as a block at the end of the session
ACCEPTANCE: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE, key=lambda r: int(r[0].split()[1])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


# small-integer endpoints make coincidences (touching, shared endpoints) common
endpoint = st.integers(-10, 10).map(float)


@st.composite
def interval_sets(draw, max_parts=3):
    n = draw(st.integers(0, max_parts))
    parts = []
    for _ in range(n):
        a, b = draw(endpoint), draw(endpoint)
        parts.append((min(a, b), max(a, b)))
    return normalize(parts)


@st.composite
def weight_masses(draw, k):
    return [draw(st.integers(0, 10)) for _ in range(k)]


def random_instance(rng: np.random.Generator, max_k=6, max_parts=3, scale=10.0):
    """Random sets (with coincident endpoints on a coarse grid half the time) and simplex weights."""
    K = int(rng.integers(1, max_k + 1))
    sets = []
    coarse = rng.uniform() < 0.5
    for _ in range(K):
        parts = []
        for _ in range(int(rng.integers(0, max_parts + 1))):
            a, b = rng.uniform(-scale, scale, 2)
            if coarse:
                a, b = np.round(a), np.round(b)
            parts.append((float(min(a, b)), float(max(a, b))))
        sets.append(normalize(parts))
    w = rng.dirichlet(np.ones(K))
    w = w / math.fsum(w)
    return sets, [float(x) for x in w]


def brute_vote(sets, w, y):
    return math.fsum(wk for s, wk in zip(sets, w) if y in s)


def probe_points(sets, n_grid=10_000, scale=12.0):
    grid = np.linspace(-scale, scale, n_grid)
    ends = sorted({e for s in sets for p in s.parts for e in p})
    return np.concatenate([grid, np.asarray(ends, dtype=float)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
