import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


finite = st.floats(min_value=-20, max_value=20, allow_nan=False, allow_infinity=False)


@st.composite
def small_mdp_lists(draw, max_states=3, max_actions=3):
    """Random (P, R, mu0) as nested lists with |S|, |A| bounded."""
    S = draw(st.integers(1, max_states))
    A = draw(st.integers(1, max_actions))
    w = st.floats(min_value=0.01, max_value=1.0)
    P = []
    for _ in range(S):
        rows = []
        for _ in range(A):
            row = [draw(w) for _ in range(S)]
            z = sum(row)
            rows.append([x / z for x in row])
        P.append(rows)
    R = [[draw(st.floats(0, 1)) for _ in range(A)] for _ in range(S)]
    mu = [draw(w) for _ in range(S)]
    z = sum(mu)
    return P, R, [x / z for x in mu]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
