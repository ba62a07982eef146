import numpy as np
import pytest

from setbellman.core import Mdp
from setbellman.intervals import IntervalCost
from setbellman.set_bellman import MdpFamily

# Two-state example; column order (0,a0), (0,a1), (1,a0), (1,a1).
APPENDIX_P = np.array(
    [
        [0.9, 0.1, 0.9, 0.5],
        [0.1, 0.9, 0.1, 0.5],
    ]
)
APPENDIX_C = np.array([[4.0, 5.0], [3.0, 1.0]])
APPENDIX_RADIUS = np.array([[0.6, 0.7], [0.5, 1.0]])
# fixture discount; any value in (0, 1) would do
APPENDIX_GAMMA = 0.9


def loop_q_table(P, C, gamma, v):
    """Q-values by explicit loops, independent of the library's tensor code."""
    S, A = C.shape
    q = np.zeros((S, A))
    for s in range(S):
        for a in range(A):
            q[s, a] = C[s, a] + gamma * sum(P[sp, s * A + a] * v[sp] for sp in range(S))
    return q


@pytest.fixture
def appendix_mdp():
    return Mdp(2, 2, APPENDIX_P, APPENDIX_C, APPENDIX_GAMMA)


@pytest.fixture
def appendix_family(appendix_mdp):
    return MdpFamily(appendix_mdp, IntervalCost(APPENDIX_C - APPENDIX_RADIUS, APPENDIX_C + APPENDIX_RADIUS))


def self_loop(cost, gamma):
    cost = np.atleast_2d(np.asarray(cost, dtype=float))
    A = cost.shape[1]
    return Mdp(1, A, np.ones((1, A)), cost, gamma)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
