import os

import numpy as np
import pytest

from hyperstop.core import ProblemInstance
from hyperstop.pgrm import SolvedSuite, run_mission

DATA = os.path.join(os.path.dirname(__file__), "data")


def data_path(name: str) -> str:
    return os.path.join(DATA, name)


def make_e1() -> ProblemInstance:
    # 3-state chain with one nondeterministic pair, W = (2, 1, 0)
    return ProblemInstance.from_maps(
        3, 1,
        successors={(0, 0): [1, 2], (1, 0): [2], (2, 0): [2]},
        terminal={2: 0.0}, edge_cost=1.0, name="e1")


def random_instance(rng, max_states=200, max_inputs=4, max_branch=3,
                    cost_lo=0, cost_hi=9) -> ProblemInstance:
    """The oracle-equivalence distribution: every pair gets 1..max_branch
    distinct successors, integer costs, and a random nonempty set of
    finitely stoppable states."""
    ns = int(rng.integers(2, max_states + 1))
    nu = int(rng.integers(1, max_inputs + 1))
    indptr = np.zeros(ns * nu + 1, dtype=np.int64)
    succ, cost = [], []
    for x in range(ns):
        for u in range(nu):
            k = int(rng.integers(1, max_branch + 1))
            ys = rng.choice(ns, size=min(k, ns), replace=False)
            for y in ys:
                succ.append(int(y))
                cost.append(float(rng.integers(cost_lo, cost_hi + 1)))
            indptr[x * nu + u + 1] = len(succ)
    n_fin = int(rng.integers(1, max(2, ns // 4)))
    term = np.full(ns, np.inf)
    term[rng.choice(ns, size=n_fin, replace=False)] = \
        rng.integers(0, 10, size=n_fin).astype(float)
    return ProblemInstance(ns, nu, indptr, np.asarray(succ, dtype=np.int64),
                           np.asarray(cost, dtype=np.float64), term)


def tiny_instance(rng) -> ProblemInstance:
    """Brute-forceable instances; costs start at 1 so no policy can cycle
    for free and worst-case simulation always terminates."""
    return random_instance(rng, max_states=8, max_inputs=2, max_branch=3,
                           cost_lo=1, cost_hi=9)


@pytest.fixture
def e1() -> ProblemInstance:
    return make_e1()


@pytest.fixture(scope="session")
def solved_suite() -> SolvedSuite:
    return SolvedSuite.build()


@pytest.fixture(scope="session")
def default_mission(solved_suite):
    return run_mission(suite=solved_suite, seed=7)
