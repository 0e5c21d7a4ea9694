import numpy as np
import pytest

from hyperstop.core import ProblemInstance
from hyperstop.solver import solve_modified, solve_oracle
from hyperstop.synthesis import (brute_force_optimal_cost, brute_force_values,
                                 extract_controller, simulate_closed_loop,
                                 write_trace_csv)
from conftest import tiny_instance


def test_extract_controller_e1(e1):
    W, _, _ = solve_modified(e1)
    ctrl = extract_controller(W, e1)
    assert ctrl.stop == {2}
    assert ctrl.action == {0: 0, 1: 0}
    assert ctrl.domain() == {0, 1, 2}


def test_extract_controller_rejects_non_fixed_point(e1):
    with pytest.raises(ValueError):
        extract_controller(np.array([5.0, 1.0, 0.0]), e1)


def test_worst_case_simulation_realizes_w(e1):
    W, _, _ = solve_modified(e1)
    ctrl = extract_controller(W, e1)
    tr = simulate_closed_loop(e1, ctrl, 0, adversary="worst")
    assert tr.states == [0, 1, 2]
    assert tr.cost == W[0] == 2.0
    assert tr.stop_time == 2


def test_nominal_adversary_takes_first_successor(e1):
    W, _, _ = solve_modified(e1)
    ctrl = extract_controller(W, e1)
    tr = simulate_closed_loop(e1, ctrl, 0, adversary="nominal")
    assert tr.states == [0, 1, 2]  # stored order happens to match the worst


def test_callable_adversary(e1):
    W, _, _ = solve_modified(e1)
    ctrl = extract_controller(W, e1)
    pick_last = lambda t, x, u, ys, costs: len(ys) - 1
    tr = simulate_closed_loop(e1, ctrl, 0, adversary=pick_last)
    assert tr.states == [0, 2]
    assert tr.cost == 1.0  # adversary may only help


def test_random_adversary_seeded(e1):
    W, _, _ = solve_modified(e1)
    ctrl = extract_controller(W, e1)
    a = simulate_closed_loop(e1, ctrl, 0, adversary="random",
                             rng=np.random.default_rng(4))
    b = simulate_closed_loop(e1, ctrl, 0, adversary="random",
                             rng=np.random.default_rng(4))
    assert a.states == b.states


def test_simulation_outside_domain_raises(e1):
    W, _, _ = solve_modified(e1)
    ctrl = extract_controller(W, e1)
    ctrl.action.pop(1)
    with pytest.raises(ValueError):
        simulate_closed_loop(e1, ctrl, 1)


def test_zero_cost_controller_cycle_detected():
    # ties in Q with a free edge: the smallest-input rule walks 0 <-> 1
    # forever, which the trace-length bound must catch
    inst = ProblemInstance.from_maps(
        3, 2,
        successors={(0, 0): [1], (0, 1): [2], (1, 0): [0], (1, 1): [2],
                    (2, 0): [2], (2, 1): [2]},
        terminal={2: 0.0},
        edge_cost={(0, 1, 0): 0.0, (0, 2, 1): 9.0, (1, 0, 0): 0.0,
                   (1, 2, 1): 9.0, (2, 2, 0): 1.0, (2, 2, 1): 1.0})
    W, _ = solve_oracle(inst)
    assert np.array_equal(W, [9.0, 9.0, 0.0])
    ctrl = extract_controller(W, inst)
    assert ctrl.action[0] == 0 and ctrl.action[1] == 0
    with pytest.raises(RuntimeError):
        simulate_closed_loop(inst, ctrl, 0)


def test_brute_force_values_match_solver():
    rng = np.random.default_rng(23)
    for _ in range(10):
        inst = tiny_instance(rng)
        W, _ = solve_oracle(inst)
        assert np.array_equal(brute_force_values(inst), W)


def test_brute_force_optimal_cost_e1(e1):
    W, _, _ = solve_modified(e1)
    for x0 in range(3):
        assert brute_force_optimal_cost(e1, x0) == W[x0]


def test_brute_force_guards():
    rng = np.random.default_rng(1)
    from conftest import random_instance
    big = random_instance(rng, max_states=200)
    while big.num_states <= 10:
        big = random_instance(rng, max_states=200)
    with pytest.raises(ValueError):
        brute_force_values(big)


def test_worst_case_sim_realizes_w_tiny():
    rng = np.random.default_rng(40)
    for _ in range(10):
        inst = tiny_instance(rng)
        W, _ = solve_oracle(inst)
        ctrl = extract_controller(W, inst)
        for x0 in range(inst.num_states):
            if np.isfinite(W[x0]):
                tr = simulate_closed_loop(inst, ctrl, x0, adversary="worst")
                assert tr.cost == W[x0]


def test_trace_csv(tmp_path, e1):
    W, _, _ = solve_modified(e1)
    ctrl = extract_controller(W, e1)
    tr = simulate_closed_loop(e1, ctrl, 0, adversary="worst")
    p = tmp_path / "trace.csv"
    write_trace_csv(p, tr)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "t,state,input,cost_so_far"
    assert lines[1] == "0,0,0,0.0"
    assert lines[2] == "1,1,0,1.0"
    assert lines[3] == "2,2,,2.0"  # stop row: no input, total cost
