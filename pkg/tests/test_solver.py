import numpy as np
import pytest

from hyperstop.core import ProblemInstance, load_instance
from hyperstop.solver import (PrematureConvergenceError, apply_dp_operator,
                              fmax_pred, q_value, solve_baseline,
                              solve_modified, solve_oracle)
from conftest import data_path, random_instance


def test_q_value_e1(e1):
    W = np.array([np.inf, np.inf, 0.0])
    assert q_value(W, 1, 0, e1) == 1.0
    assert np.isinf(q_value(W, 0, 0, e1))  # sup over {1, 2} hits W(1) = inf


def test_apply_operator_descends_from_g(e1):
    W0 = e1.terminal.copy()
    W1 = apply_dp_operator(W0, e1)
    assert np.array_equal(W1, [np.inf, 1.0, 0.0])
    W2 = apply_dp_operator(W1, e1)
    assert np.array_equal(W2, [2.0, 1.0, 0.0])
    assert np.array_equal(apply_dp_operator(W2, e1), W2)  # fixed point


def test_oracle_e1(e1):
    W, stats = solve_oracle(e1)
    assert np.array_equal(W, [2.0, 1.0, 0.0])
    # iteration count includes the final unchanged verification pass
    assert stats.iterations == 3
    assert stats.cumulative_frontier == 9
    assert stats.pair_evaluations == 9


def test_baseline_e1(e1):
    W, stats = solve_baseline(e1)
    assert np.array_equal(W, [2.0, 1.0, 0.0])
    assert stats.iterations == 2
    assert stats.cumulative_frontier == 4
    assert stats.frontier_ratio == pytest.approx(4 / 3)


def test_modified_e1(e1):
    W, stats, fmax = solve_modified(e1)
    assert np.array_equal(W, [2.0, 1.0, 0.0])
    assert stats.iterations == 2
    # worst successor of the only branching pair
    assert set(fmax.argsup(0, 0)) == {1}
    assert fmax_pred(fmax, 1) == {0}
    assert fmax_pred(fmax, 0) == set()


def test_three_solvers_agree_small():
    rng = np.random.default_rng(11)
    for _ in range(25):
        inst = random_instance(rng, max_states=60)
        Wo, _ = solve_oracle(inst)
        Wb, _ = solve_baseline(inst)
        Wm, _, _ = solve_modified(inst)
        assert np.array_equal(Wo, Wb)
        assert np.array_equal(Wo, Wm)
        assert np.array_equal(apply_dp_operator(Wo, inst), Wo)


def test_all_inf_terminal_solves_in_zero_passes():
    inst = ProblemInstance.from_maps(
        3, 1, successors={(0, 0): [1], (1, 0): [2], (2, 0): [0]},
        terminal={}, edge_cost=1.0)
    for solve in (solve_baseline, lambda i: solve_modified(i)[:2]):
        W, stats = solve(inst)[:2]
        assert np.all(np.isinf(W))
        assert stats.iterations == 0
        assert stats.cumulative_frontier == 0


def test_modified_value_mode_trips_guard():
    # frozen counterexample: ranking the sup set by W alone loses the
    # rescheduling edge and converges above the fixed point
    inst = load_instance(data_path("value_argsup_counterexample.json"))
    with pytest.raises(PrematureConvergenceError):
        solve_modified(inst, argsup="value")
    W_cost, _, _ = solve_modified(inst, argsup="cost")
    W_ref, _ = solve_oracle(inst)
    assert np.array_equal(W_cost, W_ref)


def test_modified_rejects_unknown_argsup(e1):
    with pytest.raises(ValueError):
        solve_modified(e1, argsup="median")


def test_fmax_refreshes_on_reevaluation():
    # two successors swap roles as the worst one while values shrink
    inst = ProblemInstance.from_maps(
        4, 1,
        successors={(0, 0): [1, 2], (1, 0): [3], (2, 0): [3], (3, 0): [3]},
        terminal={1: 5.0, 3: 0.0},
        edge_cost={(0, 1, 0): 1.0, (0, 2, 0): 1.0, (1, 3, 0): 1.0,
                   (2, 3, 0): 9.0, (3, 3, 0): 1.0})
    W, _, fmax = solve_modified(inst)
    assert np.array_equal(W, [10.0, 1.0, 9.0, 0.0])
    assert set(fmax.argsup(0, 0)) == {2}


def test_iterations_bounded_by_states():
    rng = np.random.default_rng(5)
    for _ in range(30):
        inst = random_instance(rng, max_states=80)
        for stats in (solve_baseline(inst)[1], solve_modified(inst)[1]):
            assert stats.iterations <= inst.num_states


def test_stats_pair_evaluations_scale():
    rng = np.random.default_rng(9)
    inst = random_instance(rng, max_states=50)
    _, sb = solve_baseline(inst)
    _, sm, _ = solve_modified(inst)
    assert sb.pair_evaluations == sb.cumulative_frontier * inst.num_inputs
    assert sm.pair_evaluations == sm.cumulative_frontier * inst.num_inputs
    assert sm.cumulative_frontier <= sb.cumulative_frontier


def test_parallel_snapshot_matches_sequential():
    rng = np.random.default_rng(17)
    for _ in range(10):
        inst = random_instance(rng, max_states=60)
        W_seq, _ = solve_baseline(inst)
        W_par, _ = solve_baseline(inst, parallel=True)
        assert np.array_equal(W_seq, W_par)
        Wm_par, _, _ = solve_modified(inst, parallel=True, threads=2)
        assert np.array_equal(W_seq, Wm_par)
