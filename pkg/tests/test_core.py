import json

import numpy as np
import pytest

from hyperstop.core import (InvalidInstanceError, ProblemInstance,
                            build_pred_index, load_instance, require_valid,
                            save_instance, validate)
from conftest import make_e1, random_instance


def test_csr_layout(e1):
    assert e1.num_states == 3 and e1.num_inputs == 1
    assert list(e1.successors(0, 0)) == [1, 2]
    assert list(e1.successors(2, 0)) == [2]
    assert np.all(e1.edge_costs(0, 0) == 1.0)
    assert e1.terminal[2] == 0.0 and np.isinf(e1.terminal[0])


def test_json_roundtrip(tmp_path, e1):
    p = tmp_path / "e1.json"
    save_instance(e1, p)
    back = load_instance(p)
    assert back.num_states == e1.num_states
    assert np.array_equal(back.succ_state, e1.succ_state)
    assert np.array_equal(back.succ_indptr, e1.succ_indptr)
    assert np.array_equal(back.succ_cost, e1.succ_cost)
    assert np.array_equal(back.terminal, e1.terminal)


def test_inf_terminal_serialized_as_string(tmp_path, e1):
    p = tmp_path / "e1.json"
    save_instance(e1, p)
    doc = json.loads(p.read_text())
    states = {r["state"] for r in doc["terminal"]}
    assert states == {2}  # inf entries are omitted, not written as null


def test_load_accepts_inf_string(tmp_path):
    doc = {"num_states": 2, "num_inputs": 1,
           "edges": [{"from": 0, "input": 0, "to": 1, "cost": "inf"},
                     {"from": 1, "input": 0, "to": 1, "cost": 2}],
           "terminal": [{"state": 1, "cost": 0}]}
    p = tmp_path / "i.json"
    p.write_text(json.dumps(doc))
    inst = load_instance(p)
    assert np.isinf(inst.edge_costs(0, 0)[0])


def test_validate_clean(e1):
    rep = validate(e1)
    assert rep.ok and rep.violations == []


def test_validate_empty_successor_set():
    inst = ProblemInstance.from_maps(2, 1, successors={(0, 0): [1]},
                                     terminal={1: 0.0}, edge_cost=1.0)
    rep = validate(inst)
    assert not rep.ok
    assert any("successor" in v for v in rep.violations)


def test_validate_out_of_range_successor():
    indptr = np.array([0, 1], dtype=np.int64)
    inst = ProblemInstance(1, 1, indptr, np.array([5], dtype=np.int64),
                           np.array([1.0]), np.array([0.0]))
    rep = validate(inst)
    assert any("range" in v for v in rep.violations)


def test_validate_negative_cost_flagged():
    inst = ProblemInstance.from_maps(2, 1,
                                     successors={(0, 0): [1], (1, 0): [1]},
                                     terminal={1: 0.0}, edge_cost=-1.0)
    assert not validate(inst).ok
    ok = ProblemInstance.from_maps(2, 1,
                                   successors={(0, 0): [1], (1, 0): [1]},
                                   terminal={1: 0.0}, edge_cost=-1.0,
                                   allow_negative=True)
    assert validate(ok).ok


def test_validate_nan_rejected():
    inst = ProblemInstance.from_maps(2, 1,
                                     successors={(0, 0): [1], (1, 0): [1]},
                                     terminal={1: 0.0}, edge_cost=float("nan"))
    assert not validate(inst).ok


def test_validate_all_inf_terminal_warns():
    inst = ProblemInstance.from_maps(2, 1,
                                     successors={(0, 0): [1], (1, 0): [1]},
                                     terminal={}, edge_cost=1.0)
    rep = validate(inst)
    assert rep.ok  # legal, just pointless
    assert any("trivially infeasible" in w for w in rep.warnings)


def test_require_valid_raises():
    inst = ProblemInstance.from_maps(2, 1, successors={(0, 0): [1]},
                                     terminal={1: 0.0}, edge_cost=1.0)
    with pytest.raises(InvalidInstanceError):
        require_valid(inst)


def test_pred_index_e1(e1):
    pred = build_pred_index(e1)
    assert list(pred.pred(1, 0)) == [0]
    assert sorted(pred.pred(2, 0)) == [0, 1, 2]
    assert list(pred.pred(0, 0)) == []


def test_pred_index_sorted_random():
    rng = np.random.default_rng(3)
    inst = random_instance(rng, max_states=40)
    pred = build_pred_index(inst)
    # exhaustive cross-check against the forward map
    fwd = {}
    for x in range(inst.num_states):
        for u in range(inst.num_inputs):
            for y in inst.successors(x, u):
                fwd.setdefault((int(y), u), []).append(x)
    for y in range(inst.num_states):
        for u in range(inst.num_inputs):
            got = list(pred.pred(y, u))
            assert got == sorted(set(fwd.get((y, u), [])))
            assert got == sorted(got)
