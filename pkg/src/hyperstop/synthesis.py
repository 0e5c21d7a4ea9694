"""Controller extraction and closed-loop evaluation.

From a fixed point W of the stopping operator we read off a memoryless
controller: stop wherever stopping is no worse than continuing
(G(x) <= Q(W,x), ties prefer stopping since it costs nothing), otherwise
play the smallest input attaining the min. Simulation pits that
controller against a pluggable adversary choosing the successor; the
worst-case adversary realizes exactly W(x0) on instances with positive
edge costs.

brute_force_values is the independent check: it enumerates every
memoryless policy X -> U + {stop} and evaluates its worst-case cost, so
it never touches the fixed-point machinery it is used to validate.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import ProblemInstance, require_valid
from .solver import apply_dp_operator

ADVERSARIES = ("worst", "nominal", "random")


@dataclass
class Controller:
    action: dict  # state -> input, where continuing is strictly better
    stop: set  # states where stopping is optimal
    values: np.ndarray  # the W the controller was extracted from

    def domain(self) -> set:
        return set(self.action) | self.stop


@dataclass
class ClosedLoopTrace:
    states: list = field(default_factory=list)
    inputs: list = field(default_factory=list)
    step_costs: list = field(default_factory=list)
    stop_time: int = 0
    cost: float = 0.0


def extract_controller(W, instance: ProblemInstance) -> Controller:
    """Read the optimal controller off a fixed point W.

    Raises ValueError when W is not a fixed point (one synchronous
    operator application checks this).
    """
    require_valid(instance)
    W = np.ascontiguousarray(W, dtype=np.float64)
    if not np.array_equal(apply_dp_operator(W, instance), W):
        raise ValueError("W is not a fixed point of the operator")
    ns, nu = instance.num_states, instance.num_inputs
    vals = instance.succ_cost + W[instance.succ_state]
    sup = np.maximum.reduceat(vals, instance.succ_indptr[:-1]).reshape(ns, nu)
    qmin = sup.min(axis=1)
    ubest = sup.argmin(axis=1)  # argmin returns the smallest index on ties
    g = instance.terminal
    stop_mask = np.isfinite(g) & (g <= qmin)
    act_mask = np.isfinite(W) & ~stop_mask
    action = {int(x): int(ubest[x]) for x in np.nonzero(act_mask)[0]}
    return Controller(action=action, stop=set(np.nonzero(stop_mask)[0].tolist()),
                      values=W)


def _pick_successor(adversary, rng, W, t, x, u, ys, costs) -> int:
    if callable(adversary):
        return int(adversary(t, x, u, ys, costs))
    if adversary == "worst":
        return int(np.argmax(costs + W[ys]))  # first maximizer
    if adversary == "nominal":
        return 0  # first successor in stored order
    if adversary == "random":
        return int(rng.integers(len(ys)))
    raise ValueError(f"unknown adversary {adversary!r}")


def simulate_closed_loop(instance: ProblemInstance, controller: Controller,
                         x0: int, adversary="worst", rng=None) -> ClosedLoopTrace:
    """Run the controller from x0 until the first stop state.

    adversary: "worst" (successor maximizing g + W), "nominal" (first
    successor in stored order), "random" (uses rng, default seed 0), or a
    callable (t, x, u, successor_states, successor_costs) -> local index.
    Raises when x0 is outside the controller domain or the trace exceeds
    |X| + 1 states (a cycling controller, possible with 0-cost edges).
    """
    require_valid(instance)
    if rng is None:
        rng = np.random.default_rng(0)
    x = int(x0)
    if x not in controller.stop and x not in controller.action:
        raise ValueError(f"state {x} outside controller domain")
    trace = ClosedLoopTrace(states=[x])
    W = controller.values
    while x not in controller.stop:
        u = controller.action[x]
        ys = instance.successors(x, u)
        costs = instance.edge_costs(x, u)
        k = _pick_successor(adversary, rng, W, len(trace.inputs), x, u, ys, costs)
        trace.cost += float(costs[k])
        trace.step_costs.append(float(costs[k]))
        x = int(ys[k])
        trace.states.append(x)
        trace.inputs.append(int(u))
        if len(trace.states) > instance.num_states + 1:
            raise RuntimeError(
                "trace exceeded |X|+1 states without stopping; the controller "
                "cycles (zero-cost loop) or its domain is broken")
        if x not in controller.stop and x not in controller.action:
            raise ValueError(f"reached state {x} outside controller domain")
    trace.stop_time = len(trace.inputs)
    trace.cost += float(instance.terminal[x])
    return trace


def write_trace_csv(path, trace: ClosedLoopTrace) -> None:
    """Rows t,state,input,cost_so_far. cost_so_far at row t is the edge cost
    accumulated before step t; the final row has no input and carries the
    total cost including the terminal charge."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "state", "input", "cost_so_far"])
        running = 0.0
        for t, x in enumerate(trace.states):
            if t < trace.stop_time:
                w.writerow([t, x, trace.inputs[t], running])
                running += trace.step_costs[t]
            else:
                w.writerow([t, x, "", trace.cost])


def _policy_eval_block(instance, policies):
    """Worst-case cost of each policy in the block, for every start state."""
    ns, nu = instance.num_states, instance.num_inputs
    indptr, succ, cost = instance.succ_indptr, instance.succ_state, instance.succ_cost
    stop_mask = policies == nu
    pair_idx = np.where(stop_mask, 0, np.arange(ns)[None, :] * nu + policies)
    V = np.where(stop_mask, instance.terminal[None, :], np.inf)
    for _ in range(ns + 2):
        vals = cost[None, :] + V[:, succ]
        sup = np.maximum.reduceat(vals, indptr[:-1], axis=1)
        Vn = np.where(stop_mask, V, np.take_along_axis(sup, pair_idx, axis=1))
        if np.array_equal(Vn, V):
            return V
        V = Vn
    raise RuntimeError("policy evaluation did not stabilize "
                       "(zero-cost cycle under a fixed policy)")


def brute_force_values(instance: ProblemInstance) -> np.ndarray:
    """min over ALL memoryless policies of the worst-case closed-loop cost,
    per start state. Exhaustive: (|U|+1)^|X| policies."""
    require_valid(instance)
    ns, nu = instance.num_states, instance.num_inputs
    if ns > 10 or nu > 3:
        raise ValueError("instance too large for exhaustive policy enumeration")
    best = np.full(ns, np.inf)
    block = []
    for pol in itertools.product(range(nu + 1), repeat=ns):
        block.append(pol)
        if len(block) == 4096:
            best = np.minimum(best, _policy_eval_block(
                instance, np.asarray(block, dtype=np.int64)).min(axis=0))
            block = []
    if block:
        best = np.minimum(best, _policy_eval_block(
            instance, np.asarray(block, dtype=np.int64)).min(axis=0))
    return best


def brute_force_optimal_cost(instance: ProblemInstance, x0: int) -> float:
    return float(brute_force_values(instance)[x0])
