"""Fixed-point solvers for the worst-case optimal stopping operator.

All three solvers compute the maximal fixed point W of

    P(W)(x) = min( G(x),  min_u  sup_{y in F(x,u)}  g(x,y,u) + W(y) )

starting from W = G, which only ever decreases:

- solve_oracle: synchronous value iteration, the semantics anchor.
- solve_baseline: frontier worklist; an improved state reschedules all of
  its predecessors.
- solve_modified: frontier worklist where every evaluated pair (x,u)
  remembers the successors attaining its supremum (the F_max table) and
  an improvement at y only reschedules states whose stored F_max contains
  y. That prunes the cumulative frontier at the price of extra passes.

The modified solver always verifies its result with one synchronous
operator application. Because every intermediate W stays pointwise above
the maximal fixed point, passing that check proves the result equals the
oracle's; failing it raises PrematureConvergenceError.
"""

from __future__ import annotations

import csv
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ProblemInstance, require_valid

# How argsup ranks successors. "value" follows the update rule's printed
# form (rank by W(y) alone); "cost" ranks by g(x,y,u)+W(y), the quantity
# the supremum in the value update actually maximizes. "cost" is the
# default: with it, any later drop of a pair's supremum is always caused
# by a flagged successor, so no reschedule can be missed. "value" has no
# such guarantee and can converge prematurely (caught by the guard); see
# tests/data/value_argsup_counterexample.json.
DEFAULT_ARGSUP = "cost"

STATS_COLUMNS = ("problem", "algorithm", "iterations", "cumulative_frontier",
                 "frontier_ratio", "pair_evaluations")


class ConvergenceError(RuntimeError):
    """No fixed point reached within the |X|-pass bound."""


class PrematureConvergenceError(ConvergenceError):
    """The frontier emptied but the returned W is not a fixed point."""


@dataclass
class SolveStats:
    iterations: int
    cumulative_frontier: int
    frontier_ratio: float
    pair_evaluations: int
    hit_cap: bool = False

    def to_dict(self):
        return {"iterations": self.iterations,
                "cumulative_frontier": self.cumulative_frontier,
                "frontier_ratio": self.frontier_ratio,
                "pair_evaluations": self.pair_evaluations}


class FmaxTable:
    """Per-(state, input) set of successors attaining the supremum.

    Stored as one boolean flag per CSR edge, so the reverse lookup
    fmax_pred(x) = { y | exists u with x in argsup(y,u) } is maintained
    incrementally for free: it reads the flags of x's incoming edges, and
    those flags are exactly what changes when some argsup(y,u) changes.
    """

    def __init__(self, instance: ProblemInstance, flags: np.ndarray):
        self.instance = instance
        self.flags = flags

    def argsup(self, x: int, u: int) -> np.ndarray:
        p = self.instance.pair_id(x, u)
        s, e = self.instance.succ_indptr[p], self.instance.succ_indptr[p + 1]
        return self.instance.succ_state[s:e][self.flags[s:e]]

    def set_argsup(self, x: int, u: int, states) -> None:
        p = self.instance.pair_id(x, u)
        s, e = self.instance.succ_indptr[p], self.instance.succ_indptr[p + 1]
        members = np.isin(self.instance.succ_state[s:e], list(states))
        if not members.any():
            raise ValueError("argsup must stay a non-empty subset of the successors")
        self.flags[s:e] = members

    def fmax_pred(self, x: int) -> np.ndarray:
        inst = self.instance
        j0, j1 = inst.redge_indptr[x], inst.redge_indptr[x + 1]
        eids = inst.redge_eid[j0:j1]
        return np.unique(inst.redge_src[j0:j1][self.flags[eids]])


def fmax_pred(fmax: FmaxTable, x: int) -> set:
    """States whose stored argsup contains x (exact reverse lookup)."""
    return {int(y) for y in fmax.fmax_pred(x)}


def q_value(W, x: int, u: int, instance: ProblemInstance) -> float:
    """sup_{y in F(x,u)} g(x,y,u) + W(y) for a single input."""
    p = instance.pair_id(x, u)
    s, e = instance.succ_indptr[p], instance.succ_indptr[p + 1]
    return float(np.max(instance.succ_cost[s:e] + np.asarray(W)[instance.succ_state[s:e]]))


def apply_dp_operator(W, instance: ProblemInstance) -> np.ndarray:
    """One synchronous application of P over all states (no in-pass reuse)."""
    require_valid(instance)
    W = np.ascontiguousarray(W, dtype=np.float64)
    return kernels.impl().dp_apply(instance.succ_indptr, instance.succ_state,
                                   instance.succ_cost, instance.num_inputs,
                                   instance.terminal, W)


def solve_oracle(instance: ProblemInstance):
    """Repeat W <- P(W) from W = G until unchanged; at most |X| passes."""
    require_valid(instance)
    ns, nu = instance.num_states, instance.num_inputs
    k = kernels.impl()
    W = instance.terminal.copy()
    for it in range(1, ns + 1):
        PW = k.dp_apply(instance.succ_indptr, instance.succ_state,
                        instance.succ_cost, nu, instance.terminal, W)
        if np.array_equal(PW, W):
            # stats conventions: every synchronous pass touches all states
            return W, SolveStats(it, it * ns, float(it), it * ns * nu)
        W = PW
    raise ConvergenceError("no fixed point within |X| iterations")


def _seed_frontier(instance: ProblemInstance) -> np.ndarray:
    """All states with an edge into a finite-G state, under any input."""
    mask = np.zeros(instance.num_states, dtype=bool)
    hits = np.isfinite(instance.terminal)[instance.succ_state]
    mask[instance.edge_src[hits]] = True
    return mask


@contextmanager
def _thread_limit(threads):
    if threads is None or kernels.current_backend() != "numba":
        yield
        return
    import numba
    old = numba.get_num_threads()
    # set_num_threads rejects anything above the launch-time pool size
    numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    try:
        yield
    finally:
        numba.set_num_threads(old)


def _frontier_solve(instance, modified, argsup_cost, parallel, threads):
    require_valid(instance)
    k = kernels.impl()
    ns, nu = instance.num_states, instance.num_inputs
    indptr, succ, cost = instance.succ_indptr, instance.succ_state, instance.succ_cost
    rip, rei, rsr = instance.redge_indptr, instance.redge_eid, instance.redge_src
    epair = instance.edge_pair

    W = instance.terminal.copy()
    in_f1 = _seed_frontier(instance)
    fmax_flag = np.zeros(instance.num_edges, dtype=bool)
    if modified:
        fmax_flag[indptr[:-1]] = True  # first successor in stored order

    iterations = 0
    cumulative = 0
    pair_evals = 0
    with _thread_limit(threads if parallel else None):
        while in_f1.any() and iterations < ns:
            cumulative += int(in_f1.sum())
            in_f2 = np.zeros(ns, dtype=bool)
            if parallel:
                _, pe = k.snap_pass(indptr, succ, cost, nu, W, W.copy(),
                                    in_f1, in_f2, fmax_flag, rip, rei, rsr,
                                    epair, modified, argsup_cost)
            else:
                _, pe = k.seq_pass(indptr, succ, cost, nu, W,
                                   in_f1, in_f2, fmax_flag, rip, rei, rsr,
                                   epair, modified, argsup_cost)
            pair_evals += int(pe)
            in_f1 = in_f2
            iterations += 1
    hit_cap = bool(in_f1.any())
    stats = SolveStats(iterations, cumulative, cumulative / ns, pair_evals,
                       hit_cap=hit_cap)
    return W, stats, fmax_flag, hit_cap


def solve_baseline(instance: ProblemInstance, parallel: bool = False,
                   threads: int | None = None):
    W, stats, _, hit_cap = _frontier_solve(instance, False, False, parallel, threads)
    if hit_cap and not np.array_equal(apply_dp_operator(W, instance), W):
        raise ConvergenceError("no fixed point within |X| iterations")
    return W, stats


def solve_modified(instance: ProblemInstance, argsup: str | None = None,
                   parallel: bool = False, threads: int | None = None):
    mode = DEFAULT_ARGSUP if argsup is None else argsup
    if mode not in ("value", "cost"):
        raise ValueError(f"argsup must be 'value' or 'cost', got {mode!r}")
    W, stats, flags, _ = _frontier_solve(instance, True, mode == "cost",
                                         parallel, threads)
    PW = apply_dp_operator(W, instance)
    if not np.array_equal(PW, W):
        n_bad = int(np.sum(PW != W))
        raise PrematureConvergenceError(
            f"premature convergence: {n_bad} states above the fixed point "
            f"(argsup={mode})")
    return W, stats, FmaxTable(instance, flags)


def stats_row(problem: str, algorithm: str, stats: SolveStats) -> dict:
    row = {"problem": problem, "algorithm": algorithm}
    row.update(stats.to_dict())
    return row


def write_stats_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=STATS_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({c: r[c] for c in STATS_COLUMNS})
