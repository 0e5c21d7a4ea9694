"""Numba-accelerated solver kernels.

Same contracts as numpy_impl (that module is the reference); these are
nopython loop translations. The snapshot pass parallelizes per-state work
with prange in two phases so flag reads never race with flag writes:
phase A computes suprema and refreshes argsup flags (each pair's flags are
written only by its owning state), phase B applies improvements and
extends the next frontier (writes to in_f2 are idempotent).
"""

import numpy as np
from numba import njit, prange

NAME = "numba"


@njit(cache=True)
def dp_apply(indptr, succ, cost, nu, terminal, W):
    ns = terminal.shape[0]
    out = np.empty(ns, dtype=np.float64)
    for x in range(ns):
        best = np.inf
        for u in range(nu):
            p = x * nu + u
            d = -np.inf
            for k in range(indptr[p], indptr[p + 1]):
                v = cost[k] + W[succ[k]]
                if v > d:
                    d = v
            if d < best:
                best = d
        g = terminal[x]
        out[x] = g if g < best else best
    return out


@njit(cache=True)
def seq_pass(indptr, succ, cost, nu, W, in_f1, in_f2, fmax_flag,
             redge_indptr, redge_eid, redge_src, edge_pair,
             modified, argsup_cost):
    ns = W.shape[0]
    pair_evals = 0
    improvements = 0
    for x in range(ns):
        if not in_f1[x]:
            continue
        for u in range(nu):
            p = x * nu + u
            s = indptr[p]
            e = indptr[p + 1]
            pair_evals += 1
            d = -np.inf
            for k in range(s, e):
                v = cost[k] + W[succ[k]]
                if v > d:
                    d = v
            if modified:
                if argsup_cost:
                    for k in range(s, e):
                        fmax_flag[k] = (cost[k] + W[succ[k]]) == d
                else:
                    m = -np.inf
                    for k in range(s, e):
                        v = W[succ[k]]
                        if v > m:
                            m = v
                    for k in range(s, e):
                        fmax_flag[k] = W[succ[k]] == m
            if d < W[x]:
                W[x] = d
                improvements += 1
                if modified:
                    for j in range(redge_indptr[x], redge_indptr[x + 1]):
                        if fmax_flag[redge_eid[j]]:
                            in_f2[redge_src[j]] = True
                else:
                    for j in range(redge_indptr[x], redge_indptr[x + 1]):
                        in_f2[redge_src[j]] = True
    return improvements, pair_evals


@njit(cache=True, parallel=True)
def snap_pass(indptr, succ, cost, nu, W, Wsnap, in_f1, in_f2, fmax_flag,
              redge_indptr, redge_eid, redge_src, edge_pair,
              modified, argsup_cost):
    ns = W.shape[0]
    d_state = np.full(ns, np.inf, dtype=np.float64)

    # phase A: suprema + flag refresh against the frozen snapshot
    for x in prange(ns):
        if not in_f1[x]:
            continue
        best = np.inf
        for u in range(nu):
            p = x * nu + u
            s = indptr[p]
            e = indptr[p + 1]
            d = -np.inf
            for k in range(s, e):
                v = cost[k] + Wsnap[succ[k]]
                if v > d:
                    d = v
            if modified:
                if argsup_cost:
                    for k in range(s, e):
                        fmax_flag[k] = (cost[k] + Wsnap[succ[k]]) == d
                else:
                    m = -np.inf
                    for k in range(s, e):
                        v = Wsnap[succ[k]]
                        if v > m:
                            m = v
                    for k in range(s, e):
                        fmax_flag[k] = Wsnap[succ[k]] == m
            if d < best:
                best = d
        d_state[x] = best

    # phase B: apply improvements, extend the next frontier
    improvements = 0
    for x in prange(ns):
        if not in_f1[x]:
            continue
        d = d_state[x]
        if d < W[x]:
            W[x] = d
            improvements += 1
            if modified:
                for j in range(redge_indptr[x], redge_indptr[x + 1]):
                    if fmax_flag[redge_eid[j]]:
                        in_f2[redge_src[j]] = True
            else:
                for j in range(redge_indptr[x], redge_indptr[x + 1]):
                    in_f2[redge_src[j]] = True

    nf = 0
    for x in range(ns):
        if in_f1[x]:
            nf += 1
    return improvements, nf * nu
