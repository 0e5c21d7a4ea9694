"""Pure-numpy / plain-python solver kernels.

This is the reference backend: every function here is the executable
definition that the accelerated twin in numba_impl must match exactly.
The synchronous operator and the snapshot pass are vectorized; the
sequential pass stays a plain Python loop because its live in-pass value
reads cannot be expressed as array operations.
"""

import numpy as np

NAME = "numpy"


def dp_apply(indptr, succ, cost, nu, terminal, W):
    """One synchronous application of the operator: min(G, min_u sup(g + W))."""
    vals = cost + W[succ]
    # strictness guarantees every segment is non-empty, so reduceat is safe
    sup = np.maximum.reduceat(vals, indptr[:-1])
    q = sup.reshape(-1, nu).min(axis=1)
    return np.minimum(terminal, q)


def seq_pass(indptr, succ, cost, nu, W, in_f1, in_f2, fmax_flag,
             redge_indptr, redge_eid, redge_src, edge_pair,
             modified, argsup_cost):
    """One sequential frontier pass with live value reads.

    States ascending, inputs ascending. `modified` switches between the
    all-predecessors scheduling (baseline) and the flagged-argsup
    scheduling; `argsup_cost` ranks the argsup by g+W instead of W alone.
    Mutates W, in_f2 and (when modified) fmax_flag.
    Returns (improvements, pair_evaluations).
    """
    ns = W.shape[0]
    pair_evals = 0
    improvements = 0
    for x in range(ns):
        if not in_f1[x]:
            continue
        for u in range(nu):
            p = x * nu + u
            s, e = indptr[p], indptr[p + 1]
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


def snap_pass(indptr, succ, cost, nu, W, Wsnap, in_f1, in_f2, fmax_flag,
              redge_indptr, redge_eid, redge_src, edge_pair,
              modified, argsup_cost):
    """One frontier pass against a frozen snapshot, merged deterministically.

    Evaluates every frontier pair against Wsnap (no live reads), refreshes
    argsup flags from the snapshot, then applies per-state improvements and
    extends in_f2. Result is independent of evaluation order.
    """
    ns = W.shape[0]
    nf = int(in_f1.sum())
    pair_evals = nf * nu

    vals = cost + Wsnap[succ]
    sup = np.maximum.reduceat(vals, indptr[:-1])
    d_state = sup.reshape(ns, nu).min(axis=1)

    if modified:
        pair_mask = np.repeat(in_f1, nu)
        on_frontier = pair_mask[edge_pair]
        key = vals if argsup_cost else Wsnap[succ]
        seg_max = np.maximum.reduceat(key, indptr[:-1])
        is_max = key == seg_max[edge_pair]
        fmax_flag[on_frontier] = is_max[on_frontier]

    imp_mask = in_f1 & (d_state < W)
    W[imp_mask] = d_state[imp_mask]
    improvements = int(imp_mask.sum())

    # incoming edges grouped by their successor state: succ[redge_eid[j]]
    # is the state edge j points at
    incoming_hits = imp_mask[succ[redge_eid]]
    if modified:
        incoming_hits = incoming_hits & fmax_flag[redge_eid]
    in_f2[redge_src[incoming_hits]] = True
    return improvements, pair_evals
