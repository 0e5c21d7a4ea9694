"""Finite optimal control problems on hyper-graphs.

A problem instance is a 5-tuple (X, U, F, G, g): dense integer state and
input indices, a strict set-valued successor map F (every (state, input)
pair has at least one successor), terminal costs G (the price of stopping
in a state, +inf = stopping forbidden) and edge costs g (the price of one
transition, +inf allowed).

Everything is stored flat: successors live in a CSR layout indexed by the
pair id ``p = state * num_inputs + input`` so the solver kernels can sweep
them without any object overhead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

INF = float("inf")


class InvalidInstanceError(ValueError):
    """Raised when an operation requires a valid instance but validation fails."""


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok and not self.warnings:
            return "ok"
        lines = [f"violation: {v}" for v in self.violations]
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines)


class ProblemInstance:
    """Immutable hyper-graph optimal stopping problem in CSR form.

    succ_indptr has one entry per (state, input) pair plus one; the
    successors of pair p sit in succ_state[succ_indptr[p]:succ_indptr[p+1]]
    in their stored order, with per-edge costs in succ_cost.
    """

    def __init__(self, num_states, num_inputs, succ_indptr, succ_state,
                 succ_cost, terminal, allow_negative=False, name=""):
        self.num_states = int(num_states)
        self.num_inputs = int(num_inputs)
        self.succ_indptr = np.ascontiguousarray(succ_indptr, dtype=np.int64)
        self.succ_state = np.ascontiguousarray(succ_state, dtype=np.int64)
        self.succ_cost = np.ascontiguousarray(succ_cost, dtype=np.float64)
        self.terminal = np.ascontiguousarray(terminal, dtype=np.float64)
        self.allow_negative = bool(allow_negative)
        self.name = name
        self._derived = {}
        if self.succ_indptr.shape != (self.num_pairs + 1,):
            raise ValueError("succ_indptr must have num_states*num_inputs+1 entries")
        if self.terminal.shape != (self.num_states,):
            raise ValueError("terminal must have num_states entries")

    # ---- basic shape ----

    @property
    def num_pairs(self) -> int:
        return self.num_states * self.num_inputs

    @property
    def num_edges(self) -> int:
        return int(self.succ_indptr[-1])

    def pair_id(self, x: int, u: int) -> int:
        return x * self.num_inputs + u

    def successors(self, x: int, u: int) -> np.ndarray:
        p = self.pair_id(x, u)
        return self.succ_state[self.succ_indptr[p]:self.succ_indptr[p + 1]]

    def edge_costs(self, x: int, u: int) -> np.ndarray:
        p = self.pair_id(x, u)
        return self.succ_cost[self.succ_indptr[p]:self.succ_indptr[p + 1]]

    # ---- derived arrays, built lazily and cached ----

    @property
    def edge_pair(self) -> np.ndarray:
        """Pair id of every edge, aligned with succ_state."""
        if "edge_pair" not in self._derived:
            counts = np.diff(self.succ_indptr)
            self._derived["edge_pair"] = np.repeat(
                np.arange(self.num_pairs, dtype=np.int64), counts)
        return self._derived["edge_pair"]

    @property
    def edge_src(self) -> np.ndarray:
        """Source state of every edge."""
        if "edge_src" not in self._derived:
            self._derived["edge_src"] = self.edge_pair // self.num_inputs
        return self._derived["edge_src"]

    @property
    def redge_indptr(self) -> np.ndarray:
        """CSR over incoming edges, grouped by successor state."""
        self._build_reverse()
        return self._derived["redge_indptr"]

    @property
    def redge_eid(self) -> np.ndarray:
        """Edge ids of incoming edges, grouped by successor state."""
        self._build_reverse()
        return self._derived["redge_eid"]

    @property
    def redge_src(self) -> np.ndarray:
        """Source state of each incoming edge, aligned with redge_eid."""
        if "redge_src" not in self._derived:
            self._derived["redge_src"] = self.edge_src[self.redge_eid]
        return self._derived["redge_src"]

    def _build_reverse(self):
        if "redge_indptr" in self._derived:
            return
        order = np.argsort(self.succ_state, kind="stable")
        counts = np.bincount(self.succ_state, minlength=self.num_states)
        indptr = np.zeros(self.num_states + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        self._derived["redge_indptr"] = indptr
        self._derived["redge_eid"] = order.astype(np.int64)

    # ---- constructors ----

    @classmethod
    def from_maps(cls, num_states, num_inputs, successors, terminal,
                  edge_cost, allow_negative=False, name=""):
        """Build from dict-style maps.

        successors: {(x, u): iterable of states} — stored order is kept.
        terminal:   {x: cost} (missing states get +inf) or a full sequence.
        edge_cost:  scalar, {(x, y, u): cost}, or callable (x, y, u) -> cost.
        """
        indptr = np.zeros(num_states * num_inputs + 1, dtype=np.int64)
        succ, cost = [], []
        if callable(edge_cost):
            cost_fn = edge_cost
        elif isinstance(edge_cost, dict):
            cost_fn = lambda x, y, u: edge_cost[(x, y, u)]
        else:
            c = float(edge_cost)
            cost_fn = lambda x, y, u: c
        for x in range(num_states):
            for u in range(num_inputs):
                ys = list(successors.get((x, u), ()))
                for y in ys:
                    succ.append(y)
                    cost.append(cost_fn(x, y, u))
                indptr[x * num_inputs + u + 1] = len(succ)
        if isinstance(terminal, dict):
            term = np.full(num_states, INF)
            for x, gx in terminal.items():
                term[x] = gx
        else:
            term = np.asarray(terminal, dtype=np.float64)
        return cls(num_states, num_inputs, indptr,
                   np.asarray(succ, dtype=np.int64),
                   np.asarray(cost, dtype=np.float64),
                   term, allow_negative=allow_negative, name=name)

    # ---- JSON instance files ----
    # Schema: {"num_states": int, "num_inputs": int,
    #          "edges": [{"from": x, "input": u, "to": y, "cost": c}, ...],
    #          "terminal": [{"state": x, "cost": c}, ...]}
    # Missing terminal entries mean +inf; cost accepts numbers, "inf" or
    # JSON Infinity.  Edge order within one (from, input) pair is kept.

    @classmethod
    def from_json_dict(cls, doc, name=""):
        num_states = int(doc["num_states"])
        num_inputs = int(doc["num_inputs"])
        per_pair = {}
        for e in doc.get("edges", ()):
            key = (int(e["from"]), int(e["input"]))
            per_pair.setdefault(key, []).append(
                (int(e["to"]), _parse_cost(e.get("cost", 1.0))))
        indptr = np.zeros(num_states * num_inputs + 1, dtype=np.int64)
        succ, cost = [], []
        for x in range(num_states):
            for u in range(num_inputs):
                for y, c in per_pair.get((x, u), ()):
                    succ.append(y)
                    cost.append(c)
                indptr[x * num_inputs + u + 1] = len(succ)
        term = np.full(num_states, INF)
        for t in doc.get("terminal", ()):
            x = int(t["state"])
            if not 0 <= x < num_states:
                raise ValueError(f"terminal state {x} out of range")
            term[x] = _parse_cost(t["cost"])
        return cls(num_states, num_inputs, indptr,
                   np.asarray(succ, dtype=np.int64),
                   np.asarray(cost, dtype=np.float64), term,
                   allow_negative=bool(doc.get("allow_negative", False)),
                   name=name or doc.get("name", ""))

    def to_json_dict(self):
        edges = []
        for x in range(self.num_states):
            for u in range(self.num_inputs):
                p = self.pair_id(x, u)
                for k in range(self.succ_indptr[p], self.succ_indptr[p + 1]):
                    edges.append({"from": x, "input": u,
                                  "to": int(self.succ_state[k]),
                                  "cost": float(self.succ_cost[k])})
        terminal = [{"state": int(x), "cost": float(self.terminal[x])}
                    for x in range(self.num_states)
                    if np.isfinite(self.terminal[x])]
        doc = {"num_states": self.num_states, "num_inputs": self.num_inputs,
               "edges": edges, "terminal": terminal}
        if self.name:
            doc["name"] = self.name
        if self.allow_negative:
            doc["allow_negative"] = True
        return doc


def _parse_cost(v) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return INF
        return float(v)
    return float(v)


def load_instance(path) -> ProblemInstance:
    # the file's own name wins; the path is only a fallback label
    with open(path) as f:
        doc = json.load(f)
    inst = ProblemInstance.from_json_dict(doc)
    if not inst.name:
        inst.name = str(path)
    return inst


def save_instance(instance: ProblemInstance, path) -> None:
    with open(path, "w") as f:
        json.dump(instance.to_json_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def validate(instance: ProblemInstance) -> ValidationReport:
    """Report-style validation; never raises.

    Violations: empty successor set (strictness), successor index out of
    range, duplicate successor within one pair, NaN or -inf costs, and
    negative edge costs unless the instance opted in to them.
    """
    rep = ValidationReport()
    ns, nu = instance.num_states, instance.num_inputs
    if ns < 1:
        rep.violations.append("num_states must be >= 1")
        return rep
    if nu < 1:
        rep.violations.append("num_inputs must be >= 1")
        return rep
    indptr = instance.succ_indptr
    if np.any(np.diff(indptr) < 0) or indptr[0] != 0:
        rep.violations.append("malformed successor index pointer")
        return rep
    counts = np.diff(indptr)
    for p in np.nonzero(counts == 0)[0][:20]:
        x, u = divmod(int(p), nu)
        rep.violations.append(f"empty successor set at ({x},{u})")
    bad = (instance.succ_state < 0) | (instance.succ_state >= ns)
    if np.any(bad):
        e = int(np.nonzero(bad)[0][0])
        p = int(instance.edge_pair[e])
        x, u = divmod(p, nu)
        rep.violations.append(
            f"successor index out of range at ({x},{u}): {int(instance.succ_state[e])}")
    else:
        # duplicate detection only makes sense with in-range indices
        for p in range(instance.num_pairs):
            ys = instance.succ_state[indptr[p]:indptr[p + 1]]
            if ys.size != np.unique(ys).size:
                x, u = divmod(p, nu)
                rep.violations.append(f"duplicate successor at ({x},{u})")
    if np.any(np.isnan(instance.succ_cost)):
        rep.violations.append("NaN edge cost")
    if not instance.allow_negative and np.any(instance.succ_cost < 0):
        e = int(np.nonzero(instance.succ_cost < 0)[0][0])
        x, u = divmod(int(instance.edge_pair[e]), nu)
        rep.violations.append(f"negative edge cost at ({x},{u})")
    if np.any(np.isnan(instance.terminal)) or np.any(np.isneginf(instance.terminal)):
        rep.violations.append("terminal costs must be in [0-ary reals, +inf] without NaN/-inf")
    if not np.any(np.isfinite(instance.terminal)):
        rep.warnings.append("trivially infeasible: no state has finite terminal cost")
    return rep


def require_valid(instance: ProblemInstance) -> None:
    """Raise InvalidInstanceError unless the instance validates. Cached."""
    if instance._derived.get("validated"):
        return
    rep = validate(instance)
    if not rep.ok:
        raise InvalidInstanceError(str(rep))
    instance._derived["validated"] = True


class PredIndex:
    """Exact inverse of the successor map: pred(x,u) = sources y with x in F(y,u).

    Stored CSR by pair id, entries sorted ascending by state index.
    """

    def __init__(self, instance: ProblemInstance):
        nu = instance.num_inputs
        edge_u = instance.edge_pair % nu
        key = instance.succ_state * nu + edge_u
        order = np.lexsort((instance.edge_src, key))
        counts = np.bincount(key, minlength=instance.num_pairs)
        self.num_inputs = nu
        self.indptr = np.zeros(instance.num_pairs + 1, dtype=np.int64)
        np.cumsum(counts, out=self.indptr[1:])
        self.states = instance.edge_src[order]

    def pred(self, x: int, u: int) -> np.ndarray:
        p = x * self.num_inputs + u
        return self.states[self.indptr[p]:self.indptr[p + 1]]

    @property
    def total_entries(self) -> int:
        return int(self.indptr[-1])


def build_pred_index(instance: ProblemInstance) -> PredIndex:
    require_valid(instance)
    return PredIndex(instance)
