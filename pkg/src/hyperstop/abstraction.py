"""Grid abstraction of a box-world reach-avoid scenario.

The scenario is a set of axis-aligned boxes inside a mission area: a base
pad, hover targets, fire columns derived from the targets by a fixed
vertical offset, and larger fixed obstacles. Discretization covers the
mission area with uniform cells; inputs are unit lattice moves and each
move's successor set is the nominal cell plus every cell reachable by a
disturbance offset orthogonal to the move (set-valued transitions). A
move is only kept when every one of its successors stays inside the area
and outside obstacles: under worst-case semantics a single bad successor
already makes the move unsafe. Removed moves become +inf self-loops so
every (cell, move) pair keeps at least one successor.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import ProblemInstance

FREE, BASE, TARGET, OBSTACLE = 0, 1, 2, 3
TAG_NAMES = {FREE: "free", BASE: "base", TARGET: "target", OBSTACLE: "obstacle"}
_EPS = 1e-9


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("boxes are 3-dimensional")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"box lo > hi: {lo} vs {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2.0

    def contains(self, p) -> bool:
        return all(lo - _EPS <= v <= hi + _EPS
                   for lo, v, hi in zip(self.lo, p, self.hi))

    def translate(self, offset) -> "Box":
        off = np.asarray(offset, dtype=float)
        return Box(tuple(np.asarray(self.lo) + off), tuple(np.asarray(self.hi) + off))

    def intersects(self, other: "Box") -> bool:
        return all(a_lo <= b_hi + _EPS and b_lo <= a_hi + _EPS
                   for a_lo, a_hi, b_lo, b_hi
                   in zip(self.lo, self.hi, other.lo, other.hi))


@dataclass
class Scenario:
    name: str
    mission_area: Box
    base: Box
    targets: list  # [(name, Box)] in file order
    no_go: list  # [(name, Box)] fires, target boxes shifted by fire_offset
    fixed_obstacles: list  # [(name, Box)]

    @property
    def target_names(self):
        return [n for n, _ in self.targets]

    def target_box(self, name) -> Box:
        for n, b in self.targets:
            if n == name:
                return b
        raise KeyError(f"no target named {name!r}")


def _parse_box(doc) -> Box:
    return Box(tuple(doc["lo"]), tuple(doc["hi"]))


def load_scenario(path=None) -> Scenario:
    """Load a scenario file; with no path, the bundled default.

    Targets may be explicit boxes ({name, lo, hi}) or anchors placed under
    the shared hover area ({name, anchor}: box = anchor + hover_area).
    Fires are derived per target by translating its box by fire_offset.
    """
    if path is None:
        text = resources.files(__package__).joinpath(
            "data/firefight_scenario.json").read_text()
        doc = json.loads(text)
    else:
        with open(path) as f:
            doc = json.load(f)
    area = _parse_box(doc["mission_area"])
    base = _parse_box(doc["base"])
    hover = _parse_box(doc["hover_area"]) if "hover_area" in doc else None
    targets = []
    for t in doc.get("targets", ()):
        if "anchor" in t:
            if hover is None:
                raise ValueError("anchor targets need a hover_area")
            targets.append((t["name"], hover.translate(t["anchor"])))
        else:
            targets.append((t["name"], _parse_box(t)))
    if not targets:
        raise ValueError("no targets")
    off = doc.get("fire_offset", (0.0, 0.0, -0.15))
    no_go = [(f"H{i + 1}", box.translate(off))
             for i, (_, box) in enumerate(targets)]
    no_go += [(o["name"], _parse_box(o)) for o in doc.get("no_go", ())]
    fixed = [(o["name"], _parse_box(o)) for o in doc.get("fixed_obstacles", ())]
    for name, box in [("base", base)] + targets + no_go + fixed:
        if not box.intersects(area):
            raise ValueError(f"box {name!r} lies outside the mission area")
    return Scenario(doc.get("name", ""), area, base, targets, no_go, fixed)


@dataclass
class GridSpec:
    cell_size: float = 0.1
    connectivity: str = "full"  # "face" (6 moves) or "full" (26)
    disturbance_radius: int = 1

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if self.connectivity not in ("face", "full"):
            raise ValueError("connectivity must be 'face' or 'full'")
        if self.disturbance_radius < 0:
            raise ValueError("disturbance_radius must be >= 0")


def _moves(connectivity) -> np.ndarray:
    all_moves = [m for m in itertools.product((-1, 0, 1), repeat=3) if any(m)]
    if connectivity == "face":
        all_moves = [m for m in all_moves if sum(abs(v) for v in m) == 1]
    return np.asarray(sorted(all_moves), dtype=np.int64)


def _offsets(move, radius) -> np.ndarray:
    """Integer disturbance offsets: orthogonal to the move, Euclidean norm
    <= radius. Radius 1 gives face moves a plus-shaped 5-cell successor
    set, planar diagonals 3 successors and space diagonals a single one
    (no lattice vector of norm <= 1 is orthogonal to them)."""
    r = range(-radius, radius + 1)
    offs = [o for o in itertools.product(r, repeat=3)
            if o[0] * move[0] + o[1] * move[1] + o[2] * move[2] == 0
            and o[0] * o[0] + o[1] * o[1] + o[2] * o[2] <= radius * radius]
    offs.sort(key=lambda o: (o != (0, 0, 0), o))  # nominal first, then lex
    return np.asarray(offs, dtype=np.int64)


class CellGraph:
    """Uniform grid over the mission area with tags and CSR transitions.

    Cell index = (ix * ny + iy) * nz + iz. Tags: free/base/target/obstacle,
    with obstacle taking precedence over target over base. The CSR arrays
    are shared by every ProblemInstance built from this graph; instances
    differ only in their terminal vector.
    """

    def __init__(self, scenario: Scenario, grid: GridSpec):
        self.scenario = scenario
        self.grid = grid
        area = scenario.mission_area
        h = grid.cell_size
        self.origin = np.asarray(area.lo, dtype=float)
        span = np.asarray(area.hi) - self.origin
        self.shape = tuple(int(np.floor(s / h + _EPS)) for s in span)
        if any(n < 1 for n in self.shape):
            raise ValueError("cell_size larger than the mission area")
        self.num_cells = int(np.prod(self.shape))
        self.moves = _moves(grid.connectivity)
        self.move_offsets = [_offsets(m, grid.disturbance_radius) for m in self.moves]
        self._tag_cells()
        self._build_transitions()
        self._derived_template = None

    # ---- geometry ----

    def cell_center(self, idx) -> np.ndarray:
        ii = np.unravel_index(idx, self.shape)
        return self.origin + (np.asarray(ii, dtype=float) + 0.5) * self.grid.cell_size

    def cell_centers(self, idx) -> np.ndarray:
        ii = np.stack(np.unravel_index(np.asarray(idx), self.shape), axis=-1)
        return self.origin + (ii + 0.5) * self.grid.cell_size

    def cell_of_point(self, p) -> int:
        """Flat index of the cell containing p, or -1 outside the grid."""
        ii = np.floor((np.asarray(p, dtype=float) - self.origin)
                      / self.grid.cell_size).astype(int)
        if np.any(ii < 0) or np.any(ii >= np.asarray(self.shape)):
            return -1
        return int(np.ravel_multi_index(tuple(ii), self.shape))

    def _axis_cells(self, axis, lo, hi):
        n = self.shape[axis]
        h = self.grid.cell_size
        o = self.origin[axis]
        if hi - lo < _EPS:
            # degenerate span: snap to the nearest cell-center plane. The
            # containing cell's center is always nearest; a value exactly on
            # a cell boundary ties and goes to the upper cell (the nudge
            # keeps float noise from flipping that).
            k = int(np.floor((lo - o) / h + 1e-7))
            return np.asarray([min(max(k, 0), n - 1)], dtype=np.int64)
        k_lo = int(np.ceil((lo - o) / h - 0.5 - _EPS / h))
        k_hi = int(np.floor((hi - o) / h - 0.5 + _EPS / h))
        return np.arange(max(k_lo, 0), min(k_hi, n - 1) + 1, dtype=np.int64)

    def cells_of_box(self, box: Box) -> np.ndarray:
        """Flat indices of all cells whose center lies in the box."""
        axes = [self._axis_cells(a, box.lo[a], box.hi[a]) for a in range(3)]
        if any(len(a) == 0 for a in axes):
            return np.empty(0, dtype=np.int64)
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        return np.ravel_multi_index((gx.ravel(), gy.ravel(), gz.ravel()),
                                    self.shape).astype(np.int64)

    # ---- tagging ----

    def _tag_cells(self):
        sc = self.scenario
        self.tags = np.zeros(self.num_cells, dtype=np.uint8)
        self.target_id = np.full(self.num_cells, -1, dtype=np.int16)
        base_cells = self.cells_of_box(sc.base)
        if len(base_cells) == 0:
            raise ValueError("base contains no cell center at this grid")
        self.tags[base_cells] = BASE
        for k, (name, box) in enumerate(sc.targets):
            cells = self.cells_of_box(box)
            if len(cells) == 0:
                raise ValueError(f"target {name!r} contains no cell center "
                                 "at this grid")
            self.tags[cells] = TARGET
            self.target_id[cells] = k
        for _, box in sc.no_go + sc.fixed_obstacles:
            cells = self.cells_of_box(box)
            self.tags[cells] = OBSTACLE

    def free_target_cells(self, name) -> np.ndarray:
        if name == "base":
            return np.nonzero(self.tags == BASE)[0].astype(np.int64)
        if name not in self.scenario.target_names:
            raise ValueError(f"unknown goal {name!r}")
        k = self.scenario.target_names.index(name)
        return np.nonzero((self.tags == TARGET) & (self.target_id == k))[0].astype(np.int64)

    def rep_cell(self, name) -> int:
        """Deterministic representative cell of a goal (lowest flat index)."""
        cells = self.free_target_cells(name)
        if len(cells) == 0:
            raise ValueError(f"goal {name!r} has no free cell")
        return int(cells[0])

    def tag_counts(self) -> dict:
        return {TAG_NAMES[t]: int(np.sum(self.tags == t))
                for t in (FREE, BASE, TARGET, OBSTACLE)}

    # ---- transitions ----

    def _build_transitions(self):
        nm = len(self.moves)
        nc = self.num_cells
        nx, ny, nz = self.shape
        h = self.grid.cell_size
        ix, iy, iz = np.unravel_index(np.arange(nc), self.shape)
        obstacle = self.tags == OBSTACLE

        valid = []  # per move: bool[nc], move kept at that cell
        succs = []  # per move: int64[n_offsets, nc] successor flat index
        lens = []
        for m, offs in zip(self.moves, self.move_offsets):
            sm = np.empty((len(offs), nc), dtype=np.int64)
            ok = ~obstacle
            for j, o in enumerate(offs):
                d = m + o
                jx, jy, jz = ix + d[0], iy + d[1], iz + d[2]
                inb = ((0 <= jx) & (jx < nx) & (0 <= jy) & (jy < ny)
                       & (0 <= jz) & (jz < nz))
                flat = (np.clip(jx, 0, nx - 1) * ny + np.clip(jy, 0, ny - 1)) * nz \
                    + np.clip(jz, 0, nz - 1)
                ok = ok & inb & ~obstacle[flat]
                sm[j] = flat
            valid.append(ok)
            succs.append(sm)
            lens.append(len(offs))

        counts = np.empty((nc, nm), dtype=np.int64)
        for mi in range(nm):
            counts[:, mi] = np.where(valid[mi], lens[mi], 1)
        self.succ_indptr = np.zeros(nc * nm + 1, dtype=np.int64)
        np.cumsum(counts.ravel(), out=self.succ_indptr[1:])
        nnz = int(self.succ_indptr[-1])
        self.succ_state = np.empty(nnz, dtype=np.int64)
        self.succ_cost = np.empty(nnz, dtype=np.float64)

        cells = np.arange(nc, dtype=np.int64)
        for mi, (m, offs) in enumerate(zip(self.moves, self.move_offsets)):
            starts = self.succ_indptr[cells * nm + mi]
            ok = valid[mi]
            for j, o in enumerate(offs):
                step = float(np.linalg.norm((m + o).astype(float))) * h
                pos = starts[ok] + j
                self.succ_state[pos] = succs[mi][j][ok]
                self.succ_cost[pos] = step
            self.succ_state[starts[~ok]] = cells[~ok]
            self.succ_cost[starts[~ok]] = np.inf

    def _instance(self, terminal, name) -> ProblemInstance:
        inst = ProblemInstance(self.num_cells, len(self.moves),
                               self.succ_indptr, self.succ_state,
                               self.succ_cost, terminal, name=name)
        # topology-derived caches (reverse edges etc.) are shared between
        # all instances of this graph
        if self._derived_template is None:
            self._derived_template = inst._derived
        else:
            inst._derived = self._derived_template
        return inst


def discretize(scenario: Scenario, grid: GridSpec | None = None) -> CellGraph:
    return CellGraph(scenario, grid or GridSpec())


def build_reach_avoid(cellgraph: CellGraph, target_name: str) -> ProblemInstance:
    """Instance whose terminal cost is 0 on the goal's free cells."""
    cells = cellgraph.free_target_cells(target_name)
    if len(cells) == 0:
        raise ValueError(f"target {target_name!r} is fully obstructed")
    terminal = np.full(cellgraph.num_cells, np.inf)
    terminal[cells] = 0.0
    return cellgraph._instance(terminal, f"reach_{target_name}")


def make_scenario_suite(scenario: Scenario | None = None,
                        grid: GridSpec | None = None,
                        goals=("A1", "A2", "A3", "A4", "base")):
    """The comparison suite: one reach-avoid instance per mission goal,
    all sharing one cell graph. Returns (cellgraph, [(goal, instance)])."""
    sc = scenario or load_scenario()
    cg = discretize(sc, grid)
    return cg, [(g, build_reach_avoid(cg, g)) for g in goals]
