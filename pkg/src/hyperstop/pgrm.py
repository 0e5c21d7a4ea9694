"""Plan and goal recognition monitoring for simulated grid missions.

A vehicle flies a sequence of reach-avoid legs, each tracked by the
worst-case optimal controller for the leg's goal. An observer sees the
vehicle's position with bounded noise and keeps a predicted trajectory.
Whenever the Euclidean distance between an observation and the
time-aligned prediction exceeds the tolerance kappa, the observer
re-generates one hypothetical trajectory per remaining goal (virtual
closed-loop runs under the nominal adversary), picks the hypothesis
that is consistent with the recent observations and closest to them,
and re-plans the expected goal order by brute-force TSP over the
value functions.

Recognition is selection, not a posterior: ties between hypotheses
that share a trajectory prefix go to the lowest goal index, which is
exactly how an early recognition can pick the wrong goal and be
corrected after a later trigger.
"""

from __future__ import annotations

import itertools
import json
import csv
from dataclasses import dataclass, field

import numpy as np

from .abstraction import GridSpec, Scenario, load_scenario, make_scenario_suite
from .solver import solve_modified
from .synthesis import extract_controller, simulate_closed_loop

KAPPA = 0.075  # positional tolerance, also the observation box half-span
NOISE_BOUND = 0.035  # per-axis simulation noise, keeps obs in the true cell

BASE = "base"


@dataclass(frozen=True)
class ObservationModel:
    kappa: float = KAPPA
    median_error: float = NOISE_BOUND

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if not self.median_error < self.kappa:
            raise ValueError("noise bound must stay below kappa")

    def observe(self, position, rng) -> np.ndarray:
        return np.asarray(position, dtype=float) + rng.uniform(
            -self.median_error, self.median_error, size=3)


def in_output_set(observation, state_position, model: ObservationModel) -> bool:
    """Componentwise box test |o_i - x_i| <= kappa on every axis."""
    o = np.asarray(observation, dtype=float)
    x = np.asarray(state_position, dtype=float)
    return bool(np.all(np.abs(o - x) <= model.kappa))


def d_eukl(observation, state_position) -> float:
    return float(np.linalg.norm(np.asarray(observation, dtype=float)
                                - np.asarray(state_position, dtype=float)))


@dataclass
class Hypothesis:
    goal: str
    trajectory: np.ndarray  # (k, 3) cell centers, index 0 = current cell
    controller_id: str
    low_confidence: bool = False

    def aligned(self, j: int) -> np.ndarray:
        """Predicted position j steps after the trajectory start, clamped
        to the final state once the prediction is exhausted."""
        return self.trajectory[min(j, len(self.trajectory) - 1)]


@dataclass
class TimelineEvent:
    time: int
    kind: str  # takeoff_done, trigger, recognized, sequence_predicted,
    #            goal_reached, mission_complete, out_of_bounds
    payload: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"time": self.time, "kind": self.kind, "payload": self.payload}


class SolvedSuite:
    """Value functions and controllers for every mission goal plus base,
    all on one shared cell graph."""

    def __init__(self, cellgraph, goal_names, entries):
        self.cellgraph = cellgraph
        self.goal_names = list(goal_names)  # without base
        self._entries = entries  # name -> (instance, W, controller)

    @classmethod
    def build(cls, scenario: Scenario | None = None,
              grid: GridSpec | None = None,
              goals=("A1", "A2", "A3", "A4")) -> "SolvedSuite":
        cg, probs = make_scenario_suite(scenario, grid, tuple(goals) + (BASE,))
        entries = {}
        for goal, inst in probs:
            W, _, _ = solve_modified(inst)
            entries[goal] = (inst, W, extract_controller(W, inst))
        return cls(cg, goals, entries)

    def names(self, include_base=True):
        return self.goal_names + [BASE] if include_base else list(self.goal_names)

    def instance(self, goal):
        return self._entries[goal][0]

    def value(self, goal) -> np.ndarray:
        return self._entries[goal][1]

    def controller(self, goal):
        return self._entries[goal][2]

    def goal_center(self, goal) -> np.ndarray:
        if goal == BASE:
            return self.cellgraph.scenario.base.center
        return self.cellgraph.scenario.target_box(goal).center

    def hypothesis(self, goal, cell: int) -> Hypothesis | None:
        """Nominal-adversary virtual run toward the goal, None when the
        cell is outside the controller's domain (infeasible)."""
        ctrl = self.controller(goal)
        if cell not in ctrl.stop and cell not in ctrl.action:
            return None
        trace = simulate_closed_loop(self.instance(goal), ctrl, cell,
                                     adversary="nominal")
        traj = self.cellgraph.cell_centers(np.asarray(trace.states))
        return Hypothesis(goal=goal, trajectory=traj, controller_id=goal)

    def cost_matrix(self, start_cell=None) -> dict:
        """(from, to) -> worst-case optimal cost, goals x (goals + base),
        measured at the origin goal's representative cell. An optional
        start row prices the first leg from an arbitrary cell."""
        m = {}
        for a in self.names():
            ra = self.cellgraph.rep_cell(a)
            for b in self.names():
                if b != a:
                    m[(a, b)] = float(self.value(b)[ra])
        if start_cell is not None:
            for b in self.names():
                m[("start", b)] = float(self.value(b)[start_cell])
        return m


def generate_hypotheses(current_position, remaining_goals,
                        suite: SolvedSuite) -> list:
    """One hypothesis per remaining goal plus base, in goal order.
    Goals whose controller does not cover the current cell are dropped."""
    cell = suite.cellgraph.cell_of_point(current_position)
    if cell < 0:
        raise ValueError("current position outside the mission area")
    ordered = [g for g in suite.goal_names if g in set(remaining_goals)]
    out = []
    for goal in ordered + [BASE]:
        h = suite.hypothesis(goal, cell)
        if h is not None:
            out.append(h)
    return out


def recognize(observations, hypotheses, model: ObservationModel) -> Hypothesis:
    """Pick the hypothesis explaining the observation suffix.

    Consistent hypotheses (every observation inside the kappa box of the
    time-aligned state) compete on cumulative Euclidean distance; ties go
    to the earlier hypothesis, i.e. the lowest goal index. With no
    consistent candidate the nearest one is returned flagged low_confidence.
    """
    if not hypotheses:
        raise ValueError("no hypotheses to recognize against")
    obs = np.asarray(observations, dtype=float).reshape(-1, 3)
    best, best_score = None, np.inf
    near, near_score = None, np.inf
    for h in hypotheses:
        pts = np.stack([h.aligned(j) for j in range(len(obs))])
        score = float(np.linalg.norm(obs - pts, axis=1).sum())
        ok = all(in_output_set(o, p, model) for o, p in zip(obs, pts))
        if ok and score < best_score:
            best, best_score = h, score
        if score < near_score:
            near, near_score = h, score
    if best is not None:
        return best
    near.low_confidence = True
    return near


def predict_sequence(current_goal, remaining_goals, cost_matrix) -> list:
    """Cheapest visiting order: current -> every remaining goal -> base.
    Brute force over permutations; lexicographic tie-break."""
    remaining = sorted(remaining_goals)
    if len(remaining) > 8:
        raise ValueError("brute-force TSP is capped at 8 goals")

    def entry(a, b):
        try:
            return cost_matrix[(a, b)]
        except KeyError:
            raise ValueError(f"missing cost entry {a!r} -> {b!r}") from None

    if not remaining:
        return [current_goal] if current_goal == BASE else [current_goal, BASE]
    best, best_cost = None, np.inf
    for perm in itertools.permutations(remaining):
        legs = [current_goal, *perm, BASE]
        cost = sum(entry(a, b) for a, b in zip(legs, legs[1:]))
        if cost < best_cost:
            best, best_cost = legs, cost
    return best


@dataclass
class MonitorState:
    """Sequential observer state machine.

    While status is "nominal" each observation is checked against the
    time-aligned active prediction; a Euclidean violation > kappa emits a
    trigger and switches to "recognizing", which collects a fixed number
    of observations (the trigger observation included) before recognize()
    is run and a fresh goal sequence is predicted.
    """

    suite: SolvedSuite
    model: ObservationModel
    active_prediction: Hypothesis | None = None
    prediction_start: int = 0
    predicted_sequence: list = field(default_factory=list)
    reached: list = field(default_factory=list)
    last_trigger_time: int = -1
    status: str = "nominal"
    confirmation_lag: int = 3  # observations per recognition, trigger included
    distance_log: list = field(default_factory=list)  # (t, d_eukl) per check
    _pending_obs: list = field(default_factory=list)
    _pending_hypotheses: list = field(default_factory=list)

    @classmethod
    def at_takeoff(cls, suite, model, position, t: int) -> "MonitorState":
        """The last nominal state known in advance is the end of the
        ascent; the initial prediction is to hold that point."""
        hold = Hypothesis(goal="", trajectory=np.asarray([position], dtype=float),
                          controller_id="hold")
        return cls(suite=suite, model=model, active_prediction=hold,
                   prediction_start=t)

    def remaining_goals(self):
        return [g for g in self.suite.goal_names if g not in self.reached]

    def _recognition_done(self, t) -> list:
        h = recognize(self._pending_obs, self._pending_hypotheses, self.model)
        self.active_prediction = h
        self.prediction_start = self.last_trigger_time
        self.status = "nominal"
        events = [TimelineEvent(t, "recognized",
                                {"goal": h.goal,
                                 "low_confidence": h.low_confidence})]
        rest = [g for g in self.remaining_goals() if g != h.goal]
        self.predicted_sequence = predict_sequence(
            h.goal, rest, self.suite.cost_matrix())
        events.append(TimelineEvent(t, "sequence_predicted",
                                    {"sequence": list(self.predicted_sequence),
                                     "source": "monitor"}))
        return events

    def _advance_after_goal(self, goal, obs, t) -> list:
        if goal and goal not in self.reached and goal != BASE:
            self.reached.append(goal)
        events = [TimelineEvent(t, "goal_reached", {"goal": goal})]
        seq = [g for g in self.predicted_sequence if g != goal]
        self.predicted_sequence = seq
        nxt = seq[0] if seq else None
        if goal == BASE or nxt is None:
            self.status = "done"
            return events
        cell = self.suite.cellgraph.cell_of_point(obs)
        h = self.suite.hypothesis(nxt, cell)
        if h is None:  # fall back to a fresh recognition on the next step
            self.active_prediction = None
            return events
        self.active_prediction = h
        self.prediction_start = t
        return events


def monitor_step(observation, t: int, state: MonitorState,
                 model: ObservationModel):
    """Advance the observer by one observation; returns (state, events)."""
    obs = np.asarray(observation, dtype=float)
    events = []
    if not state.suite.cellgraph.scenario.mission_area.contains(obs):
        # no cell to reason about; report and wait for a usable observation
        events.append(TimelineEvent(t, "out_of_bounds",
                                    {"observation": obs.tolist()}))
        return state, events
    if state.status == "done":
        return state, events

    if state.status == "recognizing":
        state._pending_obs.append(obs)
        if len(state._pending_obs) >= state.confirmation_lag:
            events.extend(state._recognition_done(t))
        return state, events

    h = state.active_prediction
    if h is None:  # lost the prediction, force a trigger
        dist = np.inf
    else:
        j = t - state.prediction_start
        dist = d_eukl(obs, h.aligned(j))
        state.distance_log.append((t, dist))
        exhausted = j >= len(h.trajectory) - 1
        if exhausted and h.goal and dist <= model.kappa:
            events.extend(state._advance_after_goal(h.goal, obs, t))
            return state, events
    if dist > model.kappa:
        state.last_trigger_time = t
        state.status = "recognizing"
        events.append(TimelineEvent(t, "trigger", {"d_eukl": None if not
                                    np.isfinite(dist) else round(dist, 6)}))
        hyps = generate_hypotheses(obs, state.remaining_goals(), state.suite)
        state._pending_obs = [obs]
        state._pending_hypotheses = hyps
        if len(state._pending_obs) >= state.confirmation_lag:
            events.extend(state._recognition_done(t))
    return state, events


# ---- mission simulation ----------------------------------------------------


@dataclass(frozen=True)
class DisturbancePhase:
    """Scripted off-nominal exit: for `steps` control steps starting
    `start_offset` steps into leg `leg_index`, the adversary picks the
    successor with the largest displacement along `push` instead of the
    nominal one. Steps whose successor set is a singleton are unaffected."""
    leg_index: int
    start_offset: int
    steps: int
    push: tuple

    @classmethod
    def from_dict(cls, doc) -> "DisturbancePhase":
        return cls(int(doc["leg_index"]), int(doc.get("start_offset", 0)),
                   int(doc["steps"]), tuple(float(v) for v in doc["push"]))

    def to_dict(self) -> dict:
        return {"leg_index": self.leg_index, "start_offset": self.start_offset,
                "steps": self.steps, "push": list(self.push)}


def default_disturbance_script() -> list:
    # off-nominal tracks when leaving the first and the second goal
    return [DisturbancePhase(1, 2, 3, (0.0, 0.0, 1.0)),
            DisturbancePhase(2, 2, 3, (0.0, 0.0, 1.0))]


@dataclass
class MissionResult:
    completed: bool
    events: list  # TimelineEvent
    first_sequence: list  # the vehicle's own plan, goals then base
    flown_sequence: list  # goals in visit order
    positions: np.ndarray  # (T, 3) true positions per step
    observations: np.ndarray  # (T, 3) noisy observations per step
    legs: list  # per step: -1 ground/ascent, else leg index
    config: dict
    monitor: "MonitorState | None" = None

    def timeline(self, kind=None) -> list:
        if kind is None:
            return list(self.events)
        return [e for e in self.events if e.kind == kind]

    def to_json_dict(self) -> dict:
        return {"completed": self.completed,
                "first_sequence": list(self.first_sequence),
                "flown_sequence": list(self.flown_sequence),
                "config": self.config,
                "events": [e.to_dict() for e in self.events]}


def _scripted_pick(cellgraph, script_push, ys):
    if script_push is None or len(ys) == 1:
        return 0
    centers = cellgraph.cell_centers(np.asarray(ys))
    gain = (centers - centers[0]) @ np.asarray(script_push, dtype=float)
    return int(np.argmax(gain))  # nominal wins ties (gain[0] = 0)


def run_mission(scenario: Scenario | None = None,
                grid: GridSpec | None = None,
                model: ObservationModel | None = None,
                disturbance_script=None,
                *,
                goals=("A1", "A2", "A3", "A4"),
                seed: int = 7,
                step_budget: int = 400,
                idle_steps: int = 20,
                hover_altitude: float = 1.25,
                suite: SolvedSuite | None = None) -> MissionResult:
    """End-to-end replay: idle, vertical ascent, dynamic sequence planning,
    goal legs under scripted disturbances, return to base, all monitored.

    The monitor knows the scenario and the controllers but not the
    vehicle's plan; everything it learns arrives through noisy
    observations. Same arguments and seed give an identical timeline.
    """
    sc = scenario or load_scenario()
    model = model or ObservationModel()
    if disturbance_script is None:
        disturbance_script = default_disturbance_script()
    script = [p if isinstance(p, DisturbancePhase) else DisturbancePhase.from_dict(p)
              for p in disturbance_script]
    if suite is None:
        suite = SolvedSuite.build(sc, grid, goals)
    missing = [g for g in goals if g not in suite.goal_names]
    if missing:
        raise ValueError(f"suite does not cover goals {missing}")
    cg = suite.cellgraph
    rng = np.random.default_rng(seed)

    config = {"goals": list(goals), "seed": int(seed),
              "step_budget": int(step_budget), "idle_steps": int(idle_steps),
              "hover_altitude": float(hover_altitude),
              "disturbance_script": [p.to_dict() for p in script],
              "scenario": sc.name, "grid": {"cell_size": cg.grid.cell_size,
                                            "connectivity": cg.grid.connectivity,
                                            "disturbance_radius": cg.grid.disturbance_radius}}

    base_cell = cg.rep_cell(BASE)
    bx, by, _ = cg.cell_center(base_cell)
    top_cell = cg.cell_of_point((bx, by, hover_altitude))
    if top_cell < 0:
        raise ValueError("hover altitude outside the mission area")
    # vertical ascent column, base cell excluded
    ii = np.array(np.unravel_index(base_cell, cg.shape))
    jj = np.array(np.unravel_index(top_cell, cg.shape))
    ascent = [int(np.ravel_multi_index((ii[0], ii[1], z), cg.shape))
              for z in range(ii[2] + 1, jj[2] + 1)]

    events: list = []
    positions, observations, legs_per_step = [], [], []
    cell = base_cell
    monitor = None
    plan = None
    legs = []
    leg_idx = -1
    leg_step = 0
    flown = []
    completed = False

    def record(t, cur):
        pos = cg.cell_center(cur)
        obs = model.observe(pos, rng)
        positions.append(pos)
        observations.append(obs)
        legs_per_step.append(leg_idx)
        return obs

    t = 0
    while t < step_budget:
        if t < idle_steps:  # on ground
            record(t, cell)
            t += 1
            continue
        k = t - idle_steps
        if k < len(ascent):  # ascending
            cell = ascent[k]
            obs = record(t, cell)
            if k == len(ascent) - 1:
                pos = cg.cell_center(cell)
                events.append(TimelineEvent(t, "takeoff_done",
                                            {"position": pos.tolist()}))
                plan = predict_sequence("start", goals,
                                        suite.cost_matrix(start_cell=cell))[1:]
                events.append(TimelineEvent(t, "sequence_predicted",
                                            {"sequence": list(plan),
                                             "source": "plan"}))
                legs = list(plan)  # goals then base
                leg_idx, leg_step = 0, 0
                monitor = MonitorState.at_takeoff(suite, model, pos, t)
            t += 1
            continue

        # flight: one controller step per time step
        goal = legs[leg_idx]
        ctrl = suite.controller(goal)
        while cell in ctrl.stop:  # arrived; dwell is zero
            if goal != BASE:
                flown.append(goal)
            if leg_idx + 1 >= len(legs):
                ctrl = None
                break
            leg_idx += 1
            leg_step = 0
            goal = legs[leg_idx]
            ctrl = suite.controller(goal)
        if ctrl is None:
            obs = record(t, cell)
            _, ev = monitor_step(obs, t, monitor, model)
            events.extend(ev)
            events.append(TimelineEvent(t, "mission_complete",
                                        {"position": cg.cell_center(cell).tolist()}))
            completed = True
            break

        push = None
        for ph in script:
            if ph.leg_index == leg_idx and ph.start_offset <= leg_step < ph.start_offset + ph.steps:
                push = ph.push
        u = ctrl.action[cell]
        inst = suite.instance(goal)
        ys = inst.successors(cell, u)
        cell = int(ys[_scripted_pick(cg, push, ys)])
        leg_step += 1
        obs = record(t, cell)
        _, ev = monitor_step(obs, t, monitor, model)
        events.extend(ev)
        t += 1

    return MissionResult(completed=completed, events=events,
                         first_sequence=list(plan) if plan else [],
                         flown_sequence=flown,
                         positions=np.asarray(positions),
                         observations=np.asarray(observations),
                         legs=legs_per_step, config=config, monitor=monitor)


def write_timeline_json(path, result: MissionResult) -> None:
    with open(path, "w") as f:
        json.dump(result.to_json_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def write_mission_csv(path, result: MissionResult) -> None:
    """Per-step trace: true position, observation, leg index."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "x", "y", "z", "obs_x", "obs_y", "obs_z", "leg"])
        for t in range(len(result.positions)):
            p, o = result.positions[t], result.observations[t]
            w.writerow([t, *(f"{v:.6f}" for v in p),
                        *(f"{v:.6f}" for v in o), result.legs[t]])


def plot_data(result: MissionResult) -> dict:
    """Positions, observations and event markers for external plotting."""
    return {"positions": result.positions.tolist(),
            "observations": result.observations.tolist(),
            "legs": list(result.legs),
            "events": [e.to_dict() for e in result.events]}
