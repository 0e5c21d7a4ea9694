"""Command-line front end: validate and solve instance files, compare the
two frontier algorithms on the bundled scenario suite, inspect the grid
abstraction, and replay the monitored mission.

Exit codes: 0 success, 1 validation/input error, 2 convergence or guard
failure, 3 mission incomplete. Identical arguments and seed produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .core import (InvalidInstanceError, load_instance, validate)
from . import solver
from .solver import (ConvergenceError, STATS_COLUMNS, solve_baseline,
                     solve_modified, solve_oracle, stats_row)
from .abstraction import (GridSpec, build_reach_avoid, discretize,
                          load_scenario, make_scenario_suite)
from . import pgrm

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_GUARD = 2
EXIT_INCOMPLETE = 3


def _emit(text: str, out_path=None) -> None:
    if out_path:
        with open(out_path, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _json_dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _w_list(W) -> list:
    return [float(v) if np.isfinite(v) else "inf" for v in W]


def _grid_from_args(args) -> GridSpec:
    return GridSpec(cell_size=args.cell_size, connectivity=args.connectivity,
                    disturbance_radius=args.disturbance)


def _add_grid_flags(p) -> None:
    p.add_argument("--scenario", default=None,
                   help="scenario JSON (default: bundled firefight scenario)")
    p.add_argument("--cell-size", type=float, default=0.1, dest="cell_size")
    p.add_argument("--connectivity", choices=("face", "full"), default="full")
    p.add_argument("--disturbance", type=int, default=1,
                   help="disturbance radius in cells (Euclidean)")


def _goals(args) -> tuple:
    return tuple(g.strip() for g in args.goals.split(",") if g.strip())


# ---- validate ---------------------------------------------------------------


def cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    report = validate(inst)
    doc = {"file": args.instance, "ok": report.ok,
           "violations": report.violations, "warnings": report.warnings}
    _emit(_json_dumps(doc), args.out)
    return EXIT_OK if report.ok else EXIT_INVALID


# ---- solve ------------------------------------------------------------------


def _run_algorithm(inst, args):
    if args.algorithm == "oracle":
        return solve_oracle(inst)
    if args.algorithm == "baseline":
        return solve_baseline(inst, parallel=args.parallel, threads=args.threads)
    W, stats, _ = solve_modified(inst, argsup=args.argsup,
                                 parallel=args.parallel, threads=args.threads)
    return W, stats


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    report = validate(inst)
    if not report.ok:
        for v in report.violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_INVALID
    W, stats = _run_algorithm(inst, args)
    if args.check and args.algorithm != "oracle":
        W_ref, _ = solve_oracle(inst)
        if not np.array_equal(W, W_ref):
            print("check failed: result differs from the synchronous oracle",
                  file=sys.stderr)
            return EXIT_GUARD
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=STATS_COLUMNS)
        w.writeheader()
        w.writerow(stats_row(inst.name or args.instance, args.algorithm, stats))
        _emit(buf.getvalue(), args.out)
    else:
        doc = {"problem": inst.name or args.instance,
               "algorithm": args.algorithm,
               "W": _w_list(W),
               "stats": stats.to_dict(),
               "checked": bool(args.check)}
        _emit(_json_dumps(doc), args.out)
    return EXIT_OK


# ---- compare ----------------------------------------------------------------


COMPARE_COLUMNS = ("problem", "i_mod", "i_base", "ratio_mod", "ratio_base")


def cmd_compare(args) -> int:
    sc = load_scenario(args.scenario)
    _, probs = make_scenario_suite(sc, _grid_from_args(args), _goals(args))
    rows = []
    for goal, inst in probs:
        Wb, sb = solve_baseline(inst, parallel=args.parallel, threads=args.threads)
        Wm, sm, _ = solve_modified(inst, argsup=args.argsup,
                                   parallel=args.parallel, threads=args.threads)
        if not np.array_equal(Wb, Wm):
            print(f"algorithms disagree on {inst.name}", file=sys.stderr)
            return EXIT_GUARD
        rows.append({"problem": inst.name,
                     "i_mod": sm.iterations, "i_base": sb.iterations,
                     "ratio_mod": round(sm.frontier_ratio, 6),
                     "ratio_base": round(sb.frontier_ratio, 6)})
    if args.format == "json":
        _emit(_json_dumps(rows), args.out)
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COMPARE_COLUMNS)
        w.writeheader()
        w.writerows(rows)
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


# ---- scenario ---------------------------------------------------------------


def cmd_scenario(args) -> int:
    sc = load_scenario(args.scenario)
    cg = discretize(sc, _grid_from_args(args))
    doc = {"scenario": sc.name,
           "shape": list(cg.shape),
           "cells": cg.num_cells,
           "moves": len(cg.moves),
           "edges": int(len(cg.succ_state)),
           "tags": cg.tag_counts(),
           "goal_cells": {name: [int(c) for c in cg.free_target_cells(name)]
                          for name in sc.target_names + ["base"]}}
    _emit(_json_dumps(doc), args.out)
    return EXIT_OK


# ---- mission ----------------------------------------------------------------


def _load_script(path):
    if path is None:
        return None  # default script
    if path == "none":
        return []
    with open(path) as f:
        return [pgrm.DisturbancePhase.from_dict(d) for d in json.load(f)]


def cmd_mission(args) -> int:
    sc = load_scenario(args.scenario)
    try:
        result = pgrm.run_mission(sc, _grid_from_args(args),
                                  disturbance_script=_load_script(args.script),
                                  goals=_goals(args), seed=args.seed,
                                  step_budget=args.budget)
    except ValueError as e:
        print(f"mission setup failed: {e}", file=sys.stderr)
        return EXIT_INVALID
    first = result.first_sequence
    print("first predicted sequence:", " -> ".join(first))
    reference = ["A2", "A1", "A4", "A3", "base"]
    if set(_goals(args)) == set(reference[:-1]) and first != reference:
        print("note: sequence differs from the reference order "
              + " -> ".join(reference)
              + " (cost-model dependent; see README)")
    doc = result.to_json_dict()
    if args.plot_data:
        doc["plot_data"] = pgrm.plot_data(result)
    _emit(_json_dumps(doc), args.out)
    if args.trace:
        pgrm.write_mission_csv(args.trace, result)
    if not result.completed:
        print("mission incomplete within the step budget", file=sys.stderr)
        return EXIT_INCOMPLETE
    return EXIT_OK


# ---- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperstop",
                                description="worst-case optimal stopping on "
                                            "finite hyper-graphs")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("validate", help="check an instance file")
    pv.add_argument("instance")
    pv.add_argument("--out", default=None)
    pv.set_defaults(func=cmd_validate)

    ps = sub.add_parser("solve", help="solve one instance file")
    ps.add_argument("instance")
    ps.add_argument("--algorithm", choices=("oracle", "baseline", "modified"),
                    default="modified")
    ps.add_argument("--check", action="store_true",
                    help="cross-validate against the synchronous oracle")
    ps.add_argument("--argsup", choices=("cost", "value"), default=None,
                    help="sup-tracking mode of the modified algorithm")
    ps.add_argument("--parallel", action="store_true",
                    help="snapshot passes instead of in-place sweeps")
    ps.add_argument("--threads", type=int, default=None)
    ps.add_argument("--format", choices=("json", "csv"), default="json")
    ps.add_argument("--out", default=None)
    ps.set_defaults(func=cmd_solve)

    pc = sub.add_parser("compare", help="baseline vs modified on the scenario suite")
    _add_grid_flags(pc)
    pc.add_argument("--goals", default="A1,A2,A3,A4,base")
    pc.add_argument("--argsup", choices=("cost", "value"), default=None)
    pc.add_argument("--parallel", action="store_true")
    pc.add_argument("--threads", type=int, default=None)
    pc.add_argument("--format", choices=("json", "csv"), default="csv")
    pc.add_argument("--out", default=None)
    pc.set_defaults(func=cmd_compare)

    pg = sub.add_parser("scenario", help="summarize the grid abstraction")
    _add_grid_flags(pg)
    pg.add_argument("--out", default=None)
    pg.set_defaults(func=cmd_scenario)

    pm = sub.add_parser("mission", help="replay the monitored mission")
    _add_grid_flags(pm)
    pm.add_argument("--goals", default="A1,A2,A3,A4")
    pm.add_argument("--seed", type=int, default=7)
    pm.add_argument("--budget", type=int, default=400)
    pm.add_argument("--script", default=None,
                    help="disturbance script JSON, or 'none'")
    pm.add_argument("--plot-data", action="store_true", dest="plot_data",
                    help="embed per-step positions for external plotting")
    pm.add_argument("--out", default=None, help="timeline JSON path")
    pm.add_argument("--trace", default=None, help="per-step trace CSV path")
    pm.set_defaults(func=cmd_mission)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"cannot read {e.filename}", file=sys.stderr)
        return EXIT_INVALID
    except InvalidInstanceError as e:
        print(f"invalid instance: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as e:
        print(f"solver failed: {e}", file=sys.stderr)
        return EXIT_GUARD
    except (ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
