"""Timing comparison of the numba and numpy solver kernels.

Runs the modified frontier algorithm on the bundled scenario suite and on
a batch of random instances under both backends and prints a small table.
The numba path is warmed once before timing so JIT compilation does not
pollute the numbers.

    python3 benchmarks/compare_backends.py [--repeats 3] [--cell-size 0.1]
"""

import argparse
import time

import numpy as np

from hyperstop import kernels
from hyperstop.abstraction import GridSpec, make_scenario_suite
from hyperstop.core import ProblemInstance
from hyperstop.solver import solve_modified


def random_instance(rng, num_states=2000, num_inputs=4, branch=3):
    succ = {}
    cost = {}
    for x in range(num_states):
        for u in range(num_inputs):
            ys = rng.choice(num_states, size=rng.integers(1, branch + 1),
                            replace=False)
            succ[(x, u)] = [int(y) for y in ys]
            for y in succ[(x, u)]:
                cost[(x, int(y), u)] = float(rng.integers(1, 10))
    term = {int(x): 0.0 for x in rng.choice(num_states, size=num_states // 20,
                                            replace=False)}
    return ProblemInstance.from_maps(num_states, num_inputs, succ, term,
                                     edge_cost=cost, name="random")


def time_solves(instances, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for inst in instances:
            solve_modified(inst)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--cell-size", type=float, default=0.1)
    ap.add_argument("--random-states", type=int, default=2000)
    args = ap.parse_args()

    _, probs = make_scenario_suite(grid=GridSpec(cell_size=args.cell_size))
    suite = [inst for _, inst in probs]
    rng = np.random.default_rng(1)
    batch = [random_instance(rng, num_states=args.random_states)
             for _ in range(5)]

    print(f"suite: 5 reach-avoid instances, |X| = {suite[0].num_states}, "
          f"|U| = {suite[0].num_inputs}")
    print(f"batch: 5 random instances, |X| = {args.random_states}, |U| = 4")
    print(f"best of {args.repeats} repeats\n")
    print(f"{'backend':<8} {'suite [s]':>10} {'batch [s]':>10}")

    times = {}
    for name in ("numba", "numpy"):
        try:
            kernels.use_backend(name)
        except (ValueError, ImportError) as e:
            print(f"{name:<8} unavailable: {e}")
            continue
        if name == "numba":
            solve_modified(suite[0])  # JIT warm-up
        ts = time_solves(suite, args.repeats)
        tb = time_solves(batch, args.repeats)
        times[name] = (ts, tb)
        print(f"{name:<8} {ts:>10.3f} {tb:>10.3f}")
    kernels.use_backend(None)

    if len(times) == 2:
        su = times["numpy"][0] / times["numba"][0]
        bu = times["numpy"][1] / times["numba"][1]
        print(f"\nnumba speedup: suite x{su:.1f}, batch x{bu:.1f}")


if __name__ == "__main__":
    main()
