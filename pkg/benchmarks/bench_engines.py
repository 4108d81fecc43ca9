"""Compiled vs pure-Python engine timings.

Runs every design family for a fixed horizon and replicate count on
both backends, checks the trajectories still agree bit for bit, and
prints a table with the speedup.  Usage:

    python3 benchmarks/bench_engines.py [--n 2000] [--replicates 40]
"""

import argparse
import time

import numpy as np

from alloclab.core import BernoulliArms, RandomStream
from alloclab.delay import DelayModel
from alloclab.engine import DesignSpec, have_compiled_kernels, run_trial
from alloclab.markov import MCADParams
from alloclab.targets import TargetAllocation

CASES = [
    ("pw", DesignSpec.play_the_winner(), None),
    ("mcad", DesignSpec.markov_chain(MCADParams(0.9, 0.2, 0.8, 0.3)), None),
    ("rpw", DesignSpec.randomized_play_the_winner(), None),
    ("seu", DesignSpec.estimate_adjusted_urn(), None),
    ("dl", DesignSpec.drop_the_loser(), None),
    ("dbcd urn g=2", DesignSpec.doubly_adaptive(TargetAllocation("urn"), gamma=2.0), None),
    ("rbcd rsihr", DesignSpec.randomized_coin(TargetAllocation("rsihr")), None),
    ("dl delayed", DesignSpec.drop_the_loser(), DelayModel.shared(1.0, 1.0, 2)),
]


def _time(spec, arms, n, replicates, seed, backend, delay):
    t0 = time.perf_counter()
    last = None
    for r in range(replicates):
        last = run_trial(
            spec, arms, n, RandomStream(seed, r), delay=delay, backend=backend
        )
    return time.perf_counter() - t0, last


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--replicates", type=int, default=40)
    parser.add_argument("--seed", type=int, default=314159)
    args = parser.parse_args()

    if not have_compiled_kernels():
        print("compiled kernels unavailable; nothing to compare")
        return 1

    arms = BernoulliArms((0.7, 0.5))
    print(f"n={args.n} replicates={args.replicates} seed={args.seed}")
    print(f"{'design':<14} {'compiled':>10} {'python':>10} {'speedup':>8}")
    for name, spec, delay in CASES:
        fast, res_fast = _time(spec, arms, args.n, args.replicates, args.seed, "compiled", delay)
        slow, res_slow = _time(spec, arms, args.n, args.replicates, args.seed, "python", delay)
        if not np.array_equal(res_fast.assignments, res_slow.assignments):
            raise AssertionError(f"{name}: backends diverged")
        print(f"{name:<14} {fast:>9.3f}s {slow:>9.3f}s {slow / fast:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
