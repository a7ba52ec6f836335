"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--seed S]

Inputs are random but seeded, and both implementations see identical inputs;
outputs are compared before timing so a speedup never hides a wrong answer.
"""
from __future__ import annotations

import argparse
import itertools
import random
import sys
import timeit

from gdprop import kernels


def cost_row(rng: random.Random, n: int) -> list[int]:
    return list(itertools.accumulate([0] + [rng.randint(0, 3) for _ in range(n)]))


def workloads(rng: random.Random) -> dict[str, tuple[str, tuple]]:
    cap = 400
    masks = [rng.getrandbits(40) & rng.getrandbits(40) for _ in range(22)]
    return {
        "knapsack_merge (cap 400)": ("knapsack_merge", (cost_row(rng, 400), cost_row(rng, 400), cap)),
        "cross_fold (cap 150)": ("cross_fold", (cost_row(rng, 150), 300, cost_row(rng, 150), 300, 150)),
        "cover_profile (22 sets, 40 outputs)": ("cover_profile", (masks, len(masks), -1)),
    }


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3, help="timing repetitions; the best is reported")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    impls = kernels.available()
    if "cython" not in impls:
        print("compiled extension not built; only the Python kernels are available", file=sys.stderr)
    cases = workloads(random.Random(args.seed))

    print(f"{'kernel':38s}" + "".join(f"{name:>12s}" for name in impls) + ("   speedup" if len(impls) > 1 else ""))
    for label, (fn, call_args) in cases.items():
        results = {name: getattr(mod, fn)(*call_args) for name, mod in impls.items()}
        if len({repr(r) for r in results.values()}) != 1:
            print(f"{label}: implementations disagree", file=sys.stderr)
            return 1
        times = {}
        for name, mod in impls.items():
            f = getattr(mod, fn)
            times[name] = min(timeit.repeat(lambda: f(*call_args), number=1, repeat=args.repeat))
        row = f"{label:38s}" + "".join(f"{times[n] * 1e3:10.2f}ms" for n in impls)
        if len(impls) > 1:
            row += f"{times['python'] / times['cython']:9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
