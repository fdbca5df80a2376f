"""Compare MOEA/D against exhaustive enumeration on many random toy kitchens.

    python3 scripts/oracle_sweep.py --kitchens 200 --seeds 3
"""
import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from conftest import tiny_scenario  # noqa: E402

from kitchenforge import moead  # noqa: E402
from kitchenforge.oracle import enumerate_pareto  # noqa: E402

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--kitchens", type=int, default=50)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--generations", type=int, default=30)
    ap.add_argument("--first", type=int, default=5000, help="rng seed of the first kitchen")
    args = ap.parse_args()

    started, misses = time.perf_counter(), []
    for k in range(args.kitchens):
        s = tiny_scenario(np.random.default_rng(args.first + k))
        exact = enumerate_pareto(s)
        for seed in range(args.seeds):
            got = moead.run(s, moead.Params(H=6, T=5, generations=args.generations, seed=seed))[0].objective_set()
            if got != exact:
                misses.append((args.first + k, seed, sorted(exact), sorted(got)))
    total = args.kitchens * args.seeds
    print(f"{total - len(misses)}/{total} runs matched the exact front in {time.perf_counter() - started:.1f} s")
    for m in misses:
        print("  kitchen %d seed %d\n    exact %s\n    found %s" % m)
