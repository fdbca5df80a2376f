"""Fourfold order on one hob versus four hobs: does parallelism shorten the makespan?

    python3 scripts/run_scenario2.py --seed 42
"""
import argparse

from kitchenforge import moead
from kitchenforge.scenario import data_path, expand_instances, load_scenario

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--generations", type=int, default=200)
    args = ap.parse_args()

    rows = []
    for name in ("reference.scn", "reference_x4_one_hob.scn", "reference_x4_four_hobs.scn"):
        s = load_scenario(data_path(name))
        archive, stats = moead.run(s, moead.Params(seed=args.seed, generations=args.generations))
        front = [e.objectives for e in archive if e.objectives.feasible]
        rows.append((name, len(s.resources), len(expand_instances(s)), len(front),
                     min(v.makespan for v in front), min(v.energy for v in front), stats.wall_time))

    print(f"{'scenario':<26}{'res':>4}{'slots':>6}{'front':>6}{'min m':>7}{'min e':>10}{'secs':>7}")
    for name, res, slots, n, m, e, wall in rows:
        print(f"{name:<26}{res:>4}{slots:>6}{n:>6}{m:>7}{e:>10g}{wall:>7.1f}")
    print(f"wall time ratio 4 hobs / reference: {rows[2][-1] / rows[0][-1]:.2f}")
