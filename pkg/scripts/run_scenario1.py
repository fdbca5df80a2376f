"""Reference kitchen, reference order: print the front and its extreme points.

    python3 scripts/run_scenario1.py --seed 42 --out-dir out/scenario1
"""
import argparse
from pathlib import Path

from kitchenforge import moead
from kitchenforge.cli import GNUPLOT, pareto_csv
from kitchenforge.report import render_report
from kitchenforge.scenario import data_path, load_scenario
from kitchenforge.twin import compile_scenario


def summarize(archive):
    front = [e.objectives for e in archive if e.objectives.feasible]
    for name, key in [("makespan", lambda v: v.makespan), ("energy", lambda v: v.energy),
                      ("deficiency", lambda v: v.deficiency)]:
        v = min(front, key=lambda v: (key(v), v.optimized()))
        print(f"  min {name:<10} m={v.makespan:<6} e={v.energy:<9g} d={v.deficiency:<6g} c={v.cost:.2f}")
    return front


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--generations", type=int, default=200)
    ap.add_argument("--out-dir", default="out/scenario1")
    args = ap.parse_args()

    scenario = load_scenario(data_path("reference.scn"))
    archive, stats = moead.run(scenario, moead.Params(seed=args.seed, generations=args.generations))
    print(f"{len(archive)} archive points, {stats.evaluations} evaluations, {stats.wall_time:.1f} s")
    front = summarize(archive)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "pareto.csv").write_text(pareto_csv([(v.makespan, v.energy, v.deficiency, v.cost) for v in front]))
    (out / "pareto.gnuplot").write_text(GNUPLOT)
    twin = compile_scenario(scenario)
    knee = twin.decode(moead.knee_point(archive, scenario).chromosome)
    (out / "report.txt").write_text(render_report(knee, twin.evaluate(knee), stats.wall_time))
    print("wrote", out)
