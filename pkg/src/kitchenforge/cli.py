"""Command line front end: optimize, validate, oracle, serve."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import moead
from .broker import BrokerError, TcpBrokerClient, TcpBrokerServer, parse_addr
from .metrics import controlled_metrics_for, serialize_record
from .oracle import BudgetExceeded, EnumerationBudget, enumerate_pareto
from .report import render_gantt, render_report
from .scenario import Scenario, ScenarioError, expand_instances, load_scenario
from .service import KitchenService, broker_address
from .twin import compile_scenario

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE = 0, 1, 2

CSV_HEADER = "makespan_min,energy_kj,deficiency,cost_eur"

GNUPLOT = """\
# 3-axis scatter of the Pareto front approximation
set datafile separator ','
set key autotitle columnhead
set xlabel 'Makespan (min)'
set ylabel 'Energy (kJ)'
set zlabel 'Deficiency'
set ticslevel 0
splot 'pareto.csv' using 1:2:3 with points pointtype 7 title 'Pareto front approximation'
pause -1
"""


def _num(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else f"{x:.6f}".rstrip("0").rstrip(".")


def pareto_csv(rows) -> str:
    """``rows``: (makespan, energy, deficiency, cost) tuples, written in canonical order."""
    lines = [CSV_HEADER] + [",".join(_num(v) for v in r) for r in sorted(rows)]
    return "\n".join(lines) + "\n"


def uncovered_foods(scenario: Scenario) -> list[str]:
    """Ordered foods that no available resource can cook."""
    twin = compile_scenario(scenario)
    capable = {twin.food_of[i] for i in range(twin.L) if twin.domains[i]}
    return [f for f, g in scenario.order if g > 0 and f not in capable]


def _load(path) -> Scenario:
    try:
        return load_scenario(Path(path))
    except ScenarioError as e:
        print(f"error: {path}: {e}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def _params(args) -> moead.Params:
    return moead.Params(H=args.pop_granularity, T=args.neighbors, generations=args.generations,
                        mutation_rate=args.mutation_rate, seed=args.seed, workers=args.workers)


def cmd_optimize(args) -> int:
    scenario = _load(args.scenario)
    missing = uncovered_foods(scenario)
    if missing:
        print(f"error: no recipe can cook the ordered food(s): {', '.join(missing)}", file=sys.stderr)
        return EXIT_INFEASIBLE
    params = _params(args)
    try:
        archive, stats = moead.run(scenario, params)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [(e.objectives.makespan, e.objectives.energy, e.objectives.deficiency, e.objectives.cost)
            for e in archive if e.objectives.feasible]
    (out / "pareto.csv").write_text(pareto_csv(rows))
    (out / "pareto.gnuplot").write_text(GNUPLOT)
    twin = compile_scenario(scenario)
    knee = moead.knee_point(archive, scenario)
    schedule = twin.decode(knee.chromosome if knee else twin.empty_chromosome())
    # report.txt omits wall time so repeated runs are byte-identical
    (out / "report.txt").write_text(render_report(schedule, twin.evaluate(schedule)))
    (out / "gantt.txt").write_text(render_gantt(schedule))
    (out / "run_stats.json").write_text(json.dumps(
        {"evaluations": stats.evaluations, "generations": stats.generations,
         "wall_time_s": round(stats.wall_time, 3), "front_size": len(rows)}, indent=2) + "\n")
    print(f"Optimisation took: {stats.wall_time:.3f} seconds")
    print(f"{len(rows)} Pareto points written to {out / 'pareto.csv'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        scenario = load_scenario(Path(args.scenario))
    except ScenarioError as e:
        print(f"invalid: {e}", file=sys.stderr)
        return EXIT_PARSE
    slots = expand_instances(scenario)
    print(f"recipes: {len(scenario.recipes)}")
    print(f"food types: {len(scenario.foods)}")
    print(f"resources: {len(scenario.resources)}")
    print(f"instance slots: {len(slots)}")
    counts: dict[str, int] = {}
    for s in slots:
        counts[s.recipe.label] = counts.get(s.recipe.label, 0) + 1
    for label, n in counts.items():
        print(f"  {label}: {n}")
    print("exclusion groups:")
    for g in scenario.exclusion_groups:
        print("  {" + ", ".join(sorted(g)) + "}")
    print("controlled metrics:")
    for rec in controlled_metrics_for(scenario):
        print(serialize_record(rec))
    missing = uncovered_foods(scenario)
    if missing:
        print(f"warning: no recipe can cook: {', '.join(missing)}", file=sys.stderr)
    return EXIT_OK


def cmd_oracle(args) -> int:
    scenario = _load(args.scenario)
    try:
        front = enumerate_pareto(scenario, EnumerationBudget(args.budget))
    except BudgetExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(CSV_HEADER.rsplit(",", 1)[0])
    for row in sorted(front):
        print(",".join(_num(v) for v in row))
    return EXIT_OK


def cmd_serve(args) -> int:
    addr = broker_address(args.broker_addr)
    defaults = moead.Params(H=args.pop_granularity, T=args.neighbors, generations=args.generations,
                            mutation_rate=args.mutation_rate, seed=args.seed if args.seed is not None else 42)
    server = None
    try:
        if args.host_broker:
            host, port = parse_addr(addr)
            server = TcpBrokerServer(host, port).start()
            print(f"broker listening on {server.address}", flush=True)
        client = TcpBrokerClient(addr)
        service = KitchenService(client, defaults=defaults)
        print("service ready", flush=True)
        service.serve()
    except (OSError, BrokerError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except KeyboardInterrupt:
        pass
    finally:
        if server is not None:
            server.stop()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kitchenforge", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def engine_flags(sp, seed_required):
        sp.add_argument("--seed", type=int, required=seed_required)
        sp.add_argument("--generations", type=int, default=200)
        sp.add_argument("--pop-granularity", type=int, default=12, help="simplex lattice H")
        sp.add_argument("--neighbors", type=int, default=10, help="neighbourhood size T")
        sp.add_argument("--mutation-rate", type=float, default=None, help="default 1/slot count")

    sp = sub.add_parser("optimize", help="run MOEA/D on a scenario file")
    sp.add_argument("--scenario", required=True)
    engine_flags(sp, seed_required=True)
    sp.add_argument("--out-dir", default="out")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("validate", help="check a scenario and print its decision variables")
    sp.add_argument("--scenario", required=True)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("oracle", help="exact Pareto set of a tiny scenario")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--budget", type=int, default=10**6)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("serve", help="run the optimisation service against a TCP broker")
    sp.add_argument("--broker-addr", default=None, help="host:port (env KITCHENFORGE_BROKER_ADDR)")
    sp.add_argument("--host-broker", action="store_true", help="also run the broker in this process")
    engine_flags(sp, seed_required=False)
    sp.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except SystemExit as e:
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())
