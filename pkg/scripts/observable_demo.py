"""Replay the service loop in process: plan, then react to a hob going offline.

    python3 scripts/observable_demo.py --generations 50
"""
import argparse

from kitchenforge.broker import InProcessBroker
from kitchenforge.metrics import IntegerType, MetricRecord, OBSERVABLE, serialize_record
from kitchenforge.moead import Params
from kitchenforge.scenario import data_path
from kitchenforge.service import KitchenService, OptimizationRequest, Topics, encode_request, parse_archive

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--generations", type=int, default=50)
    ap.add_argument("--zone", default="Hob(6)")
    args = ap.parse_args()

    broker = InProcessBroker()
    service = KitchenService(broker, defaults=Params(generations=args.generations))
    offline = serialize_record(MetricRecord(OBSERVABLE, f"{args.zone} availability", IntegerType(0, 0),
                                            event_driven=True))
    service.process(encode_request(OptimizationRequest("plan", data_path("reference.scn").read_text())))
    service.process(encode_request(OptimizationRequest("replan", metrics_text=offline)))

    for payload in broker.messages(Topics.archive):
        rid, points = parse_archive(payload.decode())
        using = sum(any(a.startswith(args.zone + " ") for a, _ in genes.values()) for _, genes in points)
        best = min(p[0]["m"] for p in points)
        print(f"{rid}: {len(points)} points, {using} use {args.zone}, best makespan {best:g} min")
    print()
    print(broker.messages(Topics.reports)[-1].decode())
