"""Optimisation-as-a-service loop on top of a topic broker.

Request payload (UTF-8)::

    id=order-17
    generations=100          # optional overrides: H, T, generations,
    seed=7                   # mutation_rate, seed
    %% scenario
    <scenario document>
    %% metrics
    <Metrics API records>

Either section may be absent.  A request without a scenario re-optimises the
most recent scenario with the new observables applied, which is how
event-driven recomputation happens.

Replies go to ``kitchen.archive`` (one ``objective:``/``chromosome:`` line
pair per front point) and ``kitchen.reports`` (the knee point's schedule), or
to ``kitchen.errors``.  Every reply starts with an ``id=`` line.
"""
from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Optional

from .broker import Broker
from .metrics import OBSERVABLE, ObservableInterpreter, parse_records
from .moead import ParetoArchive, Params, knee_point, run
from .report import render_report
from .scenario import Scenario, parse_scenario
from .twin import Chromosome, compile_scenario

log = logging.getLogger(__name__)

BROKER_ENV = "KITCHENFORGE_BROKER_ADDR"


@dataclass(frozen=True)
class Topics:
    requests: str = "kitchen.requests"
    archive: str = "kitchen.archive"
    reports: str = "kitchen.reports"
    errors: str = "kitchen.errors"


class RequestError(ValueError):
    pass


@dataclass
class OptimizationRequest:
    request_id: str
    scenario_text: Optional[str] = None
    metrics_text: Optional[str] = None
    params: dict = field(default_factory=dict)


_PARAM_TYPES = {"H": int, "T": int, "generations": int, "mutation_rate": float, "seed": int}


def encode_request(req: OptimizationRequest) -> bytes:
    lines = [f"id={req.request_id}"] + [f"{k}={v}" for k, v in req.params.items()]
    if req.scenario_text is not None:
        lines += ["%% scenario", req.scenario_text.rstrip("\n")]
    if req.metrics_text is not None:
        lines += ["%% metrics", req.metrics_text.rstrip("\n")]
    return ("\n".join(lines) + "\n").encode("utf-8")


def decode_request(payload: bytes) -> OptimizationRequest:
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError:
        raise RequestError("request is not UTF-8") from None
    header, sections, current = [], {}, None
    for line in text.splitlines():
        if line.startswith("%% "):
            current = line[3:].strip()
            if current not in ("scenario", "metrics") or current in sections:
                raise RequestError(f"unexpected section {current!r}")
            sections[current] = []
        elif current is None:
            if line.strip() and not line.lstrip().startswith("#"):
                header.append(line)
        else:
            sections[current].append(line)
    req_id, params = None, {}
    for line in header:
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise RequestError(f"bad header line {line!r}")
        if key == "id":
            req_id = value
        elif key in _PARAM_TYPES:
            try:
                params[key] = _PARAM_TYPES[key](value)
            except ValueError:
                raise RequestError(f"bad value for {key}: {value!r}") from None
        else:
            raise RequestError(f"unknown header {key!r}")
    if not req_id:
        raise RequestError("request has no id")
    join = lambda k: "\n".join(sections[k]) + "\n" if k in sections else None  # noqa: E731
    return OptimizationRequest(req_id, join("scenario"), join("metrics"), params)


def _num(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else f"{x:.6f}".rstrip("0").rstrip(".")


def format_archive(archive: ParetoArchive, scenario: Scenario, request_id: str = "") -> str:
    twin = compile_scenario(scenario)
    lines = [f"id={request_id}"]
    for e in archive.sorted():
        v = e.objectives
        lines.append(f"objective: m={_num(v.makespan)} e={_num(v.energy)} d={_num(v.deficiency)} c={_num(v.cost)}")
        genes = [f"{twin.slots[i].name}={twin.allocation_name(i, a)}@{p}"
                 for i, (a, p) in enumerate(zip(e.chromosome.alloc, e.chromosome.prio))]
        lines.append("chromosome: " + "; ".join(genes))
    return "\n".join(lines) + "\n"


def parse_archive(text: str) -> tuple[str, list[tuple[dict, dict]]]:
    """(request id, [(objectives, {slot: (allocation, priority)})])."""
    req_id, points = "", []
    for line in text.splitlines():
        if line.startswith("id="):
            req_id = line[3:]
        elif line.startswith("objective: "):
            objs = {}
            for part in line[len("objective: "):].split():
                k, _, v = part.partition("=")
                objs[k] = float(v)
            points.append((objs, {}))
        elif line.startswith("chromosome: "):
            body = line[len("chromosome: "):]
            for gene in filter(None, body.split("; ")):
                slot, _, rest = gene.partition("=")
                alloc, _, prio = rest.rpartition("@")
                points[-1][1][slot] = (alloc, int(prio))
    return req_id, points


def handle_request(scenario: Scenario, params: Params) -> tuple[ParetoArchive, str, float]:
    """Optimise and render the knee point.  Returns (archive, report, seconds)."""
    started = time.perf_counter()
    archive, _ = run(scenario, params)
    knee = knee_point(archive, scenario)
    twin = compile_scenario(scenario)
    chrom = knee.chromosome if knee is not None else Chromosome((), ())
    schedule = twin.decode(chrom)
    wall = time.perf_counter() - started
    return archive, render_report(schedule, twin.evaluate(schedule), wall), wall


class KitchenService:
    """Consumes requests one at a time; survives malformed input."""

    def __init__(self, broker: Broker, topics: Topics = Topics(), defaults: Optional[Params] = None):
        self.broker = broker
        self.topics = topics
        self.defaults = defaults or Params()
        self.scenario: Optional[Scenario] = None
        self.interpreter = ObservableInterpreter()
        self._stop = threading.Event()

    def _reply(self, topic: str, request_id: str, body: str) -> None:
        text = body if body.startswith("id=") else f"id={request_id}\n{body}"
        self.broker.publish(topic, text.encode("utf-8"))

    def process(self, payload: bytes) -> None:
        req_id = "?"
        try:
            req = decode_request(payload)
            req_id = req.request_id
            scenario = parse_scenario(req.scenario_text) if req.scenario_text is not None else self.scenario
            if scenario is None:
                raise RequestError("no scenario: send one before observables")
            interpreter = ObservableInterpreter() if req.scenario_text is not None else self.interpreter
            effects = []
            if req.metrics_text and req.metrics_text.strip():
                for rec in parse_records(req.metrics_text):
                    if rec.kind != OBSERVABLE:
                        continue
                    eff = interpreter.feed(rec)
                    if eff is not None:
                        effects.append(eff)
            scenario = scenario.with_effects(effects)
            params = replace(self.defaults, **req.params)
            archive, report, _ = handle_request(scenario, params)
        except Exception as e:  # every request gets exactly one reply
            log.warning("request %s failed: %s", req_id, e)
            self._reply(self.topics.errors, req_id, f"error: {type(e).__name__}: {e}\n")
            return
        self.scenario = scenario
        self.interpreter = interpreter
        self._reply(self.topics.archive, req_id, format_archive(archive, scenario, req_id))
        self._reply(self.topics.reports, req_id, report)

    def serve(self, poll: float = 0.5) -> None:
        """Process requests until ``stop()``; resumes past requests already seen."""
        handled = 0
        while not self._stop.is_set():
            seen = 0
            for payload in self.broker.subscribe(self.topics.requests, timeout=poll):
                seen += 1
                if seen <= handled:
                    continue
                self.process(payload)
                handled += 1
                if self._stop.is_set():
                    return
            if getattr(self.broker, "closed", False):
                return

    def stop(self) -> None:
        self._stop.set()


def broker_address(explicit: Optional[str] = None) -> str:
    return explicit or os.environ.get(BROKER_ENV, "127.0.0.1:9092")
