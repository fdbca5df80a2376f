"""Kitchen digital twin: chromosome -> timed schedule -> objective vector.

A chromosome holds one (allocation, priority) pair per instance slot.  The
allocation indexes the slot's domain (compatible available resources, then
"No allocation" last); priorities order slots competing for the kitchen.

Decoding is serial list scheduling.  Repeatedly the highest-priority eligible
slot (ties: lower slot index) is placed on its resource: a dependent setup if
the previous main task there cooked another recipe, then the pre-cooking
subtask if the recipe has a predecessor, then the main task, which also waits
for the earliest finished main task of the predecessor recipe.  A slot
becomes eligible once some slot of its predecessor recipe has been placed.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .scenario import (
    NO_ALLOCATION,
    DurationOverride,
    InstanceSlot,
    QualityUpdate,
    Scenario,
    expand_instances,
)

MAIN, SUBTASK, SETUP = "main", "subtask", "setup"
SUCCEEDED = "Succeeded"
INFEASIBLE = "Infeasible"
CIRCULAR_PREDECESSOR = "circular-predecessor"


def subtask_duration(main_duration: int) -> int:
    """Pre-cooking preparation time: a tenth of the main task, at least one minute."""
    if main_duration <= 0:
        raise ValueError("main duration must be positive")
    return max(1, (main_duration * 10) // 100)


@dataclass(frozen=True)
class Chromosome:
    alloc: tuple[int, ...]
    prio: tuple[int, ...]

    def __post_init__(self):
        if len(self.alloc) != len(self.prio):
            raise ValueError("allocation and priority genes differ in length")

    def __len__(self):
        return len(self.alloc)

    @classmethod
    def from_arrays(cls, alloc, prio) -> "Chromosome":
        return cls(tuple(int(a) for a in alloc), tuple(int(p) for p in prio))


@dataclass(frozen=True)
class Task:
    slot: str
    kind: str
    resource: str
    start: int
    end: int
    recipe: str
    setup_from: Optional[str] = None  # recipe label, setups only

    @property
    def label(self) -> str:
        if self.kind == SUBTASK:
            return f"{self.slot}_1"
        if self.kind == SETUP:
            return f"DependentSetUp from {self.setup_from} to {self.recipe}"
        return self.slot


@dataclass
class Schedule:
    tasks: dict[str, list[Task]] = field(default_factory=dict)  # resource display name -> tasks
    status: str = SUCCEEDED
    reason: Optional[str] = None
    unplaced: tuple[str, ...] = ()

    def all_tasks(self) -> list[Task]:
        return [t for ts in self.tasks.values() for t in ts]

    def mains(self) -> list[Task]:
        return [t for t in self.all_tasks() if t.kind == MAIN]

    @property
    def makespan(self) -> int:
        return max((t.end for t in self.all_tasks()), default=0)


@dataclass(frozen=True)
class ObjectiveVector:
    makespan: float
    energy: float
    deficiency: float
    cost: float = 0.0
    coverage_shortfall: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.coverage_shortfall <= 0

    def optimized(self) -> tuple[float, float, float]:
        return (self.makespan, self.energy, self.deficiency)


def constrained_dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """Feasible beats infeasible; smaller shortfall beats larger; else Pareto."""
    if a.coverage_shortfall != b.coverage_shortfall:
        return a.coverage_shortfall < b.coverage_shortfall
    fa, fb = a.optimized(), b.optimized()
    return all(x <= y for x, y in zip(fa, fb)) and fa != fb


class Twin:
    """Scenario compiled into flat per-slot tables for fast decoding."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.slots: list[InstanceSlot] = expand_instances(scenario)
        self.L = len(self.slots)
        resources = list(scenario.resources)
        self.resource_names = [r.display_name for r in resources]
        res_index = {r: i for i, r in enumerate(resources)}

        # conflicts[r]: resources (incl. r) whose intervals must not overlap r's
        self.conflicts = []
        for a in resources:
            self.conflicts.append(tuple(
                j for j, b in enumerate(resources)
                if a.zone == b.zone or scenario.excludes(a.zone, b.zone)))

        durations = {}
        quality = {}
        for eff in scenario.overrides:
            if isinstance(eff, DurationOverride):
                rec = scenario.recipe(eff.recipe)
                durations[(rec.label, scenario.resource(eff.resource))] = eff.duration
            elif isinstance(eff, QualityUpdate):
                quality[scenario.recipe(eff.recipe).label] = eff.deficiency

        labels = [r.label for r in scenario.recipes]
        self.recipe_labels = labels
        self.domains: list[tuple[int, ...]] = []
        self.main_dur: list[tuple[int, ...]] = []
        self.sub_dur: list[tuple[int, ...]] = []
        self.recipe_of: list[int] = []
        self.pred_of: list[int] = []
        self.energy, self.deficiency, self.cost, self.amount = [], [], [], []
        self.food_of: list[str] = []
        for slot in self.slots:
            rec = slot.recipe
            dom = tuple(res_index[r] for r in scenario.compatible_resources(rec))
            self.domains.append(dom)
            mains = tuple(durations.get((rec.label, resources[j]), rec.duration) for j in dom)
            self.main_dur.append(mains)
            self.sub_dur.append(tuple(subtask_duration(d) if rec.predecessor else 0 for d in mains))
            self.recipe_of.append(slot.recipe_index)
            self.pred_of.append(labels.index(rec.predecessor) if rec.predecessor else -1)
            self.energy.append(rec.energy)
            self.deficiency.append(quality.get(rec.label, rec.deficiency))
            self.cost.append(rec.cost)
            self.amount.append(rec.amount)
            self.food_of.append(rec.food)
        self.domain_sizes = np.array([len(d) + 1 for d in self.domains], dtype=np.int64)
        self.no_alloc = [len(d) for d in self.domains]
        self.order = {f: g for f, g in scenario.order if g > 0}

    def allocation_name(self, i: int, a: int) -> str:
        return NO_ALLOCATION if a == self.no_alloc[i] else self.resource_names[self.domains[i][a]]

    def allocation_index(self, i: int, name: str) -> int:
        key = " ".join(name.split()).casefold()
        if key == NO_ALLOCATION.casefold():
            return self.no_alloc[i]
        for a, j in enumerate(self.domains[i]):
            if self.resource_names[j].casefold() == key:
                return a
        raise KeyError(f"{name!r} is not in the domain of {self.slots[i].name}")

    def make_chromosome(self, genes: dict[str, tuple[str, int]]) -> Chromosome:
        """Chromosome from ``{slot name: (resource or "No allocation", priority)}``;
        slots not mentioned are left unallocated with priority 0."""
        index = {s.name.casefold(): i for i, s in enumerate(self.slots)}
        alloc, prio = list(self.no_alloc), [0] * self.L
        for name, (resource, p) in genes.items():
            try:
                i = index[" ".join(name.split()).casefold()]
            except KeyError:
                raise KeyError(f"no slot named {name!r}") from None
            alloc[i] = self.allocation_index(i, resource)
            prio[i] = p
        c = Chromosome(tuple(alloc), tuple(prio))
        self.check(c)
        return c

    def check(self, c: Chromosome) -> None:
        if len(c) != self.L:
            raise ValueError(f"chromosome has {len(c)} genes, scenario has {self.L} slots")
        for i, (a, p) in enumerate(zip(c.alloc, c.prio)):
            if not 0 <= a <= self.no_alloc[i]:
                raise ValueError(f"slot {self.slots[i].name}: allocation {a} outside domain")
            if not 0 <= p < max(self.L, 1):
                raise ValueError(f"slot {self.slots[i].name}: priority {p} outside [0, {self.L})")

    # -- core list scheduler; shared by decode() and the optimiser fast path
    def _simulate(self, alloc, prio, record: bool):
        L = self.L
        heap = []
        waiting: dict[int, list[int]] = {}
        for i in range(L):
            if alloc[i] == self.no_alloc[i]:
                continue
            if self.pred_of[i] < 0:
                heap.append((-prio[i], i))
            else:
                waiting.setdefault(self.pred_of[i], []).append(i)
        heapq.heapify(heap)

        nres = len(self.resource_names)
        free = [0] * nres
        last = [-1] * nres
        pred_done: dict[int, int] = {}
        conflicts, domains = self.conflicts, self.domains
        setup_len = self.scenario.setup_duration
        executed = []
        tasks = [] if record else None
        makespan = 0
        while heap:
            _, i = heapq.heappop(heap)
            a = alloc[i]
            r = domains[i][a]
            t = max(free[c] for c in conflicts[r])
            rec = self.recipe_of[i]
            if last[r] >= 0 and last[r] != rec and setup_len > 0:
                if record:
                    tasks.append((i, SETUP, r, t, t + setup_len, last[r]))
                t += setup_len
            sub = self.sub_dur[i][a]
            if sub:
                if record:
                    tasks.append((i, SUBTASK, r, t, t + sub, None))
                t += sub
            pred = self.pred_of[i]
            if pred >= 0 and pred_done[pred] > t:
                t = pred_done[pred]
            end = t + self.main_dur[i][a]
            if record:
                tasks.append((i, MAIN, r, t, end, None))
            free[r] = end
            last[r] = rec
            if end > makespan:
                makespan = end
            executed.append(i)
            if rec in pred_done:
                if end < pred_done[rec]:
                    pred_done[rec] = end
            else:
                pred_done[rec] = end
                for j in waiting.pop(rec, ()):
                    heapq.heappush(heap, (-prio[j], j))
        unplaced = sorted(j for js in waiting.values() for j in js)
        return makespan, executed, unplaced, tasks

    def objectives_from_executed(self, makespan, executed) -> ObjectiveVector:
        executed = sorted(executed)
        energy = sum(self.energy[i] for i in executed)
        deficiency = sum(self.deficiency[i] for i in executed)
        cost = sum(self.cost[i] for i in executed)
        produced: dict[str, float] = {}
        for i in executed:
            produced[self.food_of[i]] = produced.get(self.food_of[i], 0.0) + self.amount[i]
        shortfall = sum(max(0.0, g - produced.get(f, 0.0)) for f, g in self.order.items())
        return ObjectiveVector(makespan, energy, deficiency, cost, shortfall)

    def fast_objectives(self, alloc, prio) -> ObjectiveVector:
        makespan, executed, _, _ = self._simulate(alloc, prio, record=False)
        return self.objectives_from_executed(makespan, executed)

    def decode(self, c: Chromosome) -> Schedule:
        self.check(c)
        _, _, unplaced, raw = self._simulate(c.alloc, c.prio, record=True)
        sched = Schedule()
        for i, kind, r, s, e, prev in raw:
            label = self.recipe_labels[self.recipe_of[i]]
            task = Task(self.slots[i].name, kind, self.resource_names[r], s, e, label,
                        self.recipe_labels[prev] if kind == SETUP else None)
            sched.tasks.setdefault(task.resource, []).append(task)
        if unplaced:
            sched.status = INFEASIBLE
            sched.reason = CIRCULAR_PREDECESSOR
            sched.unplaced = tuple(self.slots[i].name for i in unplaced)
        return sched

    def evaluate(self, schedule: Schedule) -> ObjectiveVector:
        index = {s.name: i for i, s in enumerate(self.slots)}
        executed = [index[t.slot] for t in schedule.mains()]
        return self.objectives_from_executed(schedule.makespan, executed)

    def produced(self, alloc) -> dict[str, float]:
        out: dict[str, float] = {}
        for i in range(self.L):
            if alloc[i] != self.no_alloc[i]:
                out[self.food_of[i]] = out.get(self.food_of[i], 0.0) + self.amount[i]
        return out

    def repair(self, c: Chromosome, rng: np.random.Generator) -> Chromosome:
        """Allocate unused slots until the order is covered and every used
        recipe has an allocated predecessor slot."""
        alloc = list(c.alloc)
        changed = False
        while True:
            produced = self.produced(alloc)
            short = {f for f, g in self.order.items() if produced.get(f, 0.0) < g}
            cands = [i for i in range(self.L)
                     if self.food_of[i] in short and alloc[i] == self.no_alloc[i] and self.no_alloc[i] > 0]
            if not cands:
                break
            i = cands[int(rng.integers(len(cands)))]
            alloc[i] = int(rng.integers(self.no_alloc[i]))
            changed = True
        while True:
            used = {self.recipe_of[i] for i in range(self.L) if alloc[i] != self.no_alloc[i]}
            missing = sorted({self.pred_of[i] for i in range(self.L)
                              if alloc[i] != self.no_alloc[i] and self.pred_of[i] >= 0} - used)
            fixed = False
            for rec in missing:
                cands = [i for i in range(self.L)
                         if self.recipe_of[i] == rec and alloc[i] == self.no_alloc[i] and self.no_alloc[i] > 0]
                if cands:
                    i = cands[int(rng.integers(len(cands)))]
                    alloc[i] = int(rng.integers(self.no_alloc[i]))
                    fixed = changed = True
            if not fixed:
                break
        return Chromosome(tuple(alloc), c.prio) if changed else c

    def random_chromosome(self, rng: np.random.Generator) -> Chromosome:
        if self.L == 0:
            return Chromosome((), ())
        alloc = rng.integers(0, self.domain_sizes)
        prio = rng.integers(0, self.L, size=self.L)
        return Chromosome.from_arrays(alloc, prio)

    def empty_chromosome(self) -> Chromosome:
        return Chromosome(tuple(self.no_alloc), (0,) * self.L)

    def serial_bounds(self) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
        """Objective extremes: nothing allocated, and every slot run back to back
        on its slowest resource."""
        ms = en = de = 0.0
        for i in range(self.L):
            if not self.domains[i]:
                continue
            ms += self.scenario.setup_duration + max(m + s for m, s in zip(self.main_dur[i], self.sub_dur[i]))
            en += self.energy[i]
            de += self.deficiency[i]
        return (0.0, 0.0, 0.0), (ms, en, de)


@lru_cache(maxsize=16)
def compile_scenario(scenario: Scenario) -> Twin:
    return Twin(scenario)


def decode(chromosome: Chromosome, scenario: Scenario) -> Schedule:
    return compile_scenario(scenario).decode(chromosome)


def evaluate(schedule: Schedule, chromosome: Chromosome, scenario: Scenario) -> ObjectiveVector:
    twin = compile_scenario(scenario)
    twin.check(chromosome)
    return twin.evaluate(schedule)


def repair(chromosome: Chromosome, scenario: Scenario, rng: np.random.Generator) -> Chromosome:
    return compile_scenario(scenario).repair(chromosome, rng)
