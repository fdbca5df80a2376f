"""MOEA/D over allocation/priority chromosomes.

Tchebycheff decomposition on normalised (makespan, energy, deficiency) with a
simplex-lattice of weight vectors.  Each generation builds one offspring per
subproblem from the population as it stood at the start of the generation;
offspring are evaluated (optionally in worker processes), the ideal point
absorbs the whole batch, and replacements are then applied in subproblem
order against that single ideal point, so the result depends only on the seed, never on the
number of workers.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Optional

import numpy as np

from .scenario import Scenario
from .twin import Chromosome, ObjectiveVector, Twin, compile_scenario, constrained_dominates

ZERO_WEIGHT = 1e-6


def simplex_weights(H: int, m: int = 3) -> np.ndarray:
    """All weight vectors with components in {0, 1/H, ..., 1} summing to one."""
    if H < 1:
        raise ValueError("H must be >= 1")

    def rec(left, k):
        if k == 1:
            yield (left,)
            return
        for i in range(left, -1, -1):
            for rest in rec(left - i, k - 1):
                yield (i,) + rest

    w = np.array(list(rec(H, m)), dtype=float) / H
    assert len(w) == comb(H + m - 1, m - 1)
    return w


def neighborhoods(weights: np.ndarray, T: int) -> np.ndarray:
    d = np.linalg.norm(weights[:, None, :] - weights[None, :, :], axis=2)
    return np.argsort(d, axis=1, kind="stable")[:, :T]


def normalize_objectives(v, bounds) -> np.ndarray:
    lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    x = np.asarray(v.optimized() if isinstance(v, ObjectiveVector) else v, dtype=float)
    span = hi - lo
    out = np.divide(x - lo, span, out=np.zeros_like(x), where=span > 0)
    return np.clip(out, 0.0, 1.0)


def tchebycheff(normalized, weight, ideal) -> float:
    w = np.where(np.asarray(weight, dtype=float) == 0, ZERO_WEIGHT, weight)
    return float(np.max(w * np.abs(np.asarray(normalized) - np.asarray(ideal))))


def crossover(a: Chromosome, b: Chromosome, rng: np.random.Generator) -> Chromosome:
    """Uniform crossover; a slot's allocation and priority travel together."""
    if len(a) != len(b):
        raise ValueError("parents differ in length")
    take_a = rng.random(len(a)) < 0.5
    alloc = np.where(take_a, a.alloc, b.alloc) if len(a) else ()
    prio = np.where(take_a, a.prio, b.prio) if len(a) else ()
    return Chromosome.from_arrays(alloc, prio)


def mutate(c: Chromosome, rate: float, domain_sizes, rng: np.random.Generator) -> Chromosome:
    """Per slot with probability ``rate``: resample the allocation or the priority."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    L = len(c)
    if L == 0:
        return c
    hit = rng.random(L) < rate
    which = rng.random(L) < 0.5
    new_alloc = rng.integers(0, np.asarray(domain_sizes))
    new_prio = rng.integers(0, L, size=L)
    alloc = np.where(hit & which, new_alloc, c.alloc)
    prio = np.where(hit & ~which, new_prio, c.prio)
    return Chromosome.from_arrays(alloc, prio)


@dataclass
class ArchiveEntry:
    chromosome: Chromosome
    objectives: ObjectiveVector


class ParetoArchive:
    """Mutually non-dominated (chromosome, objectives) pairs.

    A candidate whose optimised objectives equal a member's is rejected, so
    each point of the front is held once, by the first chromosome that
    reached it.
    """

    def __init__(self):
        self.entries: list[ArchiveEntry] = []

    def insert(self, chromosome: Chromosome, objectives: ObjectiveVector) -> bool:
        key = (objectives.coverage_shortfall,) + objectives.optimized()
        for e in self.entries:
            if constrained_dominates(e.objectives, objectives):
                return False
            if (e.objectives.coverage_shortfall,) + e.objectives.optimized() == key:
                return False
        self.entries = [e for e in self.entries if not constrained_dominates(objectives, e.objectives)]
        self.entries.append(ArchiveEntry(chromosome, objectives))
        return True

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def sorted(self) -> list[ArchiveEntry]:
        return sorted(self.entries, key=lambda e: e.objectives.optimized() + (e.objectives.cost,))

    def objective_set(self, feasible_only: bool = True) -> set[tuple[float, float, float]]:
        return {e.objectives.optimized() for e in self.entries
                if e.objectives.feasible or not feasible_only}


@dataclass
class Params:
    H: int = 12
    T: int = 10
    generations: int = 200
    mutation_rate: Optional[float] = None  # None: 1 / slot count
    seed: int = 42
    max_replacements: int = 2
    workers: int = 1

    def validate(self, population: int) -> None:
        if self.H < 1:
            raise ValueError("H must be >= 1")
        if not 2 <= self.T <= population:
            raise ValueError(f"T must lie in [2, {population}]")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation rate must lie in [0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class RunStats:
    evaluations: int = 0
    generations: int = 0
    wall_time: float = 0.0
    ideal_history: list = field(default_factory=list)


@dataclass
class RunState:
    """Snapshot handed to the per-generation callback."""

    generation: int
    weights: np.ndarray
    population: list[Chromosome]
    objectives: list[ObjectiveVector]
    normalized: np.ndarray
    ideal: np.ndarray
    archive: ParetoArchive


_worker_twin: Optional[Twin] = None


def _init_worker(scenario: Scenario) -> None:
    global _worker_twin
    _worker_twin = compile_scenario(scenario)


def _evaluate_chunk(genes):
    return [_worker_twin.fast_objectives(a, p) for a, p in genes]


class _Evaluator:
    def __init__(self, twin: Twin, workers: int):
        self.twin = twin
        self.pool = None
        if workers > 1:
            self.pool = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(twin.scenario,))
        self.workers = workers

    def __call__(self, chromosomes: list[Chromosome]) -> list[ObjectiveVector]:
        genes = [(c.alloc, c.prio) for c in chromosomes]
        if self.pool is None:
            return [self.twin.fast_objectives(a, p) for a, p in genes]
        size = max(1, -(-len(genes) // self.workers))
        chunks = [genes[k:k + size] for k in range(0, len(genes), size)]
        return [v for part in self.pool.map(_evaluate_chunk, chunks) for v in part]

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def _lean_chromosome(twin: Twin, rng: np.random.Generator) -> Chromosome:
    # random priorities, nothing allocated: repair then picks a random
    # covering multisubset without the overproduction of uniform allocations
    prio = rng.integers(0, max(twin.L, 1), size=twin.L)
    return Chromosome(tuple(twin.no_alloc), tuple(int(p) for p in prio))


def _better(child: ObjectiveVector, g_child: float, inc: ObjectiveVector, g_inc: float) -> bool:
    if child.coverage_shortfall != inc.coverage_shortfall:
        return child.coverage_shortfall < inc.coverage_shortfall
    return g_child < g_inc


def run(scenario: Scenario, params: Optional[Params] = None,
        callback: Optional[Callable[[RunState], None]] = None) -> tuple[ParetoArchive, RunStats]:
    params = params or Params()
    weights = simplex_weights(params.H)
    N = len(weights)
    params.validate(N)
    twin = compile_scenario(scenario)
    rng = np.random.default_rng(params.seed)
    rate = params.mutation_rate if params.mutation_rate is not None else 1.0 / max(twin.L, 1)
    B = neighborhoods(weights, params.T)
    bounds = twin.serial_bounds()
    stats = RunStats()
    archive = ParetoArchive()
    evaluator = _Evaluator(twin, params.workers)
    started = time.perf_counter()

    try:
        pop = [twin.repair(_lean_chromosome(twin, rng), rng) for _ in range(N)]
        objs = evaluator(pop)
        stats.evaluations += N
        norm = np.array([normalize_objectives(v, bounds) for v in objs]).reshape(N, 3)
        ideal = np.full(3, np.inf)
        for v, x in zip(objs, norm):
            if v.feasible:
                ideal = np.minimum(ideal, x)
        for c, v in zip(pop, objs):
            archive.insert(c, v)

        def z():
            return np.where(np.isfinite(ideal), ideal, 0.0)

        stats.ideal_history.append(z().copy())
        if callback:
            callback(RunState(0, weights, list(pop), list(objs), norm.copy(), z().copy(), archive))

        for gen in range(1, params.generations + 1):
            children = []
            for i in range(N):
                p1, p2 = rng.choice(B[i], size=2, replace=False)
                child = crossover(pop[p1], pop[p2], rng)
                child = mutate(child, rate, twin.domain_sizes, rng)
                children.append(twin.repair(child, rng))
            child_objs = evaluator(children)
            stats.evaluations += N

            child_norm = [normalize_objectives(v, bounds) for v in child_objs]
            for cv, cx in zip(child_objs, child_norm):
                if cv.feasible:
                    ideal = np.minimum(ideal, cx)
            zz = z()
            for i, (child, cv, cx) in enumerate(zip(children, child_objs, child_norm)):
                replaced = 0
                for j in rng.permutation(B[i]):
                    if _better(cv, tchebycheff(cx, weights[j], zz), objs[j], tchebycheff(norm[j], weights[j], zz)):
                        pop[j], objs[j], norm[j] = child, cv, cx
                        replaced += 1
                        if replaced >= params.max_replacements:
                            break
                archive.insert(child, cv)

            stats.generations = gen
            stats.ideal_history.append(z().copy())
            if callback:
                callback(RunState(gen, weights, list(pop), list(objs), norm.copy(), z().copy(), archive))
    finally:
        evaluator.close()

    stats.wall_time = time.perf_counter() - started
    return archive, stats


def knee_point(archive: ParetoArchive, scenario: Scenario) -> Optional[ArchiveEntry]:
    """Member nearest (Euclidean) to the ideal point of the normalised archive."""
    entries = archive.sorted()
    if not entries:
        return None
    feasible = [e for e in entries if e.objectives.feasible] or entries
    bounds = compile_scenario(scenario).serial_bounds()
    pts = np.array([normalize_objectives(e.objectives, bounds) for e in feasible])
    ideal = pts.min(axis=0)
    d = np.linalg.norm(pts - ideal, axis=1)
    return feasible[int(np.argmin(d))]
