"""Exhaustive Pareto enumeration for toy instances.

Every allocation vector is combined with every distinct processing order.
Priorities only act through the relative order of slots that interact (same
or mutually exclusive resource, or a predecessor link), so orders are
enumerated per interacting group instead of over all L! permutations.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .scenario import Scenario
from .twin import Chromosome, ObjectiveVector, Twin, compile_scenario, constrained_dominates


class BudgetExceeded(RuntimeError):
    def __init__(self, count: int, budget: int, lower_bound: bool = False):
        self.count = count
        self.budget = budget
        qual = "at least " if lower_bound else ""
        super().__init__(f"{qual}{count} combinations exceed the enumeration budget of {budget}")


@dataclass(frozen=True)
class EnumerationBudget:
    max_combinations: int = 10**6

    def __post_init__(self):
        if self.max_combinations <= 0:
            raise ValueError("budget must be positive")


def _groups(twin: Twin, alloc) -> list[list[int]]:
    used = [i for i in range(twin.L) if alloc[i] != twin.no_alloc[i]]
    parent = {i: i for i in used}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in itertools.combinations(used, 2):
        ri, rj = twin.domains[i][alloc[i]], twin.domains[j][alloc[j]]
        linked = (rj in twin.conflicts[ri]
                  or twin.pred_of[i] == twin.recipe_of[j]
                  or twin.pred_of[j] == twin.recipe_of[i])
        if linked:
            parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in used:
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def count_combinations(scenario: Scenario, budget: EnumerationBudget = EnumerationBudget()) -> int:
    twin = compile_scenario(scenario)
    upper = math.prod(int(k) for k in twin.domain_sizes)
    if upper > budget.max_combinations:
        raise BudgetExceeded(upper, budget.max_combinations, lower_bound=True)
    total = 0
    for alloc in itertools.product(*(range(int(k)) for k in twin.domain_sizes)):
        total += math.prod(math.factorial(len(g)) for g in _groups(twin, alloc))
        if total > budget.max_combinations:
            raise BudgetExceeded(total, budget.max_combinations, lower_bound=True)
    return total


def _orders(twin: Twin, alloc):
    """Yield priority vectors realising every distinct per-group order."""
    groups = _groups(twin, alloc)
    L = twin.L
    for perms in itertools.product(*(itertools.permutations(g) for g in groups)):
        prio = [0] * L
        rank = L - 1
        for perm in perms:
            for i in perm:
                prio[i] = rank
                rank -= 1
        yield tuple(prio)


def enumerate_all(scenario: Scenario, budget: EnumerationBudget = EnumerationBudget()):
    """Yield (chromosome, objectives) for every combination."""
    count_combinations(scenario, budget)
    twin = compile_scenario(scenario)
    for alloc in itertools.product(*(range(int(k)) for k in twin.domain_sizes)):
        for prio in _orders(twin, alloc):
            c = Chromosome(tuple(alloc), prio)
            yield c, twin.evaluate(twin.decode(c))


def pareto_filter(vectors) -> set[ObjectiveVector]:
    vs = list(set(vectors))
    return {v for v in vs if not any(constrained_dominates(u, v) for u in vs)}


def enumerate_pareto(scenario: Scenario, budget: EnumerationBudget = EnumerationBudget()) -> set[tuple]:
    """Optimised-objective tuples of the exact (constrained) Pareto set."""
    best: dict[tuple, ObjectiveVector] = {}
    for _, v in enumerate_all(scenario, budget):
        best.setdefault((v.coverage_shortfall,) + v.optimized(), v)
    front = pareto_filter(best.values())
    return {v.optimized() for v in front}
