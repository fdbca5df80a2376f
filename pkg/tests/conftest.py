from pathlib import Path

import pytest

from kitchenforge.scenario import Recipe, Resource, Scenario, build_standard_hob, reference_scenario

FIXTURES = Path(__file__).parent / "fixtures"


def metric_literals() -> list[str]:
    text = (FIXTURES / "metric_literals.txt").read_text()
    return [chunk.strip("\n") for chunk in text.split("%%\n")]


@pytest.fixture(scope="session")
def reference():
    return reference_scenario()


@pytest.fixture
def literals():
    return metric_literals()


def recipe(food, variant, amount=100, zones=("Z1",), pot="P", energy=10, duration=10,
           cost=0.01, deficiency=1, predecessor=None):
    return Recipe(food=food, variant=variant, amount=float(amount), zones=tuple(zones), pot=pot,
                  energy=float(energy), duration=duration, cost=cost, deficiency=float(deficiency),
                  predecessor=predecessor)


def small_kitchen(recipes, order, zones=("Z1",), pot="P", groups=(), setup=10, overrides=()):
    resources = tuple(Resource(z, pot) for z in zones)
    return Scenario(tuple(recipes), resources, tuple(frozenset(g) for g in groups),
                    tuple(order), setup, tuple(overrides), 0)


def one_hob(recipes, order, setup=10):
    res, groups = build_standard_hob("Hob")
    return Scenario(tuple(recipes), tuple(res), tuple(groups), tuple(order), setup, (), 0)


def sample_kitchen(reference):
    """Reference kitchen with the observed Rice A / Pasta A times on Hob(2)."""
    from kitchenforge.scenario import DurationOverride
    return reference.with_effects([DurationOverride("Rice A", "Hob(2) Pot(1)", 0, 25),
                                DurationOverride("Pasta A", "Hob(2) Pot(1)", 0, 20)])


SAMPLE_GENES = {
    # a boiled water batch elsewhere releases the dependants
    "Boiled water A 1": ("Hob(1) Pot(1)", 127),
    "Rice A 1": ("Hob(2) Pot(1)", 120),
    "Beef A 2": ("Hob(2) Pot(1)", 110),
    "Boiled water A 0": ("Hob(2) Pot(1)", 100),
    "Pasta A 0": ("Hob(2) Pot(1)", 90),
}


def schedule_violations(schedule, scenario):
    """Independent feasibility check of a decoded schedule."""
    from kitchenforge.twin import MAIN
    problems = []
    tasks = schedule.all_tasks()
    zone = {r.display_name: r.zone for r in scenario.resources}
    by_zone = {}
    for t in tasks:
        if not t.start < t.end:
            problems.append(f"empty interval {t}")
        by_zone.setdefault(zone[t.resource], []).append(t)
    zones = sorted(by_zone)
    for i, za in enumerate(zones):
        for zb in zones[i:]:
            if za != zb and not scenario.excludes(za, zb):
                continue
            # sweep by start: a task overlaps a related earlier one iff that one ends later
            merged = sorted([(t.start, 0, t) for t in by_zone[za]] + ([(t.start, 1, t) for t in by_zone[zb]] if za != zb else []),
                            key=lambda x: x[0])
            reach = [float("-inf"), float("-inf")]
            for start, side, t in merged:
                other = side if za == zb else 1 - side
                if reach[other] > start:
                    problems.append(f"overlap at {t} ({za}/{zb})")
                reach[side] = max(reach[side], t.end)
    for res, ts in schedule.tasks.items():
        starts = [t.start for t in ts]
        if starts != sorted(starts):
            problems.append(f"unsorted tasks on {res}")
    mains = [t for t in tasks if t.kind == MAIN]
    first_end = {}
    for t in mains:
        first_end[t.recipe] = min(first_end.get(t.recipe, float("inf")), t.end)
    for t in mains:
        pred = scenario.recipe(t.recipe).predecessor
        if pred and not first_end.get(pred, float("inf")) <= t.start:
            problems.append(f"{t.slot} starts before any {pred} finishes")
    return problems


def reaccumulate(schedule, scenario):
    """Objective totals summed task by task straight from the recipe table."""
    from kitchenforge.scenario import QualityUpdate
    from kitchenforge.twin import MAIN
    quality = {e.recipe.casefold(): e.deficiency for e in scenario.overrides if isinstance(e, QualityUpdate)}
    energy = deficiency = cost = 0.0
    produced = {}
    for t in schedule.all_tasks():
        if t.kind != MAIN:
            continue
        r = scenario.recipe(t.recipe)
        energy += r.energy
        deficiency += quality.get(r.label.casefold(), r.deficiency)
        cost += r.cost
        produced[r.food] = produced.get(r.food, 0.0) + r.amount
    shortfall = sum(max(0.0, g - produced.get(f, 0.0)) for f, g in scenario.order)
    makespan = max((t.end for t in schedule.all_tasks()), default=0)
    return makespan, energy, deficiency, cost, shortfall


def tiny_scenario(rng):
    """Random kitchen with at most three slots and three resources."""
    zones = [f"Z{k + 1}" for k in range(int(rng.integers(1, 4)))]
    groups = [zones[:2]] if len(zones) >= 2 and rng.random() < 0.5 else []

    def draw(food, variant, amount, predecessor=None):
        n = int(rng.integers(1, len(zones) + 1))
        return recipe(food, variant, amount=amount, zones=tuple(sorted(rng.choice(zones, n, replace=False))),
                      energy=int(rng.integers(1, 500)), duration=int(rng.integers(1, 40)),
                      cost=round(float(rng.random()), 2), deficiency=int(rng.integers(0, 10)),
                      predecessor=predecessor)

    shape = int(rng.integers(4))
    if shape == 0:    # one food, one recipe, up to three batches
        recipes, order = [draw("Soup", "A", 100)], [("Soup", 100 * int(rng.integers(1, 4)))]
    elif shape == 1:  # one food, alternative recipes
        recipes = [draw("Soup", "A", 100), draw("Soup", "B", 100)]
        order = [("Soup", 100)]
    elif shape == 2:  # two foods
        recipes = [draw("Soup", "A", 100), draw("Stew", "A", 100)]
        order = [("Soup", 100), ("Stew", 100 * int(rng.integers(1, 3)))]
    else:             # predecessor chain
        recipes = [draw("Stock", "A", 100), draw("Soup", "A", 100, predecessor="Stock A")]
        order = [("Stock", 100), ("Soup", 100)]
    return small_kitchen(recipes, order, zones=zones, groups=groups, setup=int(rng.integers(0, 11)))


ROOT = Path(__file__).resolve().parents[1]


def source_documents():
    """Markdown documents shipped next to the package, README excluded."""
    return [p for p in sorted(ROOT.glob("*.md")) if p.name.lower() != "readme.md"]


def quotes_anchored(literals):
    """True if one source document holds every literal, modulo whitespace."""
    squash = lambda t: "".join(t.split())  # noqa: E731
    return any(all(squash(lit) in squash(p.read_text()) for lit in literals) for p in source_documents())
