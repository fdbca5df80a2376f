"""Kitchen domain model: recipes, hob resources, exclusion groups, orders.

Scenario files are sectioned key/value text::

    # comments start with '#'
    [config]
    setup_duration_min=10
    seed=42

    [resource]
    zone=Hob(1)
    pot=Pot(1)

    [exclusion]
    zones=Hob(1),Hob(5)

    [recipe]
    food=Pasta
    variant=A
    predecessor=Boiled water A
    amount_g=100
    zones=Hob(1),Hob(2)
    pot=Pot(1)
    energy_kj=840
    duration_min=30
    cost_eur=0.021
    deficiency=2

    [order]
    Pasta=1000

    [override]
    kind=duration
    recipe=Boiled water A
    resource=Hob(1) Pot(1)
    start_min=0
    end_min=40

``[recipe]``, ``[resource]``, ``[exclusion]`` and ``[override]`` open a new
record each time they appear; ``[order]`` and ``[config]`` accumulate.
``dump_scenario`` writes the same grammar, and ``load_scenario`` of its output
gives back an equal ``Scenario``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Union

NO_ALLOCATION = "No allocation"


class ScenarioError(ValueError):
    """Invalid scenario document or inconsistent domain model."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Recipe:
    food: str
    variant: str
    amount: float
    zones: tuple[str, ...]
    pot: str
    energy: float
    duration: int
    cost: float
    deficiency: float
    predecessor: Optional[str] = None  # label "<food> <variant>" of another recipe

    @property
    def label(self) -> str:
        return f"{self.food} {self.variant}"


@dataclass(frozen=True)
class Resource:
    zone: str
    pot: str

    @property
    def display_name(self) -> str:
        return f"{self.zone} {self.pot}"


@dataclass(frozen=True)
class ResourceUnavailable:
    """A zone or a pot type that must not be allocated."""

    target: str


@dataclass(frozen=True)
class ResourceAvailable:
    """Cancels an earlier unavailability of ``target``."""

    target: str


@dataclass(frozen=True)
class DurationOverride:
    recipe: str
    resource: str
    start: int
    end: int

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class QualityUpdate:
    recipe: str
    deficiency: float


ObservableEffect = Union[ResourceUnavailable, ResourceAvailable, DurationOverride, QualityUpdate]


@dataclass(frozen=True)
class InstanceSlot:
    recipe: Recipe
    recipe_index: int
    index: int

    @property
    def name(self) -> str:
        return f"{self.recipe.label} {self.index}"


@dataclass(frozen=True)
class Scenario:
    recipes: tuple[Recipe, ...]
    resources: tuple[Resource, ...]
    exclusion_groups: tuple[frozenset[str], ...] = ()
    order: tuple[tuple[str, float], ...] = ()
    setup_duration: int = 10
    overrides: tuple[ObservableEffect, ...] = ()
    rng_seed: int = 0

    def __post_init__(self):
        _validate(self)

    @property
    def order_map(self) -> dict[str, float]:
        return dict(self.order)

    @property
    def foods(self) -> list[str]:
        seen = {}
        for r in self.recipes:
            seen.setdefault(r.food, None)
        return list(seen)

    def recipe(self, label: str) -> Recipe:
        key = label.casefold()
        for r in self.recipes:
            if r.label.casefold() == key:
                return r
        raise KeyError(label)

    def resource(self, display_name: str) -> Resource:
        key = " ".join(display_name.split()).casefold()
        for res in self.resources:
            if res.display_name.casefold() == key:
                return res
        raise KeyError(display_name)

    def excludes(self, zone_a: str, zone_b: str) -> bool:
        if zone_a == zone_b:
            return False
        return any(zone_a in g and zone_b in g for g in self.exclusion_groups)

    def unavailable_targets(self) -> set[str]:
        down: set[str] = set()
        for eff in self.overrides:
            if isinstance(eff, ResourceUnavailable):
                down.add(eff.target)
            elif isinstance(eff, ResourceAvailable):
                down.discard(eff.target)
        return down

    def available_resources(self) -> list[Resource]:
        down = self.unavailable_targets()
        return [r for r in self.resources if r.zone not in down and r.pot not in down]

    def compatible_resources(self, recipe: Recipe) -> list[Resource]:
        """Resources the recipe may run on, in catalog resource order."""
        return [r for r in self.available_resources() if r.pot == recipe.pot and r.zone in recipe.zones]

    def with_effects(self, effects: Iterable[ObservableEffect]) -> "Scenario":
        return replace(self, overrides=self.overrides + tuple(effects))


def _validate(s: Scenario) -> None:
    labels = set()
    for r in s.recipes:
        if not r.food or not r.variant:
            raise ScenarioError("recipe needs a food and a variant")
        if r.label in labels:
            raise ScenarioError(f"duplicate recipe {r.label!r}")
        labels.add(r.label)
        if r.amount <= 0 or r.duration <= 0:
            raise ScenarioError(f"recipe {r.label!r}: amount and duration must be positive")
        if r.energy < 0 or r.cost < 0 or r.deficiency < 0:
            raise ScenarioError(f"recipe {r.label!r}: energy, cost and deficiency must be non-negative")
    zones = {res.zone for res in s.resources}
    pairs = {(res.zone, res.pot) for res in s.resources}
    if len(pairs) != len(s.resources):
        raise ScenarioError("duplicate resource")
    for r in s.recipes:
        if r.predecessor is not None and r.predecessor not in labels:
            raise ScenarioError(f"recipe {r.label!r}: unknown predecessor {r.predecessor!r}")
        for z in r.zones:
            if z not in zones:
                raise ScenarioError(f"recipe {r.label!r}: unknown zone {z!r}")
            if (z, r.pot) not in pairs:
                raise ScenarioError(f"recipe {r.label!r}: zone {z!r} does not take {r.pot!r}")
    for g in s.exclusion_groups:
        if len(g) < 2:
            raise ScenarioError("exclusion group needs at least two zones")
        for z in g:
            if z not in zones:
                raise ScenarioError(f"exclusion group references unknown zone {z!r}")
    for food, grams in s.order:
        if grams < 0:
            raise ScenarioError(f"order for {food!r} is negative")
    if s.setup_duration < 0:
        raise ScenarioError("setup duration must be non-negative")
    for eff in s.overrides:
        _check_effect(s, eff)


def _check_effect(s: Scenario, eff: ObservableEffect) -> None:
    if isinstance(eff, (ResourceUnavailable, ResourceAvailable)):
        if not any(eff.target in (r.zone, r.pot) for r in s.resources):
            raise ScenarioError(f"unknown zone or pot {eff.target!r}")
        return
    try:
        s.recipe(eff.recipe)
    except KeyError:
        raise ScenarioError(f"unknown recipe {eff.recipe!r}") from None
    if isinstance(eff, DurationOverride):
        try:
            s.resource(eff.resource)
        except KeyError:
            raise ScenarioError(f"unknown resource {eff.resource!r}") from None
        if eff.end <= eff.start:
            raise ScenarioError(f"duration override for {eff.recipe!r} must have end > start")
    elif eff.deficiency < 0:
        raise ScenarioError("deficiency must be non-negative")


def expand_instances(scenario: Scenario) -> list[InstanceSlot]:
    """One slot per potential recipe execution.

    Ordered foods get ``ceil(order / amount)`` slots per recipe.  A recipe of
    an unordered food that some slotted recipe depends on gets one slot per
    dependent slot.
    """
    demand = {f: g for f, g in scenario.order if g > 0}
    recipes = scenario.recipes
    counts = [math.ceil(demand[r.food] / r.amount) if r.food in demand else 0 for r in recipes]
    by_label = {r.label: i for i, r in enumerate(recipes)}

    # Unordered predecessors: propagate demand along chains until stable.
    for _ in range(len(recipes)):
        derived = [0] * len(recipes)
        for i, r in enumerate(recipes):
            if r.predecessor is not None:
                derived[by_label[r.predecessor]] += counts[i]
        changed = False
        for j, r in enumerate(recipes):
            if r.food not in demand and derived[j] != counts[j]:
                counts[j] = derived[j]
                changed = True
        if not changed:
            break

    return [InstanceSlot(r, i, k) for i, r in enumerate(recipes) for k in range(counts[i])]


# Standard four-circle hob: which physical circles each zone heats.
_HOB_ZONES = {
    1: ({1}, 1),
    2: ({2}, 1),
    3: ({3}, 1),
    4: ({4}, 1),
    5: ({1, 2}, 2),
    6: ({3, 4}, 2),
    7: ({1, 2, 3}, 3),
}


def build_standard_hob(label: str = "Hob") -> tuple[list[Resource], list[frozenset[str]]]:
    """Seven zones of one hob and the pairwise exclusions between them.

    Zones 1-4 are single circles (Pot(1)), 5 and 6 the upper and lower pairs
    (Pot(2)), 7 the three upper circles (Pot(3)).  Two zones exclude each other
    whenever they heat a common circle.
    """
    resources = [Resource(f"{label}({k})", f"Pot({pot})") for k, (_, pot) in _HOB_ZONES.items()]
    groups = []
    for a, (ca, _) in _HOB_ZONES.items():
        for b, (cb, _) in _HOB_ZONES.items():
            if a < b and ca & cb:
                groups.append(frozenset({f"{label}({a})", f"{label}({b})"}))
    return resources, groups


# ---------------------------------------------------------------- file format

_RECORD_SECTIONS = ("recipe", "resource", "exclusion", "override")
_SECTIONS = _RECORD_SECTIONS + ("order", "config")


def _split_list(value: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _number(value: str, line: int, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ScenarioError(f"{key}: expected a number, got {value!r}", line) from None


def _integer(value: str, line: int, key: str) -> int:
    x = _number(value, line, key)
    if not x.is_integer():
        raise ScenarioError(f"{key}: expected an integer, got {value!r}", line)
    return int(x)


def _parse_sections(text: str):
    sections = []  # (name, line, {key: (value, line)})
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ScenarioError(f"unknown section [{name}]", lineno)
            if name in _RECORD_SECTIONS:
                current = (name, lineno, {})
                sections.append(current)
            else:
                existing = [s for s in sections if s[0] == name]
                current = existing[0] if existing else (name, lineno, {})
                if not existing:
                    sections.append(current)
            continue
        if current is None:
            raise ScenarioError("key/value line outside of any section", lineno)
        key, sep, value = line.partition("=")
        if not sep:
            raise ScenarioError(f"expected key=value, got {line!r}", lineno)
        key, value = key.strip(), value.strip()
        if not key:
            raise ScenarioError("empty key", lineno)
        if current[0] != "order":
            key = key.lower()
        if key in current[2]:
            raise ScenarioError(f"duplicate field {key!r}", lineno)
        current[2][key] = (value, lineno)
    return sections


def _need(fields, key, section, line):
    if key not in fields:
        raise ScenarioError(f"[{section}] missing field {key!r}", line)
    return fields[key]


def _build_recipe(fields, line) -> Recipe:
    get = lambda k: _need(fields, k, "recipe", line)  # noqa: E731
    known = {"food", "variant", "predecessor", "amount_g", "zones", "pot",
             "energy_kj", "duration_min", "cost_eur", "deficiency"}
    for k, (_, ln) in fields.items():
        if k not in known:
            raise ScenarioError(f"[recipe] unknown field {k!r}", ln)
    pred = fields.get("predecessor", ("", line))[0]
    return Recipe(
        food=get("food")[0],
        variant=get("variant")[0],
        predecessor=pred if pred and pred != "-" else None,
        amount=_number(*get("amount_g"), "amount_g"),
        zones=_split_list(get("zones")[0]),
        pot=get("pot")[0],
        energy=_number(*get("energy_kj"), "energy_kj"),
        duration=_integer(*get("duration_min"), "duration_min"),
        cost=_number(*get("cost_eur"), "cost_eur"),
        deficiency=_number(*get("deficiency"), "deficiency"),
    )


def _build_override(fields, line) -> ObservableEffect:
    kind = _need(fields, "kind", "override", line)[0].lower()
    get = lambda k: _need(fields, k, "override", line)  # noqa: E731
    if kind == "unavailable":
        return ResourceUnavailable(get("target")[0])
    if kind == "available":
        return ResourceAvailable(get("target")[0])
    if kind == "duration":
        return DurationOverride(get("recipe")[0], get("resource")[0],
                                _integer(*get("start_min"), "start_min"),
                                _integer(*get("end_min"), "end_min"))
    if kind == "quality":
        return QualityUpdate(get("recipe")[0], _number(*get("deficiency"), "deficiency"))
    raise ScenarioError(f"[override] unknown kind {kind!r}", line)


def parse_scenario(text: str) -> Scenario:
    recipes, resources, groups, overrides = [], [], [], []
    order: dict[str, float] = {}
    setup, seed = 10, 0
    for name, line, fields in _parse_sections(text):
        if name == "recipe":
            recipes.append(_build_recipe(fields, line))
        elif name == "resource":
            resources.append(Resource(_need(fields, "zone", name, line)[0],
                                      _need(fields, "pot", name, line)[0]))
        elif name == "exclusion":
            zones = _split_list(_need(fields, "zones", name, line)[0])
            groups.append(frozenset(zones))
        elif name == "override":
            overrides.append(_build_override(fields, line))
        elif name == "order":
            for food, (value, ln) in fields.items():
                order[food] = _number(value, ln, food)
        elif name == "config":
            for k, (value, ln) in fields.items():
                if k == "setup_duration_min":
                    setup = _integer(value, ln, k)
                elif k == "seed":
                    seed = _integer(value, ln, k)
                else:
                    raise ScenarioError(f"[config] unknown field {k!r}", ln)
    return Scenario(
        recipes=tuple(recipes),
        resources=tuple(resources),
        exclusion_groups=tuple(groups),
        order=tuple(order.items()),
        setup_duration=setup,
        overrides=tuple(overrides),
        rng_seed=seed,
    )


def load_scenario(source: Union[str, Path]) -> Scenario:
    """Load from a path, or from document text when ``source`` contains a newline."""
    if isinstance(source, Path) or "\n" not in source:
        try:
            source = Path(source).read_text(encoding="utf-8")
        except OSError as e:
            raise ScenarioError(f"cannot read scenario: {e}") from None
    return parse_scenario(source)


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def dump_scenario(s: Scenario) -> str:
    out = ["[config]", f"setup_duration_min={s.setup_duration}", f"seed={s.rng_seed}", ""]
    for res in s.resources:
        out += ["[resource]", f"zone={res.zone}", f"pot={res.pot}", ""]
    for g in s.exclusion_groups:
        zone_order = {r.zone: i for i, r in enumerate(s.resources)}
        out += ["[exclusion]", "zones=" + ",".join(sorted(g, key=lambda z: (zone_order.get(z, 0), z))), ""]
    for r in s.recipes:
        out += ["[recipe]", f"food={r.food}", f"variant={r.variant}"]
        if r.predecessor:
            out.append(f"predecessor={r.predecessor}")
        out += [f"amount_g={_fmt(r.amount)}", "zones=" + ",".join(r.zones), f"pot={r.pot}",
                f"energy_kj={_fmt(r.energy)}", f"duration_min={r.duration}",
                f"cost_eur={_fmt(r.cost)}", f"deficiency={_fmt(r.deficiency)}", ""]
    out.append("[order]")
    out += [f"{food}={_fmt(g)}" for food, g in s.order]
    out.append("")
    for eff in s.overrides:
        out.append("[override]")
        if isinstance(eff, ResourceUnavailable):
            out += ["kind=unavailable", f"target={eff.target}"]
        elif isinstance(eff, ResourceAvailable):
            out += ["kind=available", f"target={eff.target}"]
        elif isinstance(eff, DurationOverride):
            out += ["kind=duration", f"recipe={eff.recipe}", f"resource={eff.resource}",
                    f"start_min={eff.start}", f"end_min={eff.end}"]
        else:
            out += ["kind=quality", f"recipe={eff.recipe}", f"deficiency={_fmt(eff.deficiency)}"]
        out.append("")
    return "\n".join(out)


# ------------------------------------------------------------ reference data

# food, variant, predecessor, amount g, zone indices, pot, energy kJ, minutes, EUR, deficiency
CATALOG = [
    ("Boiled water", "A", None, 1000, (1, 2, 3, 4), 1, 350, 15, 0.03, 5),
    ("Boiled water", "B", None, 2000, (5, 6), 2, 1400, 10, 0.12, 8),
    ("Boiled water", "C", None, 3000, (7,), 3, 3150, 5, 0.27, 11),
    ("Pasta", "A", "Boiled water A", 100, (1, 2, 3, 4), 1, 840, 30, 0.021, 2),
    ("Pasta", "B", "Boiled water A", 100, (1, 2, 3, 4), 1, 770, 25, 0.018, 9),
    ("Pasta", "C", "Boiled water B", 200, (5, 6), 2, 1120, 20, 0.021, 14),
    ("Pasta", "D", "Boiled water B", 200, (5, 6), 2, 1190, 15, 0.018, 19),
    ("Pasta", "E", "Boiled water C", 300, (7,), 3, 1520, 10, 0.021, 22),
    ("Pasta", "F", "Boiled water C", 300, (7,), 3, 1590, 5, 0.018, 25),
    ("Rice", "A", "Boiled water A", 200, (1, 2, 3, 4), 1, 1260, 50, 0.045, 7),
    ("Rice", "B", "Boiled water A", 200, (1, 2, 3, 4), 1, 1400, 45, 0.039, 15),
    ("Rice", "C", "Boiled water B", 400, (5, 6), 2, 1610, 40, 0.045, 19),
    ("Rice", "D", "Boiled water B", 400, (5, 6), 2, 1750, 35, 0.039, 22),
    ("Rice", "E", "Boiled water C", 600, (7,), 3, 1960, 15, 0.045, 28),
    ("Rice", "F", "Boiled water C", 600, (7,), 3, 2100, 13, 0.039, 33),
    ("Beef", "A", "Boiled water A", 250, (1, 2, 3, 4), 1, 4550, 120, 0.27, 5),
    ("Beef", "B", "Boiled water A", 250, (1, 2, 3, 4), 1, 6650, 110, 0.18, 9),
    ("Beef", "C", "Boiled water B", 500, (5, 6), 2, 6900, 90, 0.27, 12),
    ("Beef", "D", "Boiled water B", 500, (5, 6), 2, 7000, 85, 0.18, 16),
    ("Beef", "E", "Boiled water C", 750, (7,), 3, 7350, 60, 0.27, 21),
    ("Beef", "F", "Boiled water C", 750, (7,), 3, 7550, 55, 0.18, 27),
    ("Potatoes", "A", "Boiled water A", 200, (1, 2, 3, 4), 1, 1750, 42, 0.066, 3),
    ("Potatoes", "B", "Boiled water A", 200, (1, 2, 3, 4), 1, 1890, 40, 0.06, 11),
    ("Potatoes", "C", "Boiled water B", 400, (5, 6), 2, 2100, 32, 0.066, 19),
    ("Potatoes", "D", "Boiled water B", 400, (5, 6), 2, 2240, 30, 0.06, 23),
    ("Potatoes", "E", "Boiled water C", 600, (7,), 3, 2450, 22, 0.066, 26),
    ("Potatoes", "F", "Boiled water C", 600, (7,), 3, 2590, 20, 0.06, 31),
    ("Mushrooms", "A", None, 200, (1, 2, 3, 4), 1, 700, 38, 0.072, 11),
    ("Mushrooms", "B", None, 200, (1, 2, 3, 4), 1, 840, 36, 0.06, 16),
    ("Mushrooms", "C", None, 300, (5, 6), 2, 910, 25, 0.09, 19),
    ("Mushrooms", "D", None, 300, (5, 6), 2, 1050, 23, 0.078, 20),
    ("Mushrooms", "E", None, 400, (7,), 3, 1120, 12, 0.108, 26),
    ("Mushrooms", "F", None, 400, (7,), 3, 1260, 10, 0.096, 29),
]

DEFAULT_ORDER = (
    ("Boiled water", 5000.0),
    ("Pasta", 1000.0),
    ("Rice", 1500.0),
    ("Beef", 1000.0),
    ("Potatoes", 1000.0),
    ("Mushrooms", 500.0),
)


def reference_scenario(hobs: int = 1, order_scale: float = 1.0, seed: int = 42) -> Scenario:
    """The reference recipe catalog on ``hobs`` standard hobs.

    A single hob is labelled ``Hob``; several are ``Hob1``, ``Hob2``, ...
    """
    labels = ["Hob"] if hobs == 1 else [f"Hob{i}" for i in range(1, hobs + 1)]
    resources, groups = [], []
    for lab in labels:
        res, grp = build_standard_hob(lab)
        resources += res
        groups += grp
    recipes = tuple(
        Recipe(food=food, variant=var, predecessor=pred, amount=float(amount),
               zones=tuple(f"{lab}({z})" for lab in labels for z in zones),
               pot=f"Pot({pot})", energy=float(energy), duration=minutes,
               cost=cost, deficiency=float(deficiency))
        for food, var, pred, amount, zones, pot, energy, minutes, cost, deficiency in CATALOG
    )
    order = tuple((f, g * order_scale) for f, g in DEFAULT_ORDER)
    return Scenario(recipes, tuple(resources), tuple(groups), order, 10, (), seed)


def data_path(name: str) -> Path:
    return Path(__file__).parent / "data" / name
