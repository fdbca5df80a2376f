"""Metrics API records: parser, serializer and observable interpretation.

Grammar (whitespace between tokens is insignificant, runs of whitespace inside
a value collapse to one space)::

    record    := HEAD '[' fields ']' [',']
    HEAD      := 'ControlledMetricType' | 'ObservableMetricType' | 'KeyObjectiveType'
    fields    := field (',' field)*
    field     := key '=' value
    value     := TYPE '[' fields? ']' | '{' item (',' item)* '}' | text

A comma-separated piece without '=' continues the previous plain value, so a
name wrapped as ``name=Boiled water A 0,\\nallocation`` reads as
``Boiled water A 0 allocation``.  Printed listings sometimes drop the record's
final ``]``; that is accepted only when the record already carries ``name``
and ``valueType`` (``parse_record(..., strict=True)`` refuses it).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .scenario import (
    NO_ALLOCATION,
    DurationOverride,
    ResourceAvailable,
    ResourceUnavailable,
    Scenario,
    expand_instances,
)

CONTROLLED = "ControlledMetricType"
OBSERVABLE = "ObservableMetricType"
KEY_OBJECTIVE = "KeyObjectiveType"
HEADS = (CONTROLLED, OBSERVABLE, KEY_OBJECTIVE)


class MetricParseError(ValueError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class UnbalancedBracketError(MetricParseError):
    pass


class UnmappedObservableError(ValueError):
    """Observable name outside the known patterns (a protocol extension)."""


@dataclass(frozen=True)
class NominalType:
    name: str
    values: tuple[str, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("nominal type needs at least one value")


@dataclass(frozen=True)
class IntegerType:
    min: int
    max: int

    def __post_init__(self):
        if self.min > self.max:
            raise ValueError(f"integer type with min {self.min} > max {self.max}")


@dataclass(frozen=True)
class MetricRecord:
    kind: str
    name: str
    value_type: Union[NominalType, IntegerType]
    units: str = "n/a"
    event_driven: bool = False

    def __post_init__(self):
        if self.kind not in HEADS:
            raise ValueError(f"unknown record kind {self.kind!r}")
        if not self.name:
            raise ValueError("record name must be non-empty")


def _norm(text: str) -> str:
    return " ".join(text.split())


def _canon_value(v: str) -> str:
    v = _norm(v)
    return NO_ALLOCATION if v.casefold() == NO_ALLOCATION.casefold() else v


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        # byte offsets for error messages
        self._bytes = [0]
        for ch in text:
            self._bytes.append(self._bytes[-1] + len(ch.encode("utf-8")))

    def offset(self, pos: Optional[int] = None) -> int:
        return self._bytes[self.pos if pos is None else pos]

    def error(self, msg, pos=None, cls=MetricParseError):
        raise cls(msg, self.offset(pos))

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def ident(self) -> str:
        self.skip_ws()
        m = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*").match(self.text, self.pos)
        if not m:
            self.error("expected an identifier")
        self.pos = m.end()
        return m.group()

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def text_until(self, stops: str) -> str:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in stops:
            if self.text[self.pos] in "[{":
                self.error("unexpected opening bracket in plain value")
            self.pos += 1
        return self.text[start:self.pos]

    def fields(self, open_pos: int, lenient: bool, required=()) -> dict:
        """Parse ``key=value`` pairs up to the matching ']'."""
        out: dict = {}
        last_key = None
        if self.peek() == "]":
            self.pos += 1
            return out
        while True:
            if self.at_end():
                if lenient and all(k in out for k in required):
                    return out
                self.error("unbalanced '['", open_pos, UnbalancedBracketError)
            start = self.pos
            piece = self.text_until("=,]")
            if self.pos < len(self.text) and self.text[self.pos] == "=":
                key = _norm(piece)
                if not key:
                    self.error("empty field name", start)
                if key in out:
                    self.error(f"duplicate field {key!r}", start)
                self.pos += 1
                out[key] = self.value(key)
                last_key = key
            else:
                # continuation of a wrapped plain value
                if last_key is None or not isinstance(out[last_key], str):
                    self.error("field without '='", start)
                if _norm(piece):
                    out[last_key] = out[last_key] + " " + piece
            if self.at_end():
                continue
            ch = self.text[self.pos]
            self.pos += 1
            if ch == "]":
                return out

    def value(self, key: str):
        self.skip_ws()
        if self.peek() == "{":
            open_pos = self.pos
            self.pos += 1
            items = []
            while True:
                if self.at_end():
                    self.error("unbalanced '{'", open_pos, UnbalancedBracketError)
                items.append(self.text_until(",}"))
                if self.pos >= len(self.text):
                    self.error("unbalanced '{'", open_pos, UnbalancedBracketError)
                ch = self.text[self.pos]
                self.pos += 1
                if ch == "}":
                    return tuple(_canon_value(v) for v in items if _norm(v))
        m = re.compile(r"(ValueType\.\w+|SampleRate\.\w+)\s*\[").match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return (m.group(1), self.fields(m.end() - 1, lenient=False))
        return self.text_until(",]")


def _int(value, key, parser, pos):
    try:
        return int(_norm(value))
    except (TypeError, ValueError):
        parser.error(f"{key}: expected an integer", pos)


def parse_record(text: str, strict: bool = False) -> MetricRecord:
    p = _Parser(text)
    head = p.ident()
    if head not in HEADS:
        p.error(f"unknown record head {head!r}", 0)
    p.skip_ws()
    open_pos = p.pos
    p.expect("[")
    fields = p.fields(open_pos, lenient=not strict, required=("name", "valueType"))
    p.skip_ws()
    if p.peek() == ",":
        p.pos += 1
    if not p.at_end():
        p.error("trailing text after record")

    for key in ("name", "valueType"):
        if key not in fields:
            p.error(f"missing required field {key!r}", 0)
    unknown = set(fields) - {"name", "valueType", "units", "sampleRate"}
    if unknown:
        p.error(f"unknown field(s) {sorted(unknown)}", 0)

    vt = fields["valueType"]
    if not isinstance(vt, tuple) or len(vt) != 2 or not isinstance(vt[1], dict):
        p.error("valueType must be a ValueType[...] value", 0)
    tname, tfields = vt
    if tname == "ValueType.Nominal":
        if "values" not in tfields or not isinstance(tfields["values"], tuple):
            p.error("nominal valueType needs values={...}", 0)
        if tfields.get("typ", "NOMINAL").strip() != "NOMINAL":
            p.error("nominal valueType must have typ=NOMINAL", 0)
        value_type = NominalType(_norm(tfields.get("name", "")), tfields["values"])
    elif tname == "ValueType.Integer":
        for k in ("min", "max"):
            if k not in tfields:
                p.error(f"integer valueType missing {k!r}", 0)
        if tfields.get("typ", "INT").strip() != "INT":
            p.error("integer valueType must have typ=INT", 0)
        value_type = IntegerType(_int(tfields["min"], "min", p, 0), _int(tfields["max"], "max", p, 0))
    else:
        p.error(f"unknown value type {tname!r}", 0)

    event_driven = False
    if "sampleRate" in fields:
        sr = fields["sampleRate"]
        if sr != ("SampleRate.EventDriven", {}):
            p.error("unsupported sampleRate", 0)
        event_driven = True
    units = _norm(fields.get("units", "")) or "n/a"
    if not isinstance(fields["name"], str):
        p.error("name must be plain text", 0)
    name = _norm(fields["name"])
    if not name:
        p.error("record name must be non-empty", 0)
    return MetricRecord(head, name, value_type, units, event_driven)


_HEAD_RE = re.compile(r"(?<![A-Za-z0-9_.])(?:%s)\s*\[" % "|".join(HEADS))


def parse_records(text: str, strict: bool = False) -> list[MetricRecord]:
    """Parse a listing of consecutive records (one or many per line)."""
    starts = [m.start() for m in _HEAD_RE.finditer(text)]
    if not starts and text.strip():
        raise MetricParseError("no metric record found", 0)
    if starts and text[:starts[0]].strip():
        raise MetricParseError("text before first record", 0)
    bounds = starts + [len(text)]
    return [parse_record(text[a:b], strict=strict) for a, b in zip(bounds, bounds[1:])]


def serialize_record(record: MetricRecord) -> str:
    vt = record.value_type
    if isinstance(vt, NominalType):
        values = ", ".join(vt.values)
        type_text = f"ValueType.Nominal[name={vt.name},values={{{values}}},typ=NOMINAL]"
    else:
        type_text = f"ValueType.Integer[min={vt.min},max={vt.max},typ=INT]"
    out = f"{record.kind}[name={record.name},valueType={type_text},units={record.units or 'n/a'}"
    if record.event_driven:
        out += ",sampleRate=SampleRate.EventDriven[]"
    return out + "]"


# ---------------------------------------------------------------- observables

_AVAIL_RE = re.compile(r"^(?P<target>.+) availability$")
_TIMING_RE = re.compile(r"^(?P<recipe>.+) (?P<zone>\S+) (?P<pot>\S+) (?P<half>start|end)$")


def _point_value(record: MetricRecord) -> int:
    vt = record.value_type
    if not isinstance(vt, IntegerType) or vt.min != vt.max:
        raise UnmappedObservableError(f"{record.name!r}: expected a single integer value")
    return vt.min


class ObservableInterpreter:
    """Turns observable records into effects, pairing start/end halves by key."""

    def __init__(self):
        self.pending: dict[str, dict[str, int]] = {}

    def feed(self, record: MetricRecord):
        """Return the completed effect, or None while a timing pair is half-seen."""
        if record.kind != OBSERVABLE:
            raise UnmappedObservableError(f"{record.name!r} is not an observable metric")
        m = _AVAIL_RE.match(record.name)
        if m:
            value = _point_value(record)
            target = m.group("target")
            return ResourceUnavailable(target) if value == 0 else ResourceAvailable(target)
        m = _TIMING_RE.match(record.name)
        if m:
            key = f"{m.group('recipe')} {m.group('zone')} {m.group('pot')}"
            halves = self.pending.setdefault(key, {})
            halves[m.group("half")] = _point_value(record)
            if "start" in halves and "end" in halves:
                del self.pending[key]
                return DurationOverride(m.group("recipe"), f"{m.group('zone')} {m.group('pot')}",
                                        halves["start"], halves["end"])
            return None
        raise UnmappedObservableError(f"no interpretation for observable {record.name!r}")


def interpret_observable(record: MetricRecord, interpreter: Optional[ObservableInterpreter] = None):
    return (interpreter or ObservableInterpreter()).feed(record)


def apply_effects(scenario: Scenario, effects) -> Scenario:
    """New scenario with ``effects`` appended; raises ScenarioError on unknown references."""
    return scenario.with_effects(e for e in effects if e is not None)


def controlled_metrics_for(scenario: Scenario) -> list[MetricRecord]:
    records = []
    for slot in expand_instances(scenario):
        domain = [r.display_name for r in scenario.compatible_resources(slot.recipe)]
        name = f"{slot.name} allocation"
        records.append(MetricRecord(CONTROLLED, name, NominalType(f"{name} type", tuple(domain) + (NO_ALLOCATION,))))
    return records
