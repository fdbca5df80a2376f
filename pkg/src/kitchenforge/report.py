"""Textual schedule report, its parser, and an ASCII Gantt chart.

Layout::

    Optimisation took: 8.102 seconds
    Schedule: Status: Succeeded.

    Hob(2) Pot(1) -> [
    Rice A 1_1 [0,2),
    Rice A 1 [15,40),
    DependentSetUp from Rice A to Beef A [40,50),
    ...
    ]
    makespan: 03:59:00

Task names title-case the food ("Boiled Water A 0").  Model time is in
minutes; the makespan line renders it as hours:minutes:seconds.
"""
from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from typing import Optional

from .scenario import Scenario
from .twin import MAIN, SETUP, SUBTASK, SUCCEEDED, Schedule, Task


def display_label(label: str) -> str:
    return string.capwords(label)


def format_makespan(minutes: float) -> str:
    total = round(minutes * 60)
    h, rem = divmod(total, 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}"


def _num(x) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def _task_line(t: Task) -> str:
    if t.kind == SETUP:
        name = f"DependentSetUp from {display_label(t.setup_from)} to {display_label(t.recipe)}"
    elif t.kind == SUBTASK:
        name = display_label(t.slot) + "_1"
    else:
        name = display_label(t.slot)
    return f"{name} [{_num(t.start)},{_num(t.end)})"


def render_report(schedule: Schedule, objectives=None, wall_time: Optional[float] = None) -> str:
    """Deterministic report text.  ``wall_time`` None omits the timing line."""
    lines = []
    if wall_time is not None:
        lines.append(f"Optimisation took: {wall_time:.3f} seconds")
    if schedule.status == SUCCEEDED:
        lines.append("Schedule: Status: Succeeded.")
    else:
        lines.append(f"Schedule: Status: {schedule.status} ({schedule.reason}).")
    for res in sorted(schedule.tasks):
        tasks = sorted(schedule.tasks[res], key=lambda t: (t.start, t.end))
        if not tasks:
            continue
        lines.append("")
        lines.append(f"{res} -> [")
        body = [_task_line(t) for t in tasks]
        lines += [b + "," for b in body[:-1]] + body[-1:]
        lines.append("]")
    makespan = objectives.makespan if objectives is not None else schedule.makespan
    lines.append(f"makespan: {format_makespan(makespan)}")
    return "\n".join(lines) + "\n"


@dataclass
class ReportEntry:
    name: str
    start: float
    end: float


@dataclass
class ParsedReport:
    wall_time: Optional[float]
    status: str
    reason: Optional[str]
    blocks: dict[str, list[ReportEntry]] = field(default_factory=dict)
    makespan_seconds: int = 0


class ReportParseError(ValueError):
    pass


_ENTRY_RE = re.compile(r"^(?P<name>.+?) \[(?P<s>[-\d.]+),\s*(?P<e>[-\d.]+)\),?$")
_STATUS_RE = re.compile(r"^Schedule: Status: (?P<st>\w+)(?: \((?P<reason>[^)]*)\))?\.$")


def parse_report(text: str) -> ParsedReport:
    wall = None
    status = reason = None
    blocks: dict[str, list[ReportEntry]] = {}
    current = None
    makespan = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("Optimisation took:"):
            m = re.match(r"Optimisation took: ([\d.]+) seconds$", line)
            if not m:
                raise ReportParseError(f"line {n}: bad timing line")
            wall = float(m.group(1))
        elif line.startswith("Schedule:"):
            m = _STATUS_RE.match(line)
            if not m:
                raise ReportParseError(f"line {n}: bad status line")
            status, reason = m.group("st"), m.group("reason")
        elif line.endswith("-> ["):
            current = line[:-4].strip()
            blocks[current] = []
        elif line == "]":
            current = None
        elif line.startswith("makespan:"):
            m = re.match(r"makespan: (\d+):(\d{2}):(\d{2})$", line)
            if not m:
                raise ReportParseError(f"line {n}: bad makespan line")
            h, mi, s = map(int, m.groups())
            makespan = h * 3600 + mi * 60 + s
        elif current is not None:
            m = _ENTRY_RE.match(line)
            if not m:
                raise ReportParseError(f"line {n}: bad task line {line!r}")
            blocks[current].append(ReportEntry(m.group("name"), float(m.group("s")), float(m.group("e"))))
        else:
            raise ReportParseError(f"line {n}: unexpected {line!r}")
    if status is None or makespan is None:
        raise ReportParseError("report lacks a status or makespan line")
    return ParsedReport(wall, status, reason, blocks, makespan)


def report_to_schedule(parsed: ParsedReport, scenario: Scenario) -> Schedule:
    """Rebuild a Schedule, resolving display names against the scenario."""
    labels = {r.label.casefold(): r.label for r in scenario.recipes}

    def recipe_of(slot_name: str) -> str:
        return labels[slot_name.rsplit(" ", 1)[0].casefold()]

    def slot_of(name: str) -> str:
        rec, _, idx = name.rpartition(" ")
        return f"{labels[rec.casefold()]} {idx}"

    sched = Schedule(status=parsed.status, reason=parsed.reason)
    for res_name, entries in parsed.blocks.items():
        res = scenario.resource(res_name).display_name
        tasks = []
        for e in entries:
            start, end = _as_time(e.start), _as_time(e.end)
            if e.name.startswith("DependentSetUp from "):
                m = re.match(r"DependentSetUp from (.+) to (.+)$", e.name)
                a, b = labels[m.group(1).casefold()], labels[m.group(2).casefold()]
                # a setup belongs to the next main task on the resource
                tasks.append(Task("", SETUP, res, start, end, b, a))
            elif e.name.endswith("_1"):
                slot = slot_of(e.name[:-2])
                tasks.append(Task(slot, SUBTASK, res, start, end, recipe_of(slot)))
            else:
                slot = slot_of(e.name)
                tasks.append(Task(slot, MAIN, res, start, end, recipe_of(slot)))
        # give setups the slot of the following main task
        for k, t in enumerate(tasks):
            if t.kind == SETUP:
                nxt = next((u for u in tasks[k + 1:] if u.kind == MAIN), None)
                if nxt is not None:
                    tasks[k] = Task(nxt.slot, SETUP, res, t.start, t.end, t.recipe, t.setup_from)
        sched.tasks[res] = tasks
    return sched


def _as_time(x: float):
    return int(x) if float(x).is_integer() else x


def render_parsed(parsed: ParsedReport) -> str:
    lines = []
    if parsed.wall_time is not None:
        lines.append(f"Optimisation took: {parsed.wall_time:.3f} seconds")
    if parsed.reason:
        lines.append(f"Schedule: Status: {parsed.status} ({parsed.reason}).")
    else:
        lines.append(f"Schedule: Status: {parsed.status}.")
    for res in sorted(parsed.blocks):
        entries = parsed.blocks[res]
        if not entries:
            continue
        lines += ["", f"{res} -> ["]
        body = [f"{e.name} [{_num(e.start)},{_num(e.end)})" for e in entries]
        lines += [b + "," for b in body[:-1]] + body[-1:]
        lines.append("]")
    h, rem = divmod(parsed.makespan_seconds, 3600)
    m, s = divmod(rem, 60)
    lines.append(f"makespan: {h:02d}:{m:02d}:{s:02d}")
    return "\n".join(lines) + "\n"


def render_gantt(schedule: Schedule, width: int = 72) -> str:
    """One row per resource: '#' main task, '-' subtask, '~' setup, '.' idle."""
    horizon = schedule.makespan
    rows = sorted(r for r, ts in schedule.tasks.items() if ts)
    if horizon <= 0 or not rows:
        return "(empty schedule)\n"
    scale = width / horizon
    pad = max(len(r) for r in rows)
    glyph = {MAIN: "#", SUBTASK: "-", SETUP: "~"}
    out = [f"{'':{pad}} 0{'':{width - len(str(horizon)) - 1}}{horizon} min"]
    for r in rows:
        cells = ["."] * width
        for t in schedule.tasks[r]:
            a = int(t.start * scale)
            b = max(a + 1, int(round(t.end * scale)))
            for k in range(a, min(b, width)):
                cells[k] = glyph[t.kind]
        out.append(f"{r:{pad}} |{''.join(cells)}|")
    out.append("")
    out.append("legend: # main task, - pre-cooking subtask, ~ dependent setup, . idle")
    for r in rows:
        out.append("")
        out.append(f"{r}:")
        for t in sorted(schedule.tasks[r], key=lambda t: t.start):
            out.append(f"  {_num(t.start):>6}-{_num(t.end):<6} {t.label}")
    return "\n".join(out) + "\n"
