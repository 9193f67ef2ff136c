"""Event logs: CSV parsing and conversion into timed event traces.

A trace is the actuator-level view of a run: the starting signal vector plus
one step per vector change.  Simultaneous signal changes (equal timestamps,
or within ``merge_window_s`` for noisy logs) merge into a single event whose
label lists the flipped signals in id order, e.g. ``V201↓,V202↑``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import MixdiagError, ParseError
from .plant import LOG_HEADER, ActuatorRecord, PlantConfig, SensorRecord, SimulationLog

RISE = "↑"
FALL = "↓"


class EmptyLog(MixdiagError):
    """The log holds no actuator records, so no trace can be built."""


@dataclass(frozen=True)
class ActuatorVector:
    """A full assignment of boolean values to every actuator id.

    Stored as id-sorted pairs so vectors hash and compare canonically.
    """

    signals: tuple[tuple[str, bool], ...]

    @classmethod
    def from_mapping(cls, values: Mapping[str, bool]) -> "ActuatorVector":
        return cls(tuple(sorted((str(k), bool(v)) for k, v in values.items())))

    def as_dict(self) -> dict[str, bool]:
        return dict(self.signals)

    def ids(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.signals)

    def active(self) -> tuple[str, ...]:
        return tuple(k for k, v in self.signals if v)

    def apply(self, changes: Mapping[str, bool]) -> "ActuatorVector":
        values = self.as_dict()
        for key, value in changes.items():
            if key not in values:
                raise MixdiagError(f"unknown actuator id {key!r} in change set")
            values[key] = bool(value)
        return ActuatorVector.from_mapping(values)

    def __str__(self) -> str:
        on = self.active()
        return "{" + ",".join(on) + "}" if on else "{}"


def build_label(changes: Mapping[str, bool]) -> str:
    if not changes:
        raise MixdiagError("an event needs at least one signal change")
    return ",".join(f"{aid}{RISE if value else FALL}" for aid, value in sorted(changes.items()))


def parse_label(label: str) -> dict[str, bool]:
    changes: dict[str, bool] = {}
    for part in label.split(","):
        if len(part) < 2 or part[-1] not in (RISE, FALL):
            raise MixdiagError(f"malformed event label part {part!r}")
        aid = part[:-1]
        if aid in changes:
            raise MixdiagError(f"duplicate actuator {aid!r} in label {label!r}")
        changes[aid] = part[-1] == RISE
    return changes


@dataclass(frozen=True)
class Event:
    label: str
    t_s: float


@dataclass(frozen=True)
class TraceStep:
    """One vector change.  ``dwell_s`` is the time spent in the previous
    vector before this event fired."""

    event: Event
    resulting_vector: ActuatorVector
    dwell_s: float


@dataclass(frozen=True)
class EventTrace:
    initial_vector: ActuatorVector
    steps: tuple[TraceStep, ...]

    def actuator_ids(self) -> tuple[str, ...]:
        return self.initial_vector.ids()


def parse_log(csv_text: str) -> SimulationLog:
    """Parse the record CSV.  Raises :class:`ParseError` with the offending
    line number on malformed input."""
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header", 1) from None
    if tuple(header) != LOG_HEADER:
        raise ParseError(f"bad header {header!r}", 1)

    actuator_records: list[ActuatorRecord] = []
    sensor_records: list[SensorRecord] = []
    prev_ms = None
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue  # tolerate blank lines
        if len(row) != 4:
            raise ParseError(f"expected 4 columns, got {len(row)}", line_no)
        raw_t, kind, rid, raw_value = row
        try:
            t_s = float(raw_t)
        except ValueError:
            raise ParseError(f"bad timestamp {raw_t!r}", line_no) from None
        t_ms = round(t_s * 1000)
        if prev_ms is not None and t_ms < prev_ms:
            raise ParseError("timestamps not sorted", line_no)
        prev_ms = t_ms
        if not rid:
            raise ParseError("empty record id", line_no)
        if kind == "actuator":
            if raw_value not in ("0", "1"):
                raise ParseError(f"actuator value must be 0 or 1, got {raw_value!r}", line_no)
            actuator_records.append(ActuatorRecord(t_ms / 1000.0, rid, raw_value == "1"))
        elif kind == "sensor":
            try:
                value = float(raw_value)
            except ValueError:
                raise ParseError(f"bad sensor value {raw_value!r}", line_no) from None
            sensor_records.append(SensorRecord(t_ms / 1000.0, rid, value))
        else:
            raise ParseError(f"unknown record kind {kind!r}", line_no)
    return SimulationLog(actuator_records, sensor_records, {})


def to_trace(
    log: SimulationLog,
    config_or_ids: PlantConfig | Iterable[str],
    merge_window_s: float = 0.0,
) -> EventTrace:
    """Build an event trace from a log.

    The earliest group of actuator records establishes the initial vector on
    an all-off base; every later group becomes one step.  Records that
    restate the current value are dropped, and a group consisting only of
    such records produces no event.
    """
    if isinstance(config_or_ids, PlantConfig):
        ids = sorted(config_or_ids.actuator_ids())
    else:
        ids = sorted(set(config_or_ids))
    if not ids:
        raise MixdiagError("no actuator ids supplied")
    if not log.actuator_records:
        raise EmptyLog("log contains no actuator records")
    known = set(ids)
    for r in log.actuator_records:
        if r.actuator_id not in known:
            raise MixdiagError(f"log references unknown actuator {r.actuator_id!r}")

    merge_ms = round(merge_window_s * 1000)
    groups: list[tuple[int, dict[str, bool]]] = []
    for r in log.actuator_records:
        t_ms = round(r.t_s * 1000)
        if groups and t_ms - groups[-1][0] <= merge_ms:
            groups[-1][1][r.actuator_id] = r.value  # last value wins inside a group
        else:
            groups.append((t_ms, {r.actuator_id: r.value}))

    base = {aid: False for aid in ids}
    base.update(groups[0][1])
    vector = ActuatorVector.from_mapping(base)
    initial = vector
    prev_ms = groups[0][0]

    steps: list[TraceStep] = []
    for t_ms, values in groups[1:]:
        current = vector.as_dict()
        changes = {aid: v for aid, v in values.items() if current[aid] != v}
        if not changes:
            continue
        vector = vector.apply(changes)
        steps.append(
            TraceStep(
                Event(build_label(changes), t_ms / 1000.0),
                vector,
                (t_ms - prev_ms) / 1000.0,
            )
        )
        prev_ms = t_ms
    return EventTrace(initial, tuple(steps))


def split_cycles(trace: EventTrace, idle_vector: ActuatorVector) -> list[EventTrace]:
    """Split a trace at entries into ``idle_vector``.

    Each segment starts in the idle vector (or in the trace's own initial
    vector for a leading segment).  Concatenating the segments' steps gives
    back the original step sequence.  If the idle vector never occurs the
    whole trace is returned as the only segment.
    """
    if not trace.steps:
        return [trace]
    boundaries = [0] if trace.initial_vector == idle_vector else []
    for i, step in enumerate(trace.steps):
        if step.resulting_vector == idle_vector and i + 1 < len(trace.steps):
            boundaries.append(i + 1)
    if not boundaries:
        return [trace]
    if boundaries[0] != 0:
        boundaries.insert(0, 0)
    segments = []
    for pos, start in enumerate(boundaries):
        end = boundaries[pos + 1] if pos + 1 < len(boundaries) else len(trace.steps)
        start_vector = (
            trace.initial_vector if start == 0 else trace.steps[start - 1].resulting_vector
        )
        segments.append(EventTrace(start_vector, trace.steps[start:end]))
    return segments
