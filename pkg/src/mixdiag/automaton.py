"""Passive learning of a timed automaton from event traces.

States are identified by their full actuator vector, so revisiting a vector
revisits the state.  Each transition keeps the observed dwell-time envelope
``[t_min_s, t_max_s]`` plus running mean and a Welford M2 accumulator for
the variance.  Learning is an online fold: :meth:`TimedAutomaton.update`
consumes one trace step and either extends the structure or tightens the
statistics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import MixdiagError, ParseError
from .events import ActuatorVector, Event, EventTrace, parse_label

_STAT_SLACK = 1e-9


class InconsistentTraces(MixdiagError):
    """Traces disagree on actuator ids or initial vector."""


class DeterminismViolation(MixdiagError):
    """A step contradicts the event-determinism invariant."""


@dataclass(frozen=True)
class State:
    id: int
    vector: ActuatorVector
    is_initial: bool


@dataclass
class Transition:
    source: int
    event_label: str
    target: int
    t_min_s: float
    t_max_s: float
    mean_s: float
    m2_s2: float
    count: int

    def stddev_s(self) -> float:
        if self.count < 1:
            return 0.0
        return (self.m2_s2 / self.count) ** 0.5


@dataclass(frozen=True)
class _UpdateRecord:
    new_state: bool
    new_transition: bool
    bound_shift_s: float


class TimedAutomaton:
    """A deterministic timed automaton with one initial state."""

    def __init__(self, initial_vector: ActuatorVector):
        initial = State(0, initial_vector, True)
        self.states: dict[int, State] = {0: initial}
        self.transitions: dict[tuple[int, str], Transition] = {}
        self.alphabet: set[str] = set()
        self._by_vector: dict[ActuatorVector, int] = {initial_vector: 0}
        self._updates: list[_UpdateRecord] = []

    # -- structure ---------------------------------------------------------

    def initial_state(self) -> State:
        return next(s for s in self.states.values() if s.is_initial)

    def state_id_for(self, vector: ActuatorVector) -> int | None:
        return self._by_vector.get(vector)

    def actuator_ids(self) -> tuple[str, ...]:
        return self.initial_state().vector.ids()

    def _add_state(self, vector: ActuatorVector) -> int:
        sid = max(self.states) + 1
        self.states[sid] = State(sid, vector, False)
        self._by_vector[vector] = sid
        return sid

    # -- learning ----------------------------------------------------------

    def update(
        self, current_state: int, event: Event, new_vector: ActuatorVector, dwell_s: float
    ) -> int:
        """Fold one observed step into the automaton; returns the state the
        step lands in."""
        if current_state not in self.states:
            raise MixdiagError(f"unknown state id {current_state}")
        if dwell_s <= 0:
            raise ValueError("dwell_s must be positive")
        source = self.states[current_state]
        changes = parse_label(event.label)
        current_values = source.vector.as_dict()
        for aid, value in changes.items():
            if aid not in current_values:
                raise DeterminismViolation(
                    f"label {event.label!r} references unknown actuator {aid!r}"
                )
            if current_values[aid] == value:
                raise DeterminismViolation(
                    f"label {event.label!r} does not flip {aid!r} in state {current_state}"
                )
        if source.vector.apply(changes) != new_vector:
            raise DeterminismViolation(
                f"label {event.label!r} applied to state {current_state} "
                f"does not produce the recorded vector"
            )

        key = (current_state, event.label)
        transition = self.transitions.get(key)
        new_state = new_transition = False
        shift = 0.0
        if transition is None:
            target = self._by_vector.get(new_vector)
            if target is None:
                target = self._add_state(new_vector)
                new_state = True
            self.transitions[key] = Transition(
                current_state, event.label, target, dwell_s, dwell_s, dwell_s, 0.0, 1
            )
            self.alphabet.add(event.label)
            new_transition = True
        else:
            target = transition.target
            assert self.states[target].vector == new_vector  # implied by label determinism
            if dwell_s < transition.t_min_s:
                shift = transition.t_min_s - dwell_s
                transition.t_min_s = dwell_s
            elif dwell_s > transition.t_max_s:
                shift = dwell_s - transition.t_max_s
                transition.t_max_s = dwell_s
            transition.count += 1
            delta = dwell_s - transition.mean_s
            transition.mean_s += delta / transition.count
            transition.m2_s2 += delta * (dwell_s - transition.mean_s)
        self._updates.append(_UpdateRecord(new_state, new_transition, shift))
        return target

    def has_converged(self, window: int, epsilon_s: float) -> bool:
        """True when the last ``window`` updates created nothing new and no
        dwell bound moved by more than ``epsilon_s``."""
        if window < 1:
            raise ValueError("window must be >= 1")
        if len(self._updates) < window:
            return False
        recent = self._updates[-window:]
        return not any(r.new_state or r.new_transition for r in recent) and all(
            r.bound_shift_s <= epsilon_s for r in recent
        )

    # -- comparison helpers --------------------------------------------------

    def state_set(self) -> set[tuple[tuple[tuple[str, bool], ...], bool]]:
        return {(s.vector.signals, s.is_initial) for s in self.states.values()}

    def transition_stats(self) -> dict:
        """Structure keyed by (source vector, label), independent of the
        numeric state ids assigned during learning."""
        out = {}
        for t in self.transitions.values():
            key = (self.states[t.source].vector.signals, t.event_label)
            out[key] = (
                self.states[t.target].vector.signals,
                t.t_min_s,
                t.t_max_s,
                t.mean_s,
                t.m2_s2,
                t.count,
            )
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimedAutomaton):
            return NotImplemented
        return (
            self.states == other.states
            and self.transitions == other.transitions
            and self.alphabet == other.alphabet
        )


def learn(traces: list[EventTrace]) -> TimedAutomaton:
    """Learn an automaton by folding every step of every trace.

    All traces must share the actuator-id set and the initial vector.
    """
    if not traces:
        raise InconsistentTraces("no traces given")
    first = traces[0]
    for trace in traces[1:]:
        if trace.actuator_ids() != first.actuator_ids():
            raise InconsistentTraces("traces disagree on actuator ids")
        if trace.initial_vector != first.initial_vector:
            raise InconsistentTraces("traces disagree on the initial vector")
    automaton = TimedAutomaton(first.initial_vector)
    for trace in traces:
        current = 0
        for step in trace.steps:
            current = automaton.update(current, step.event, step.resulting_vector, step.dwell_s)
    return automaton


def _from_parts(
    states: list[State], transitions: list[Transition], alphabet: set[str]
) -> TimedAutomaton:
    """Assemble and validate an automaton from raw parts.

    Raises ValueError with a message; callers wrap it into their own error
    type (ParseError for JSON, MalformedAnnotation for graphs).
    """
    if not states:
        raise ValueError("automaton needs at least one state")
    ids = [s.id for s in states]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate state id")
    initials = [s for s in states if s.is_initial]
    if len(initials) != 1:
        raise ValueError(f"expected exactly one initial state, found {len(initials)}")
    vectors = [s.vector for s in states]
    if len(set(vectors)) != len(vectors):
        raise ValueError("duplicate state vector")
    id_set = set(ids)
    key_set = set()
    for t in transitions:
        if t.source not in id_set or t.target not in id_set:
            raise ValueError(f"transition {t.source}->{t.target} references unknown state")
        key = (t.source, t.event_label)
        if key in key_set:
            raise ValueError(f"duplicate transition for {key}")
        key_set.add(key)
        if t.count < 1:
            raise ValueError("transition count must be >= 1")
        if not (
            t.t_min_s - _STAT_SLACK <= t.mean_s <= t.t_max_s + _STAT_SLACK
        ) or t.t_min_s > t.t_max_s:
            raise ValueError("transition timing statistics are inconsistent")
    if not alphabet >= {t.event_label for t in transitions}:
        raise ValueError("alphabet does not cover all transition labels")

    automaton = TimedAutomaton.__new__(TimedAutomaton)
    automaton.states = {s.id: s for s in sorted(states, key=lambda s: s.id)}
    automaton.transitions = {
        (t.source, t.event_label): t
        for t in sorted(transitions, key=lambda t: (t.source, t.event_label))
    }
    automaton.alphabet = set(alphabet)
    automaton._by_vector = {s.vector: s.id for s in states}
    automaton._updates = []
    return automaton


def serialize(automaton: TimedAutomaton) -> str:
    """Canonical JSON: sorted keys, states by id, transitions by
    (source, label).  ``deserialize(serialize(a)) == a``."""
    doc = {
        "alphabet": sorted(automaton.alphabet),
        "states": [
            {
                "id": s.id,
                "is_initial": s.is_initial,
                "vector": s.vector.as_dict(),
            }
            for s in sorted(automaton.states.values(), key=lambda s: s.id)
        ],
        "transitions": [
            {
                "source": t.source,
                "event_label": t.event_label,
                "target": t.target,
                "t_min_s": t.t_min_s,
                "t_max_s": t.t_max_s,
                "mean_s": t.mean_s,
                "m2_s2": t.m2_s2,
                "count": t.count,
            }
            for t in sorted(automaton.transitions.values(), key=lambda t: (t.source, t.event_label))
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def deserialize(text: str) -> TimedAutomaton:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    try:
        states = [
            State(
                int(s["id"]),
                ActuatorVector.from_mapping(s["vector"]),
                bool(s["is_initial"]),
            )
            for s in doc["states"]
        ]
        transitions = [
            Transition(
                int(t["source"]),
                str(t["event_label"]),
                int(t["target"]),
                float(t["t_min_s"]),
                float(t["t_max_s"]),
                float(t["mean_s"]),
                float(t["m2_s2"]),
                int(t["count"]),
            )
            for t in doc["transitions"]
        ]
        alphabet = {str(label) for label in doc.get("alphabet", [])}
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ParseError(f"bad automaton document: {exc}") from None
    id_vectors = {s.id: s.vector.ids() for s in states}
    if len({v for v in id_vectors.values()}) > 1:
        raise ParseError("states disagree on the actuator-id set")
    try:
        return _from_parts(states, transitions, alphabet)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
