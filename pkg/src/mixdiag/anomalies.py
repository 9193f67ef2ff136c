"""Timing and behavior anomaly detection against a learned automaton.

The detector replays an event trace through the automaton.  Dwell times
outside a transition's learned envelope raise timing anomalies; unknown
events and unknown vectors raise behavior anomalies.  The reported
``deviation_s`` is always measured against the raw learned bound; the
tolerance only decides whether an anomaly is emitted at all.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, asdict

from .automaton import TimedAutomaton
from .errors import ParseError
from .events import EventTrace

log = logging.getLogger(__name__)

TIMING_ABOVE_MAX = "TimingAboveMax"
TIMING_BELOW_MIN = "TimingBelowMin"
UNKNOWN_EVENT = "UnknownEvent"
UNKNOWN_STATE = "UnknownState"

TIMING_KINDS = (TIMING_ABOVE_MAX, TIMING_BELOW_MIN)


@dataclass(frozen=True)
class DetectionSettings:
    """Tolerance settings.  The effective tolerance for a bound ``b`` is
    ``max(abs_tol_s, rel_tol * b)``."""

    abs_tol_s: float = 0.5
    rel_tol: float = 0.10

    def tolerance_for(self, bound_s: float) -> float:
        return max(self.abs_tol_s, self.rel_tol * bound_s)


@dataclass(frozen=True)
class Anomaly:
    """One detected deviation.

    ``source_state``/``target_state`` are automaton state ids; the target is
    absent for UnknownState, and the source is absent only when the trace
    starts in a vector the automaton has never seen.  Timing fields are set
    for timing kinds only.
    """

    kind: str
    event_label: str
    at_t_s: float
    source_state: int | None = None
    target_state: int | None = None
    observed_dwell_s: float | None = None
    bound_s: float | None = None
    deviation_s: float | None = None


def detect(
    automaton: TimedAutomaton,
    trace: EventTrace,
    settings: DetectionSettings | None = None,
) -> list[Anomaly]:
    """Replay ``trace`` and return anomalies ordered by time.

    After an UnknownState the detector is desynchronized and silently
    re-synchronizes at the next step whose vector is a known state; one
    anomaly is reported per excursion into unknown territory.  A trace that
    starts in a known but non-initial state is accepted with a logged
    warning, since detection can begin at any recognizable vector.
    """
    settings = settings or DetectionSettings()
    if set(trace.actuator_ids()) != set(automaton.actuator_ids()):
        raise ValueError("trace and automaton disagree on actuator ids")

    anomalies: list[Anomaly] = []
    initial = automaton.initial_state()
    current: int | None
    if trace.initial_vector == initial.vector:
        current = initial.id
    else:
        current = automaton.state_id_for(trace.initial_vector)
        if current is not None:
            log.warning(
                "trace starts in state %d instead of the initial state %d",
                current,
                initial.id,
            )
        else:
            start_t = (
                trace.steps[0].event.t_s - trace.steps[0].dwell_s if trace.steps else 0.0
            )
            anomalies.append(Anomaly(UNKNOWN_STATE, "", start_t))

    for step in trace.steps:
        label = step.event.label
        t_s = step.event.t_s
        if current is None:
            current = automaton.state_id_for(step.resulting_vector)
            continue
        transition = automaton.transitions.get((current, label))
        if transition is not None:
            if step.dwell_s > transition.t_max_s + settings.tolerance_for(transition.t_max_s):
                anomalies.append(
                    Anomaly(
                        TIMING_ABOVE_MAX,
                        label,
                        t_s,
                        source_state=current,
                        target_state=transition.target,
                        observed_dwell_s=step.dwell_s,
                        bound_s=transition.t_max_s,
                        deviation_s=step.dwell_s - transition.t_max_s,
                    )
                )
            elif step.dwell_s < transition.t_min_s - settings.tolerance_for(transition.t_min_s):
                anomalies.append(
                    Anomaly(
                        TIMING_BELOW_MIN,
                        label,
                        t_s,
                        source_state=current,
                        target_state=transition.target,
                        observed_dwell_s=step.dwell_s,
                        bound_s=transition.t_min_s,
                        deviation_s=transition.t_min_s - step.dwell_s,
                    )
                )
            current = transition.target
        else:
            known = automaton.state_id_for(step.resulting_vector)
            if known is not None:
                anomalies.append(
                    Anomaly(
                        UNKNOWN_EVENT,
                        label,
                        t_s,
                        source_state=current,
                        target_state=known,
                    )
                )
                current = known
            else:
                anomalies.append(Anomaly(UNKNOWN_STATE, label, t_s, source_state=current))
                current = None
    return anomalies


def anomalies_to_json(anomalies: list[Anomaly]) -> str:
    doc = {"anomalies": [asdict(a) for a in anomalies]}
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def anomalies_from_json(text: str) -> list[Anomaly]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    try:
        return [
            Anomaly(
                kind=str(a["kind"]),
                event_label=str(a["event_label"]),
                at_t_s=float(a["at_t_s"]),
                source_state=a.get("source_state"),
                target_state=a.get("target_state"),
                observed_dwell_s=a.get("observed_dwell_s"),
                bound_s=a.get("bound_s"),
                deviation_s=a.get("deviation_s"),
            )
            for a in doc["anomalies"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad anomaly document: {exc}") from None
