"""Decision module: drive propose -> verify -> land/retry/abort.

The state machine is deliberately tiny so its whole behavior can be checked
by exhaustive enumeration. A landing is triggered only by a SAFE verdict;
exhausting the trial budget or running out of candidates terminates the
flight (engines off, parachute out).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import IllegalEvent
from .lzs import DriftModel, LandingCandidate, buffer_radius, distance_transform, select_candidates
from .monitor import SAFE, MonitorConfig, MonitorVerdict, verify_tile
from .segcore import argmax_segment
from .taxonomy import DEFAULT_EXCLUDED
from .tensors import ScoreMapStack


class DmPhase(str, Enum):
    IDLE = "IDLE"
    AWAIT_VERDICT = "AWAIT_VERDICT"
    LANDING = "LANDING"
    ABORTED = "ABORTED"


class DmAction(str, Enum):
    REQUEST_MONITOR = "REQUEST_MONITOR"
    EXECUTE_LANDING = "EXECUTE_LANDING"
    RETRY = "RETRY"
    FLIGHT_TERMINATION = "FLIGHT_TERMINATION"


class DmEventKind(str, Enum):
    PROPOSE = "PROPOSE"
    VERDICT = "VERDICT"
    NO_CANDIDATE = "NO_CANDIDATE"


@dataclass(frozen=True)
class DmEvent:
    kind: DmEventKind
    candidate: LandingCandidate | None = None
    safe: bool | None = None

    @staticmethod
    def propose(candidate: LandingCandidate | None) -> "DmEvent":
        return DmEvent(DmEventKind.PROPOSE, candidate=candidate)

    @staticmethod
    def verdict(safe: bool) -> "DmEvent":
        return DmEvent(DmEventKind.VERDICT, safe=safe)

    @staticmethod
    def no_candidate() -> "DmEvent":
        return DmEvent(DmEventKind.NO_CANDIDATE)


@dataclass(frozen=True)
class DmState:
    budget: int
    phase: DmPhase = DmPhase.IDLE
    trials_used: int = 0
    current_candidate: LandingCandidate | None = None

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not 0 <= self.trials_used <= self.budget:
            raise ValueError("trials_used must stay within the budget")


def dm_step(state: DmState, event: DmEvent) -> tuple[DmState, DmAction]:
    """Advance the decision state machine by one event.

    Raises IllegalEvent when the event is not legal in the current phase
    (PROPOSE/NO_CANDIDATE only in IDLE, VERDICT only in AWAIT_VERDICT,
    nothing in the terminal phases).
    """
    phase = state.phase
    if phase == DmPhase.IDLE and event.kind == DmEventKind.PROPOSE:
        next_state = DmState(
            budget=state.budget,
            phase=DmPhase.AWAIT_VERDICT,
            trials_used=state.trials_used + 1,
            current_candidate=event.candidate,
        )
        return next_state, DmAction.REQUEST_MONITOR
    if phase == DmPhase.IDLE and event.kind == DmEventKind.NO_CANDIDATE:
        return (
            DmState(budget=state.budget, phase=DmPhase.ABORTED, trials_used=state.trials_used),
            DmAction.FLIGHT_TERMINATION,
        )
    if phase == DmPhase.AWAIT_VERDICT and event.kind == DmEventKind.VERDICT:
        if event.safe:
            next_state = DmState(
                budget=state.budget,
                phase=DmPhase.LANDING,
                trials_used=state.trials_used,
                current_candidate=state.current_candidate,
            )
            return next_state, DmAction.EXECUTE_LANDING
        if state.trials_used < state.budget:
            return (
                DmState(budget=state.budget, phase=DmPhase.IDLE, trials_used=state.trials_used),
                DmAction.RETRY,
            )
        return (
            DmState(budget=state.budget, phase=DmPhase.ABORTED, trials_used=state.trials_used),
            DmAction.FLIGHT_TERMINATION,
        )
    raise IllegalEvent(f"event {event.kind.value} not legal in phase {phase.value}")


LANDED = "LANDED"
TERMINATED = "TERMINATED"
REASON_NO_CANDIDATE = "NO_CANDIDATE"
REASON_BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"


@dataclass(frozen=True)
class PipelineConfig:
    monitor: MonitorConfig = MonitorConfig()
    tile_size: int = 16
    gsd: float = 0.5
    buffer_m: float | None = None       # explicit standoff wins over drift
    drift: DriftModel | None = None
    excluded_classes: tuple[int, ...] = DEFAULT_EXCLUDED
    budget: int = 3
    sample_index: int = 0

    def resolved_buffer(self) -> float:
        if self.buffer_m is not None:
            return self.buffer_m
        if self.drift is not None:
            return buffer_radius(self.drift)
        return 0.0

    def as_dict(self) -> dict:
        return {
            "monitor": self.monitor.as_dict(),
            "tile_size": self.tile_size,
            "gsd": self.gsd,
            "buffer_m": self.buffer_m,
            "drift": self.drift.as_dict() if self.drift else None,
            "resolved_buffer_m": self.resolved_buffer(),
            "excluded_classes": list(self.excluded_classes),
            "budget": self.budget,
            "sample_index": self.sample_index,
        }


@dataclass(frozen=True)
class TraceStep:
    event: str
    action: str
    trials_used: int
    candidate: LandingCandidate | None = None
    verdict: MonitorVerdict | None = None

    def as_dict(self) -> dict:
        return {
            "event": self.event,
            "action": self.action,
            "trials_used": self.trials_used,
            "candidate": self.candidate.as_dict() if self.candidate else None,
            "verdict": self.verdict.as_dict() if self.verdict else None,
        }


@dataclass(frozen=True)
class Outcome:
    status: str                              # LANDED | TERMINATED
    candidate: LandingCandidate | None
    reason: str | None
    trials_used: int

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "candidate": self.candidate.as_dict() if self.candidate else None,
            "reason": self.reason,
            "trials_used": self.trials_used,
        }


@dataclass(frozen=True)
class PipelineResult:
    outcome: Outcome
    trace: tuple[TraceStep, ...]
    candidates: tuple[LandingCandidate, ...]
    buffer_m: float

    def as_dict(self) -> dict:
        return {
            "outcome": self.outcome.as_dict(),
            "trace": [t.as_dict() for t in self.trace],
            "candidates": [c.as_dict() for c in self.candidates],
            "buffer_m": self.buffer_m,
        }


def run_pipeline(stack: ScoreMapStack, config: PipelineConfig) -> PipelineResult:
    """Segment, rank candidates, and feed them through the state machine.

    Candidates are consumed in rank order; a rejected tile is never retried
    on the same stack since re-verifying identical data cannot change the
    verdict. Returns the outcome plus a complete event/action trace.
    """
    seg = argmax_segment(stack, config.sample_index, config.monitor.composite)
    dist = distance_transform(seg.busy_road, config.gsd)
    buffer_m = config.resolved_buffer()
    candidates = select_candidates(
        seg, dist, config.tile_size, buffer_m, config.excluded_classes
    )

    state = DmState(budget=config.budget)
    trace: list[TraceStep] = []
    pending = list(candidates)
    while state.phase == DmPhase.IDLE:
        if not pending:
            state, action = dm_step(state, DmEvent.no_candidate())
            trace.append(TraceStep("NO_CANDIDATE", action.value, state.trials_used))
            break
        cand = pending.pop(0)
        state, action = dm_step(state, DmEvent.propose(cand))
        trace.append(TraceStep("PROPOSE", action.value, state.trials_used, candidate=cand))
        verdict = verify_tile(stack, cand.tile, config.monitor)
        state, action = dm_step(state, DmEvent.verdict(verdict.decision == SAFE))
        trace.append(
            TraceStep("VERDICT", action.value, state.trials_used, candidate=cand, verdict=verdict)
        )

    if state.phase == DmPhase.LANDING:
        outcome = Outcome(LANDED, state.current_candidate, None, state.trials_used)
    else:
        reason = (
            REASON_NO_CANDIDATE
            if trace[-1].event == "NO_CANDIDATE"
            else REASON_BUDGET_EXHAUSTED
        )
        outcome = Outcome(TERMINATED, None, reason, state.trials_used)
    return PipelineResult(
        outcome=outcome,
        trace=tuple(trace),
        candidates=tuple(candidates),
        buffer_m=buffer_m,
    )
