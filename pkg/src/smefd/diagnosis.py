"""Fault decision logic: detection on set emptiness, isolation on
disjoint axis projections against the frozen pre-fault set."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .errors import DimensionError, SmefdError
from .interval import Interval

EPS_ISO = 1e-9


class Mode(enum.Enum):
    HEALTHY = "healthy"
    FAULT_DETECTED = "fault_detected"
    FAULT_ISOLATED = "fault_isolated"


@dataclass(frozen=True)
class DetectionEvent:
    k: int


@dataclass(frozen=True)
class IsolationEvent:
    k: int
    axis: int


def intervals_disjoint(a: Interval, b: Interval, eps: float = EPS_ISO) -> bool:
    """Strict disjointness; touching intervals are not disjoint."""
    return a.hi < b.lo - eps or b.hi < a.lo - eps


@dataclass(frozen=True)
class DiagnosisState:
    mode: Mode
    p: int
    k_D: Optional[int] = None
    k_I: tuple = ()
    prefault_projections: Optional[tuple] = None
    awaiting: tuple = ()
    isolation_timeout: int = 200
    flagged: bool = False

    @staticmethod
    def initial(p: int, isolation_timeout: int = 200) -> "DiagnosisState":
        return DiagnosisState(
            mode=Mode.HEALTHY,
            p=p,
            k_I=(None,) * p,
            awaiting=(False,) * p,
            isolation_timeout=isolation_timeout,
        )


def on_step(
    state: DiagnosisState,
    empty_flag: bool,
    current_projections: Sequence[Interval],
    k: int,
):
    """Advance the state machine one step.

    ``current_projections`` are the axis projections of the committed
    feasible set at step k: on an emptiness step the recursion holds the
    last nonempty set, so they are exactly the pre-fault snapshot the
    isolation test needs.
    """
    if current_projections is not None and len(current_projections) != state.p:
        raise DimensionError(
            f"got {len(current_projections)} projections for {state.p} parameters"
        )
    events: list = []
    if empty_flag:
        flagged = state.flagged or state.mode is Mode.FAULT_DETECTED
        state = replace(
            state,
            mode=Mode.FAULT_DETECTED,
            k_D=k,
            k_I=(None,) * state.p,
            prefault_projections=tuple(current_projections),
            awaiting=(True,) * state.p,
            flagged=flagged,
        )
        events.append(DetectionEvent(k))
        return state, events

    if state.mode is Mode.FAULT_DETECTED:
        k_I = list(state.k_I)
        awaiting = list(state.awaiting)
        for i in range(state.p):
            if awaiting[i] and intervals_disjoint(
                current_projections[i], state.prefault_projections[i]
            ):
                k_I[i] = k
                awaiting[i] = False
                events.append(IsolationEvent(k, i))
        timed_out = k - state.k_D >= state.isolation_timeout
        if not any(awaiting) or timed_out:
            state = replace(
                state,
                mode=Mode.FAULT_ISOLATED,
                k_I=tuple(k_I),
                awaiting=(False,) * state.p,
            )
        else:
            state = replace(state, k_I=tuple(k_I), awaiting=tuple(awaiting))
    return state, events


def detection_delay(state: DiagnosisState, k_F: int) -> int:
    """Steps from fault occurrence to detection."""
    if state.k_D is None:
        raise SmefdError("no detection has occurred")
    return state.k_D - k_F
