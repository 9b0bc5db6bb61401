import pytest

from smefd.diagnosis import (
    DetectionEvent,
    DiagnosisState,
    IsolationEvent,
    Mode,
    detection_delay,
    intervals_disjoint,
    on_step,
)
from smefd.errors import DimensionError, SmefdError
from smefd.interval import Interval


def proj(*pairs):
    return [Interval(a, b) for a, b in pairs]


HEALTHY3 = proj((0.9, 1.0), (0.92, 1.0), (0.8, 1.0))


class TestDisjointness:
    def test_strictness_on_touching(self):
        assert not intervals_disjoint(Interval(0.0, 0.5), Interval(0.5, 1.0))
        assert not intervals_disjoint(Interval(0.0, 0.5 - 1e-10), Interval(0.5, 1.0))
        assert intervals_disjoint(Interval(0.0, 0.5 - 1e-8), Interval(0.5, 1.0))
        assert intervals_disjoint(Interval(0.6, 1.0), Interval(0.0, 0.5))


class TestStateMachine:
    def test_healthy_stream_no_events(self):
        st = DiagnosisState.initial(3)
        for k in range(1, 50):
            st, events = on_step(st, False, HEALTHY3, k)
            assert events == []
        assert st.mode is Mode.HEALTHY and st.k_D is None

    def test_detection_records_k_and_prefault(self):
        st = DiagnosisState.initial(3)
        st, _ = on_step(st, False, HEALTHY3, 411)
        st, events = on_step(st, True, HEALTHY3, 412)
        assert events == [DetectionEvent(412)]
        assert st.mode is Mode.FAULT_DETECTED
        assert st.k_D == 412
        assert st.prefault_projections == tuple(HEALTHY3)
        assert all(st.awaiting)

    def test_isolation_on_disjoint_axis(self):
        st = DiagnosisState.initial(3)
        st, _ = on_step(st, True, proj((0.9, 1.0), (0.93, 1.0), (0.8, 1.0)), 400)
        # post-reset wide projections: no isolation yet
        st, events = on_step(st, False, proj((0.0, 1.0), (0.0, 1.0), (0.0, 1.0)), 401)
        assert events == []
        st, events = on_step(st, False, proj((0.7, 1.0), (0.12, 0.31), (0.5, 1.0)), 402)
        assert events == [IsolationEvent(402, 1)]
        assert st.k_I == (None, 402, None)
        assert st.mode is Mode.FAULT_DETECTED  # axes 0, 2 still pending

    def test_all_axes_resolved_moves_to_isolated(self):
        st = DiagnosisState.initial(1)
        st, _ = on_step(st, True, proj((0.9, 1.0)), 10)
        st, events = on_step(st, False, proj((0.1, 0.3)), 11)
        assert events == [IsolationEvent(11, 0)]
        assert st.mode is Mode.FAULT_ISOLATED

    def test_timeout_resolves_pending(self):
        st = DiagnosisState.initial(2, isolation_timeout=5)
        st, _ = on_step(st, True, proj((0.9, 1.0), (0.9, 1.0)), 100)
        for k in range(101, 106):
            st, events = on_step(st, False, proj((0.5, 1.0), (0.5, 1.0)), k)
        assert st.mode is Mode.FAULT_ISOLATED
        assert st.k_I == (None, None)

    def test_rearm_after_isolated(self):
        st = DiagnosisState.initial(1, isolation_timeout=2)
        st, _ = on_step(st, True, proj((0.9, 1.0)), 10)
        st, _ = on_step(st, False, proj((0.1, 0.2)), 11)
        assert st.mode is Mode.FAULT_ISOLATED
        st, events = on_step(st, True, proj((0.1, 0.2)), 30)
        assert events == [DetectionEvent(30)]
        assert st.k_D == 30 and not st.flagged

    def test_redetection_while_pending_flags_run(self):
        st = DiagnosisState.initial(1, isolation_timeout=100)
        st, _ = on_step(st, True, proj((0.9, 1.0)), 10)
        st, events = on_step(st, True, proj((0.4, 0.9)), 12)
        assert events == [DetectionEvent(12)]
        assert st.flagged and st.k_D == 12

    def test_projection_length_checked(self):
        st = DiagnosisState.initial(3)
        with pytest.raises(DimensionError):
            on_step(st, False, proj((0.0, 1.0)), 1)

    def test_touching_projection_does_not_isolate(self):
        st = DiagnosisState.initial(1)
        st, _ = on_step(st, True, proj((0.5, 1.0)), 10)
        st, events = on_step(st, False, proj((0.2, 0.5)), 11)
        assert events == []


class TestDetectionDelay:
    def test_delay_value(self):
        st = DiagnosisState.initial(3)
        st, _ = on_step(st, True, HEALTHY3, 412)
        assert detection_delay(st, 400) == 12

    def test_immediate(self):
        st = DiagnosisState.initial(3)
        st, _ = on_step(st, True, HEALTHY3, 401)
        assert detection_delay(st, 400) == 1

    def test_no_detection_raises(self):
        with pytest.raises(SmefdError):
            detection_delay(DiagnosisState.initial(3), 400)
