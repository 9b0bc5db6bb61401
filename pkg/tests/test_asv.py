import math

import numpy as np
import pytest

from smefd.asv import (
    AsvInput,
    AsvModel,
    AsvState,
    ControllerGains,
    FaultEvent,
    PathSpec,
    VesselParams,
    controller_step,
    default_params,
    discrete_input_map,
    heavy_params,
    input_map,
    measure,
    rk4_autonomous_exprs,
    step_truth,
)
from smefd.errors import ConfigError
from smefd.interval import evaluate

PARAMS = default_params()


def zero_input():
    return AsvInput(0.0, 0.0, 0.0, 0.0, 0.0)


class TestInputMap:
    def test_zero_thrust_zero_matrix(self):
        assert np.allclose(input_map(zero_input(), PARAMS), 0.0)

    def test_left_thruster_column(self):
        inp = AsvInput(1.0, 0.0, 0.0, 0.0, 0.0)
        G = input_map(inp, PARAMS)
        expect = np.linalg.solve(PARAMS.M, [1.0, 0.0, -PARAMS.w_lr])
        assert np.allclose(G[:3, :], 0.0)
        assert np.allclose(G[3:, 0], expect)
        assert np.allclose(G[:, 1:], 0.0)

    def test_healthy_parameters_recover_nominal_force(self):
        inp = AsvInput(22.0, 31.0, 7.0, 0.2, -0.1)
        G = input_map(inp, PARAMS)
        cl, sl = math.cos(0.2), math.sin(0.2)
        cr, sr = math.cos(-0.1), math.sin(-0.1)
        B = np.array([
            [22.0 * cl, 31.0 * cr, 0.0],
            [22.0 * sl, 31.0 * sr, 0.0],
            [-PARAMS.w_lr * 22.0 * cl - PARAMS.l_lr * 22.0 * sl,
             PARAMS.w_lr * 31.0 * cr - PARAMS.l_lr * 31.0 * sr,
             PARAMS.l_b * 7.0],
        ])
        nominal = np.concatenate([np.zeros(3), np.linalg.solve(PARAMS.M, B @ np.ones(3))])
        assert np.allclose(G @ np.ones(3), nominal, atol=1e-12)

    def test_discrete_map_scales_with_dt(self):
        inp = AsvInput(10.0, 5.0, 2.0, 0.1, 0.0)
        assert np.allclose(
            discrete_input_map(inp, PARAMS), PARAMS.dt * input_map(inp, PARAMS)
        )


class TestStepTruth:
    def test_equilibrium(self):
        st = AsvState(1.0, 2.0, 0.3, 0.0, 0.0, 0.0)
        nxt = step_truth(st, zero_input(), np.ones(3), np.zeros(6), PARAMS)
        assert np.allclose(nxt.as_array(), st.as_array(), atol=1e-14)

    def test_fault_scales_column_exactly(self):
        st = AsvState(0.0, 0.0, 0.1, 1.0, 0.05, -0.02)
        inp = AsvInput(30.0, 40.0, 5.0, 0.1, -0.2)
        theta = np.array([1.0, 0.2, 0.7])
        a = step_truth(st, inp, theta, np.zeros(6), PARAMS)
        # pre-scaling each actuator's thrust by its effectiveness is identical
        scaled = AsvInput(30.0 * 1.0, 40.0 * 0.2, 5.0 * 0.7, 0.1, -0.2)
        b = step_truth(st, scaled, np.ones(3), np.zeros(6), PARAMS)
        assert np.allclose(a.as_array(), b.as_array(), atol=0.0)

    def test_right_fault_breaks_symmetry(self):
        st = AsvState(0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
        inp = AsvInput(30.0, 30.0, 0.0, 0.0, 0.0)
        healthy = step_truth(st, inp, np.ones(3), np.zeros(6), PARAMS)
        faulty = step_truth(st, inp, np.array([1.0, 0.2, 1.0]), np.zeros(6), PARAMS)
        assert healthy.r == pytest.approx(0.0, abs=1e-14)
        assert faulty.r != pytest.approx(0.0, abs=1e-6)
        assert faulty.u < healthy.u

    def test_pure_surge_stays_symmetric(self):
        st = AsvState(0.0, 0.0, 0.0, 0.5, 0.0, 0.0)
        inp = AsvInput(20.0, 20.0, 0.0, 0.0, 0.0)
        nxt = step_truth(st, inp, np.ones(3), np.zeros(6), PARAMS)
        assert nxt.v == pytest.approx(0.0, abs=1e-14)
        assert nxt.r == pytest.approx(0.0, abs=1e-14)
        assert nxt.y == pytest.approx(0.0, abs=1e-14)

    def test_velocity_decays_without_input(self):
        st = AsvState(0.0, 0.0, 0.0, 1.5, 0.4, 0.3)
        speeds = [np.linalg.norm([st.u, st.v, st.r])]
        for _ in range(50):
            st = step_truth(st, zero_input(), np.ones(3), np.zeros(6), PARAMS)
            speeds.append(np.linalg.norm([st.u, st.v, st.r]))
        assert all(b <= a + 1e-12 for a, b in zip(speeds, speeds[1:]))

    def test_rk4_convergence_order(self):
        z0 = np.array([0.0, 0.0, 0.4, 1.2, 0.3, 0.25])

        def integrate(dt, T=10.0):
            model = AsvModel(default_params(dt=dt))
            z = z0.copy()
            for _ in range(int(round(T / dt))):
                z = model.autonomous_step(z)
            return z

        ref = integrate(0.003125)
        e1 = np.linalg.norm(integrate(0.05) - ref)
        e2 = np.linalg.norm(integrate(0.025) - ref)
        order = np.log2(e1 / e2)
        assert order >= 3.5

    def test_disturbance_is_additive(self):
        st = AsvState(0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
        d = np.array([0.01, -0.02, 0.003, 0.01, -0.02, 0.005])
        a = step_truth(st, zero_input(), np.ones(3), d, PARAMS)
        b = step_truth(st, zero_input(), np.ones(3), np.zeros(6), PARAMS)
        assert np.allclose(a.as_array() - b.as_array(), d, atol=1e-15)


class TestMeasure:
    def test_zero_noise(self):
        st = AsvState(1.0, 2.0, 0.3, 0.4, 0.5, 0.6)
        assert np.allclose(measure(st, np.zeros(6)), st.as_array())

    def test_bound_attained(self):
        n_bar = np.array([0.01, 0.01, 0.001, 0.007, 0.005, 0.012])
        st = AsvState(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        assert np.allclose(measure(st, n_bar), n_bar)

    def test_seeded_streams_reproduce(self):
        a = np.random.default_rng(33).uniform(-1, 1, size=(5, 6))
        b = np.random.default_rng(33).uniform(-1, 1, size=(5, 6))
        assert np.array_equal(a, b)


class TestController:
    GAINS = ControllerGains(thrust_bias_amp=0.0, bow_dither_amp=0.0)

    def test_on_path_symmetric(self):
        st = AsvState(5.0, 0.0, 0.0, 2.5, 0.0, 0.0)
        inp = controller_step(st, PathSpec(0.0, 40.0, 2.5), self.GAINS, PARAMS)
        assert inp.tau_l == pytest.approx(inp.tau_r, abs=1e-9)
        assert inp.tau_l > 0.0

    def test_offset_left_steers_right(self):
        st = AsvState(5.0, 2.0, 0.0, 2.5, 0.0, 0.0)  # above the path
        inp = controller_step(st, PathSpec(0.0, 40.0, 2.5), self.GAINS, PARAMS)
        # negative yaw moment turns towards the path: w * (tau_r - tau_l) < 0
        assert inp.tau_r < inp.tau_l

    def test_zero_dither_kills_bow_column(self):
        st = AsvState(0.0, 0.0, 0.0, 2.5, 0.0, 0.0)
        inp = controller_step(st, PathSpec(0.0, 40.0, 2.5), self.GAINS, PARAMS, t=3.1)
        G = input_map(inp, PARAMS)
        assert np.allclose(G[:, 2], 0.0)

    def test_saturation(self):
        st = AsvState(0.0, -50.0, 2.0, -3.0, 0.0, 0.0)
        inp = controller_step(st, PathSpec(0.0, 40.0, 2.5), self.GAINS, PARAMS)
        assert abs(inp.tau_l) <= PARAMS.tau_max and abs(inp.tau_r) <= PARAMS.tau_max


class TestValidation:
    def test_mass_matrix_must_be_spd(self):
        with pytest.raises(ConfigError):
            VesselParams(M=-np.eye(3), D=np.eye(3), w_lr=0.4, l_lr=0.7, l_b=0.9,
                         tau_max=80.0, tau_b_max=25.0, alpha_max=0.6, dt=0.05)

    def test_fault_event_range(self):
        with pytest.raises(ConfigError):
            FaultEvent(time=1.0, axis=1, value=1.5)
        with pytest.raises(ConfigError):
            FaultEvent(time=1.0, axis=7, value=0.5)

    def test_heavy_params_valid(self):
        heavy_params()

    def test_model_consistency_with_interval_bound(self):
        # the simulated autonomous map must live inside its interval bound
        from smefd.interval import include, state_box

        model = AsvModel(PARAMS)
        rng = np.random.default_rng(77)
        n_bar = np.array([0.01, 0.01, 0.001, 0.007, 0.005, 0.012])
        for _ in range(50):
            z = rng.uniform([-5, -5, -0.6, -1, -0.5, -0.4],
                            [5, 5, 0.6, 3, 0.5, 0.4])
            box = state_box(z, n_bar)
            bound = include(model.f_discrete, box)
            inner = rng.uniform(box.lo, box.hi, size=(200, 6))
            for zz in inner:
                val = model.autonomous_step(zz)
                assert np.all(val >= bound.lo - 1e-12)
                assert np.all(val <= bound.hi + 1e-12)
