import math

import numpy as np
import pytest

from smefd.errors import BoundError, InfeasibleProblemError
from smefd.estimator import (
    RegressionBuffer,
    RegularizationPolicy,
    adaptive_lambda,
    estimate,
    kkt_residual,
    push_measurement,
    singular_values,
    solve_qp,
)
from smefd.interval import var
from smefd.polytope import HPolytope

ZERO_F2 = [0.0 * var(0), 0.0 * var(1)]
EYE_G2 = lambda u: np.eye(2)
BOX2 = HPolytope.box([0.0, 0.0], [1.0, 1.0])


def default_policy(lam=0.5, alpha=8.0, mode="previous"):
    return RegularizationPolicy(np.full(2, lam), alpha, mode)


class TestBuffer:
    def test_single_push(self):
        buf = RegressionBuffer(5)
        buf = push_measurement(buf, None, [0.0, 0.0], [0.4, 0.7], ZERO_F2, EYE_G2)
        assert buf.phi().shape == (2, 2)
        assert np.allclose(buf.xi(), [0.4, 0.7])

    def test_window_eviction(self):
        buf = RegressionBuffer(3)
        for k in range(4):
            buf = push_measurement(
                buf, None, [0.0, 0.0], [float(k), 0.0], ZERO_F2, EYE_G2
            )
        assert buf.n_blocks == 3
        assert buf.xi()[0] == 1.0  # oldest block (k=0) evicted

    def test_xi_equals_theta_for_identity_plant(self):
        # f == 0, G = I, noiseless: y_now = theta_true
        theta = np.array([0.3, 0.9])
        buf = push_measurement(RegressionBuffer(2), None, [0.0, 0.0], theta, ZERO_F2, EYE_G2)
        assert np.allclose(buf.xi(), theta)

    def test_cleared(self):
        buf = push_measurement(RegressionBuffer(2), None, [0.0, 0.0], [1.0, 1.0], ZERO_F2, EYE_G2)
        assert buf.cleared().n_blocks == 0


class TestAdaptiveLambda:
    def test_empty_buffer_maximal(self):
        lam = adaptive_lambda(RegressionBuffer(5), default_policy(lam=0.7))
        assert np.allclose(np.diag(lam), [0.7, 0.7])

    def test_large_excitation_negligible(self):
        buf = RegressionBuffer(2)
        buf = push_measurement(buf, None, [0.0, 0.0], [1.0, 1.0], ZERO_F2,
                               lambda u: 100.0 * np.eye(2))
        lam = adaptive_lambda(buf, default_policy(lam=1.0, alpha=1.0))
        assert np.all(np.diag(lam) < 1e-40)

    def test_exact_decay_values(self):
        # singular values (ln 2, 0) with unit weights and alpha = 1
        buf = RegressionBuffer(1)
        G = np.array([[math.log(2.0), 0.0], [0.0, 0.0]])
        buf = push_measurement(buf, None, [0.0, 0.0], [0.0, 0.0], ZERO_F2, lambda u: G)
        sv = singular_values(buf, 2)
        assert sv == pytest.approx([math.log(2.0), 0.0])
        lam = adaptive_lambda(buf, default_policy(lam=1.0, alpha=1.0))
        assert np.diag(lam) == pytest.approx([0.5, 1.0])

    def test_policy_validation(self):
        with pytest.raises(BoundError):
            RegularizationPolicy(np.array([-1.0, 0.0]), 1.0)
        with pytest.raises(BoundError):
            RegularizationPolicy(np.array([1.0, 1.0]), 0.0)
        with pytest.raises(BoundError):
            RegularizationPolicy(np.array([1.0, 1.0]), 1.0, "nonsense")


def grid_points(fps, n=101):
    g = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(g, g)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    return pts[np.all(fps.A @ pts.T <= fps.b[:, None] + 1e-12, axis=0)]


def qp_objective(P, q, x):
    return x @ P @ x + q @ x


class TestEstimate:
    def test_interior_optimum_matches_least_squares(self):
        rng = np.random.default_rng(12)
        policy = RegularizationPolicy(np.zeros(2), 5.0)
        big = HPolytope.box([-100.0, -100.0], [100.0, 100.0])
        for _ in range(10):
            buf = RegressionBuffer(5)
            theta_true = rng.uniform(-1, 1, 2)
            for _ in range(4):
                G = rng.normal(size=(2, 2))
                y = G @ theta_true + rng.normal(size=2) * 0.01
                buf = push_measurement(buf, None, [0.0, 0.0], y, ZERO_F2, lambda u, G=G: G)
            ref, *_ = np.linalg.lstsq(buf.phi(), buf.xi(), rcond=None)
            got = estimate(buf, big, np.zeros(2), None, policy)
            assert np.max(np.abs(got - ref)) < 1e-6

    def test_empty_buffer_projects_target(self):
        policy = default_policy(lam=1.0)
        prev = np.array([1.7, 0.4])  # outside the unit box
        got = estimate(RegressionBuffer(5), BOX2, np.array([0.5, 0.5]), prev, policy)
        pts = grid_points(BOX2)
        dists = np.linalg.norm(pts - prev, axis=1)
        assert np.linalg.norm(got - prev) <= dists.min() + 1e-6
        assert np.allclose(got, [1.0, 0.4], atol=1e-7)

    def test_rank_deficient_pulls_unexcited_axis_to_target(self):
        rng = np.random.default_rng(3)
        policy = default_policy(lam=0.5, alpha=2.0, mode="previous")
        theta_tilde = np.array([0.5, 0.5])
        buf = RegressionBuffer(10)
        for _ in range(6):
            g00 = rng.uniform(0.5, 2.0)
            G = np.array([[g00, 0.0], [0.0, 0.0]])  # only theta_1 excited
            y = G @ np.array([0.25, 0.0]) + rng.normal(size=2) * 0.002
            buf = push_measurement(buf, None, [0.0, 0.0], y, ZERO_F2, lambda u, G=G: G)
        got = estimate(buf, BOX2, np.array([0.5, 0.5]), theta_tilde, policy)
        # grid-search oracle on the same objective
        phi, xi = buf.phi(), buf.xi()
        lam = np.diag(adaptive_lambda(buf, policy))
        P = phi.T @ phi + np.diag(lam)
        q = -2.0 * (phi.T @ xi + lam * theta_tilde)
        pts = grid_points(BOX2, 201)
        best = pts[np.argmin([qp_objective(P, q, x) for x in pts])]
        assert qp_objective(P, q, got) <= qp_objective(P, q, best) + 1e-8
        assert abs(got[0] - 0.25) < 0.05
        assert abs(got[1] - 0.5) < 1e-6

    def test_estimate_always_feasible_and_stationary(self):
        rng = np.random.default_rng(8)
        policy = default_policy()
        prev = None
        buf = RegressionBuffer(4)
        fps = HPolytope(np.vstack([BOX2.A, [[1.0, 1.0]]]),
                        np.concatenate([BOX2.b, [1.2]]))
        centroid = np.array([0.4, 0.4])
        for _ in range(25):
            G = rng.normal(size=(2, 2))
            y = G @ np.array([0.9, 0.8]) + rng.normal(size=2) * 0.05
            buf = push_measurement(buf, None, [0.0, 0.0], y, ZERO_F2, lambda u, G=G: G)
            got = estimate(buf, fps, centroid, prev, policy)
            assert np.all(fps.A @ got <= fps.b + 1e-7)
            phi, xi = buf.phi(), buf.xi()
            lam = policy.lambda_bar * np.exp(-policy.alpha * singular_values(buf, 2))
            P = phi.T @ phi + np.diag(lam)
            q = -2.0 * (phi.T @ xi + lam * (prev if prev is not None else centroid))
            assert kkt_residual(P, q, fps.A, fps.b, got) < 1e-6
            prev = got

    def test_continuity_at_zero_regularization(self):
        rng = np.random.default_rng(5)
        buf = RegressionBuffer(4)
        for _ in range(4):
            G = rng.normal(size=(2, 2))
            y = G @ np.array([0.6, 0.3])
            buf = push_measurement(buf, None, [0.0, 0.0], y, ZERO_F2, lambda u, G=G: G)
        base = estimate(buf, BOX2, np.array([0.5, 0.5]), None,
                        RegularizationPolicy(np.zeros(2), 1.0))
        tiny = estimate(buf, BOX2, np.array([0.5, 0.5]), None,
                        RegularizationPolicy(np.full(2, 1e-12), 1.0))
        assert np.max(np.abs(base - tiny)) < 1e-6

    def test_empty_fps_rejected(self):
        empty = HPolytope([[1.0, 0.0], [-1.0, 0.0]], [0.0, -1.0])
        with pytest.raises(InfeasibleProblemError):
            estimate(RegressionBuffer(2), empty, np.array([0.5, 0.5]), None, default_policy())

    def test_no_data_no_regularization_projects(self):
        policy = RegularizationPolicy(np.zeros(2), 1.0)
        prev = np.array([2.0, 2.0])
        got = estimate(RegressionBuffer(2), BOX2, np.array([0.5, 0.5]), prev, policy)
        assert np.allclose(got, [1.0, 1.0], atol=1e-7)


class TestSolveQpOracle:
    def test_against_cvxopt(self):
        cvxopt = pytest.importorskip("cvxopt")
        from cvxopt import matrix, solvers

        solvers.options["show_progress"] = False
        rng = np.random.default_rng(42)
        for trial in range(40):
            p = int(rng.integers(2, 4))
            R = rng.normal(size=(p + 1, p))
            P = R.T @ R + np.diag(rng.uniform(0, 0.5, p))
            q = rng.normal(size=p)
            lo, hi = -rng.uniform(0.5, 2, p), rng.uniform(0.5, 2, p)
            G = np.vstack([np.eye(p), -np.eye(p), rng.normal(size=(2, p))])
            h = np.concatenate([hi, -lo, rng.uniform(1.0, 3.0, 2)])
            x0 = np.zeros(p)
            assert np.all(G @ x0 <= h)
            got = solve_qp(P, q, G, h, x0)
            sol = solvers.qp(matrix(2.0 * P), matrix(q), matrix(G), matrix(h))
            ref = np.array(sol["x"]).ravel()
            assert qp_objective(P, q, got) <= qp_objective(P, q, ref) + 1e-6
            assert np.max(G @ got - h) <= 1e-7
