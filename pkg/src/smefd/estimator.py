"""Windowed parameter regression with adaptive Tikhonov regularization.

The estimate minimizes |Phi theta - xi|^2 + (theta - theta_tilde)' L
(theta - theta_tilde) over the current outer-approximated feasible set,
solved by a primal active-set method warm-started at the vertex centroid.
The regularization weights decay exponentially with the singular values
of the regressor, so they only bite when the data stop exciting a
parameter direction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BoundError, DimensionError, InfeasibleProblemError
from .interval import Expr, evaluate
from .polytope import EPS_FEAS, HPolytope, is_empty


class RegressionBuffer:
    """Sliding window of stacked input-map blocks and observations."""

    def __init__(self, window: int, blocks=None):
        if window < 1:
            raise BoundError("window must be at least 1")
        self.window = window
        self._blocks: deque = deque(blocks or (), maxlen=window)
        self._phi = None
        self._xi = None

    @property
    def n_blocks(self) -> int:
        return len(self._blocks)

    def phi(self) -> np.ndarray:
        if self._phi is None:
            self._phi = (
                np.vstack([g for g, _ in self._blocks])
                if self._blocks
                else np.zeros((0, 0))
            )
        return self._phi

    def xi(self) -> np.ndarray:
        if self._xi is None:
            self._xi = (
                np.concatenate([x for _, x in self._blocks])
                if self._blocks
                else np.zeros(0)
            )
        return self._xi

    def cleared(self) -> "RegressionBuffer":
        return RegressionBuffer(self.window)


def push_measurement(
    buf: RegressionBuffer,
    u_prev,
    y_prev,
    y_now,
    f_expr: Sequence[Expr],
    G_map: Callable,
) -> RegressionBuffer:
    """Append one measurement triple as a block row; evict the oldest."""
    y_prev = np.asarray(y_prev, dtype=float).ravel()
    y_now = np.asarray(y_now, dtype=float).ravel()
    if y_prev.size != y_now.size:
        raise DimensionError("measurement lengths differ")
    G = np.asarray(G_map(u_prev), dtype=float)
    if G.shape[0] != y_now.size:
        raise DimensionError(f"input map rows {G.shape[0]} != measurement length {y_now.size}")
    xi_block = y_now - evaluate(f_expr, y_prev)
    blocks = deque(buf._blocks, maxlen=buf.window)
    blocks.append((G, xi_block))
    return RegressionBuffer(buf.window, blocks)


@dataclass(frozen=True)
class RegularizationPolicy:
    """Maximum weights, decay rate and regularization-target selector."""

    lambda_bar: np.ndarray
    alpha: float
    theta_tilde_mode: str = "previous"

    def __post_init__(self):
        lb = np.asarray(self.lambda_bar, dtype=float).ravel()
        if np.any(lb < 0.0):
            raise BoundError("maximum regularization weights must be non-negative")
        if not self.alpha > 0.0:
            raise BoundError("decay rate must be positive")
        if self.theta_tilde_mode not in ("previous", "centroid"):
            raise BoundError(f"unknown regularization target mode {self.theta_tilde_mode!r}")
        object.__setattr__(self, "lambda_bar", lb)

    @property
    def p(self) -> int:
        return self.lambda_bar.size


def _sv_from_gram(gram: np.ndarray, p: int) -> np.ndarray:
    eig = np.linalg.eigvalsh(gram)
    sv = np.sqrt(np.clip(eig, 0.0, None))[::-1]
    out = np.zeros(p)
    out[: min(p, sv.size)] = sv[:p]
    return out


def singular_values(buf: RegressionBuffer, p: int) -> np.ndarray:
    """Descending singular values of the stacked regressor, zero-padded to p."""
    phi = buf.phi()
    if phi.size == 0:
        return np.zeros(p)
    return _sv_from_gram(phi.T @ phi, p)


def adaptive_lambda(buf: RegressionBuffer, policy: RegularizationPolicy) -> np.ndarray:
    """Diagonal weights lambda_bar_i * exp(-alpha * sigma_i)."""
    sv = singular_values(buf, policy.p)
    return np.diag(policy.lambda_bar * np.exp(-policy.alpha * sv))


def estimate(
    buf: RegressionBuffer,
    fps: HPolytope,
    centroid,
    prev_estimate,
    policy: RegularizationPolicy,
) -> np.ndarray:
    """Constrained regularized least-squares estimate inside the FPS."""
    centroid = np.asarray(centroid, dtype=float).ravel()
    p = policy.p
    if centroid.size != p or fps.dim != p:
        raise DimensionError("estimator dimensions disagree")
    if not fps.contains(centroid, EPS_FEAS) and is_empty(fps):
        raise InfeasibleProblemError("feasible parameter set is empty")
    if policy.theta_tilde_mode == "centroid" or prev_estimate is None:
        theta_tilde = centroid
    else:
        theta_tilde = np.asarray(prev_estimate, dtype=float).ravel()
    phi = buf.phi()
    if phi.size:
        gram = phi.T @ phi
        lam = policy.lambda_bar * np.exp(-policy.alpha * _sv_from_gram(gram, p))
        P = gram + np.diag(lam)
        q = -2.0 * (phi.T @ buf.xi() + lam * theta_tilde)
    else:
        lam = policy.lambda_bar.copy()
        P = np.diag(lam)
        q = -2.0 * lam * theta_tilde
    if np.all(np.abs(P) < 1e-300):
        # No data and no regularization: project the target onto the set.
        P = np.eye(p)
        q = -2.0 * theta_tilde
    x0 = centroid if fps.contains(centroid, EPS_FEAS) else _feasible_point(fps)
    return solve_qp(P, q, fps.A, fps.b, x0)


def _feasible_point(fps: HPolytope) -> np.ndarray:
    from ._simplex import OPTIMAL, solve_lp

    status, x, _ = solve_lp(fps.A, fps.b, np.zeros(fps.dim))
    if status != OPTIMAL:
        raise InfeasibleProblemError("feasible parameter set is empty")
    return x


def solve_qp(P, q, G, h, x0, max_iter: int | None = None) -> np.ndarray:
    """Minimize x'Px + q'x subject to Gx <= h from a feasible start.

    Primal active-set method. P must be symmetric positive semidefinite;
    singular curvature is handled by following the zero-curvature descent
    direction until a constraint blocks it (the feasible sets used here
    are bounded).
    """
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float).ravel()
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float).ravel()
    n = q.size
    m = G.shape[0]
    x = np.asarray(x0, dtype=float).ravel().copy()
    if max_iter is None:
        max_iter = 50 * (m + n + 2)
    H = P + P.T  # gradient of x'Px is (P + P')x
    work: list[int] = []
    for _ in range(max_iter):
        g = H @ x + q
        if work:
            Gw = G[work]
            _, s, Vt = np.linalg.svd(Gw)
            rank = int(np.sum(s > 1e-10 * max(1.0, s[0] if s.size else 1.0)))
            Z = Vt[rank:].T
        else:
            Z = np.eye(n)
        newton = True
        if Z.shape[1] == 0:
            d = np.zeros(n)
        else:
            Hr = Z.T @ H @ Z
            gr = Z.T @ g
            w, Q = np.linalg.eigh(Hr)
            wmax = max(float(w[-1]), 0.0)
            pos = w > max(1e-12 * max(wmax, 1.0), 1e-14)
            g_modes = Q.T @ gr
            null_part = g_modes.copy()
            null_part[pos] = 0.0
            if np.linalg.norm(null_part) > 1e-10 * (1.0 + np.linalg.norm(g)):
                dr = -Q @ null_part
                newton = False
            else:
                coef = np.zeros_like(g_modes)
                coef[pos] = g_modes[pos] / w[pos]
                dr = -Q @ coef
            d = Z @ dr
        if np.linalg.norm(d) <= 1e-11 * (1.0 + np.linalg.norm(x)):
            if not work:
                return x
            lam, *_ = np.linalg.lstsq(G[work].T, -g, rcond=None)
            if np.all(lam >= -1e-9 * (1.0 + np.linalg.norm(g))):
                return x
            worst = int(np.argmin(lam))
            work.pop(worst)
            continue
        Gd = G @ d
        slack = h - G @ x
        cap = 1.0 if newton else np.inf
        moving = Gd > 1e-13
        if work:
            moving[work] = False
        alpha = cap
        block = -1
        if np.any(moving):
            ratios = np.where(moving, np.maximum(slack, 0.0) / np.where(moving, Gd, 1.0), np.inf)
            j = int(np.argmin(ratios))
            if ratios[j] < alpha - 1e-15:
                alpha = float(ratios[j])
                block = j
        if not np.isfinite(alpha):
            # Unbounded ray: only possible on unbounded feasible sets.
            raise InfeasibleProblemError("quadratic program is unbounded")
        x = x + alpha * d
        if block >= 0 and alpha < cap:
            work.append(block)
            work.sort()
    return x


def kkt_residual(P, q, G, h, x, active_tol: float = 1e-6) -> float:
    """Norm of the stationarity residual using active-constraint multipliers."""
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float).ravel()
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float).ravel()
    g = (P + P.T) @ x + q
    active = np.flatnonzero(G @ x >= h - active_tol)
    if active.size == 0:
        return float(np.linalg.norm(g))
    lam, *_ = np.linalg.lstsq(G[active].T, -g, rcond=None)
    lam = np.clip(lam, 0.0, None)
    return float(np.linalg.norm(G[active].T @ lam + g))
