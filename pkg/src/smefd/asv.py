"""3-DoF planar surface-vessel plant with fault-linear actuation.

The discrete plant is z+ = f_d(z) + G_d(u) theta + d, where f_d is the
RK4 map of the autonomous dynamics and G_d scales the generalized-force
input map by the step size. Keeping the input term exactly linear in the
fault parameters makes the plant match the estimation model's structure,
so healthy runs can never falsify the true parameter.

The state is z = (x, y, psi, u, v, r); inputs are two azimuth
thrusters and a bow thruster. The default parameters below are a plausible desk-scale craft;
everything downstream references them through the scenario config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import interval as iv
from .errors import ConfigError, DimensionError
from .interval import Expr


@dataclass(frozen=True)
class AsvState:
    x: float
    y: float
    psi: float
    u: float
    v: float
    r: float

    def __post_init__(self):
        arr = self.as_array()
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite vessel state")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi, self.u, self.v, self.r])

    @staticmethod
    def from_array(z) -> "AsvState":
        z = np.asarray(z, dtype=float).ravel()
        if z.size != 6:
            raise DimensionError("vessel state must have 6 components")
        return AsvState(*z)


@dataclass(frozen=True)
class AsvInput:
    tau_l: float
    tau_r: float
    tau_b: float
    alpha_l: float
    alpha_r: float

    def as_array(self) -> np.ndarray:
        return np.array([self.tau_l, self.tau_r, self.tau_b, self.alpha_l, self.alpha_r])

    def saturated(self, params: "VesselParams") -> "AsvInput":
        c = lambda x, m: float(np.clip(x, -m, m))
        return AsvInput(
            c(self.tau_l, params.tau_max),
            c(self.tau_r, params.tau_max),
            c(self.tau_b, params.tau_b_max),
            c(self.alpha_l, params.alpha_max),
            c(self.alpha_r, params.alpha_max),
        )


@dataclass(frozen=True)
class VesselParams:
    M: np.ndarray
    D: np.ndarray
    w_lr: float
    l_lr: float
    l_b: float
    tau_max: float
    tau_b_max: float
    alpha_max: float
    dt: float

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        D = np.asarray(self.D, dtype=float)
        if M.shape != (3, 3) or D.shape != (3, 3):
            raise ConfigError("mass and damping matrices must be 3x3")
        if not np.allclose(M, M.T, atol=1e-9):
            raise ConfigError("mass matrix must be symmetric")
        if np.any(np.linalg.eigvalsh(M) <= 0.0):
            raise ConfigError("mass matrix must be positive definite")
        if np.any(np.linalg.eigvalsh(0.5 * (D + D.T)) < -1e-9):
            raise ConfigError("damping matrix must be positive semidefinite")
        if abs(M[0, 1]) > 1e-12 or abs(M[0, 2]) > 1e-12:
            raise ConfigError("mass matrix must decouple surge (standard 3-DoF form)")
        if min(self.w_lr, self.l_lr, self.l_b) <= 0.0:
            raise ConfigError("thruster geometry lengths must be positive")
        if self.dt <= 0.0:
            raise ConfigError("step size must be positive")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "D", D)


@dataclass(frozen=True)
class FaultEvent:
    time: float
    axis: int
    value: float

    def __post_init__(self):
        if not 0 <= self.axis <= 2:
            raise ConfigError("fault axis must be 0 (left), 1 (right) or 2 (bow)")
        if not 0.0 <= self.value <= 1.0:
            raise ConfigError("loss-of-effectiveness factor must lie in [0, 1]")


def default_params(dt: float = 0.05) -> VesselParams:
    return VesselParams(
        M=np.diag([50.0, 75.0, 64.0]),
        D=np.diag([30.0, 45.0, 10.0]),
        w_lr=0.4,
        l_lr=0.7,
        l_b=0.9,
        tau_max=80.0,
        tau_b_max=25.0,
        alpha_max=0.6,
        dt=dt,
    )


def heavy_params(dt: float = 0.05) -> VesselParams:
    """Sluggish variant: wide parameter slabs, used to expose how the
    outer-approximation accuracy changes detection delay."""
    return VesselParams(
        M=np.diag([190.0, 285.0, 228.0]),
        D=np.diag([30.0, 45.0, 10.0]),
        w_lr=0.4,
        l_lr=0.7,
        l_b=0.9,
        tau_max=80.0,
        tau_b_max=25.0,
        alpha_max=0.6,
        dt=dt,
    )


def input_map(inp: AsvInput, params: VesselParams) -> np.ndarray:
    """Continuous-time fault input map G(u): column j is actuator j's
    generalized force through [0; M^-1]."""
    cl, sl = math.cos(inp.alpha_l), math.sin(inp.alpha_l)
    cr, sr = math.cos(inp.alpha_r), math.sin(inp.alpha_r)
    B = np.array(
        [
            [inp.tau_l * cl, inp.tau_r * cr, 0.0],
            [inp.tau_l * sl, inp.tau_r * sr, 0.0],
            [
                -params.w_lr * inp.tau_l * cl - params.l_lr * inp.tau_l * sl,
                params.w_lr * inp.tau_r * cr - params.l_lr * inp.tau_r * sr,
                params.l_b * inp.tau_b,
            ],
        ]
    )
    G = np.zeros((6, 3))
    G[3:, :] = np.linalg.solve(params.M, B)
    return G


def discrete_input_map(inp: AsvInput, params: VesselParams) -> np.ndarray:
    """Per-step input map G_d(u) = dt * G(u) of the discrete plant."""
    return params.dt * input_map(inp, params)


def autonomous_rhs(params: VesselParams):
    """Continuous autonomous dynamics as an expression-vector builder.

    Returns a function mapping six state expressions to the six
    derivative expressions, so it can be composed into integrator maps.
    """
    M = params.M
    D = params.D
    Minv = np.linalg.inv(M)
    m11, m22, m23 = M[0, 0], M[1, 1], M[1, 2]

    def rhs(z: list[Expr]) -> list[Expr]:
        _, _, psi, u, v, r = z
        cpsi = iv.cos(psi)
        spsi = iv.sin(psi)
        xdot = u * cpsi - v * spsi
        ydot = u * spsi + v * cpsi
        psidot = r
        lever = m22 * v + m23 * r
        cor = [-(lever * r), m11 * (u * r), lever * u - m11 * (u * v)]
        damp = [
            iv.linear_combination(D[i], [u, v, r]) for i in range(3)
        ]
        total = [cor[i] + damp[i] for i in range(3)]
        nudot = iv.matvec(-Minv, total)
        return [xdot, ydot, psidot, nudot[0], nudot[1], nudot[2]]

    return rhs


def rk4_autonomous_exprs(params: VesselParams, dt: float | None = None) -> list[Expr]:
    """Discrete autonomous map f_d(z): one RK4 step of the drift dynamics."""
    if dt is None:
        dt = params.dt
    rhs = autonomous_rhs(params)
    z = [iv.var(i) for i in range(6)]
    k1 = rhs(z)
    k2 = rhs([z[i] + (dt / 2.0) * k1[i] for i in range(6)])
    k3 = rhs([z[i] + (dt / 2.0) * k2[i] for i in range(6)])
    k4 = rhs([z[i] + dt * k3[i] for i in range(6)])
    return [
        z[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        for i in range(6)
    ]


class AsvModel:
    """Discrete plant bound to one parameter set; reused across a run."""

    def __init__(self, params: VesselParams):
        self.params = params
        self.f_discrete = iv.CompiledMap(rk4_autonomous_exprs(params))

    def autonomous_step(self, z: np.ndarray) -> np.ndarray:
        return self.f_discrete.eval_point(z)

    def step(self, z: np.ndarray, inp: AsvInput, theta, disturbance) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).ravel()
        d = np.asarray(disturbance, dtype=float).ravel()
        return self.autonomous_step(z) + discrete_input_map(inp, self.params) @ theta + d

    def input_map(self, inp: AsvInput) -> np.ndarray:
        return discrete_input_map(inp, self.params)


_MODEL_CACHE: dict[int, tuple[VesselParams, AsvModel]] = {}


def _model_for(params: VesselParams) -> AsvModel:
    hit = _MODEL_CACHE.get(id(params))
    if hit is not None and hit[0] is params:
        return hit[1]
    model = AsvModel(params)
    if len(_MODEL_CACHE) > 32:
        _MODEL_CACHE.clear()
    _MODEL_CACHE[id(params)] = (params, model)
    return model


def step_truth(
    state: AsvState,
    inp: AsvInput,
    theta_true,
    disturbance,
    params: VesselParams,
) -> AsvState:
    """Advance the true plant one step under zero-order-held disturbance."""
    z_next = _model_for(params).step(state.as_array(), inp, theta_true, disturbance)
    return AsvState.from_array(z_next)


def measure(state: AsvState, noise) -> np.ndarray:
    """Full-state measurement y = z + n."""
    noise = np.asarray(noise, dtype=float).ravel()
    if noise.size != 6:
        raise DimensionError("noise must have 6 components")
    return state.as_array() + noise


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class PathSpec:
    """Reference path y = amplitude * sin(2 pi x / wavelength) at set speed."""

    amplitude: float = 0.0
    wavelength: float = 40.0
    speed: float = 2.5


@dataclass(frozen=True)
class ControllerGains:
    kp_surge: float = 60.0
    kp_heading: float = 140.0
    kd_heading: float = 60.0
    lookahead: float = 4.0
    bow_dither_amp: float = 12.0
    bow_dither_hz: float = 0.35
    thrust_bias_amp: float = 10.0
    thrust_bias_hz: float = 0.17


def controller_step(
    state: AsvState,
    path: PathSpec,
    gains: ControllerGains,
    params: VesselParams,
    t: float = 0.0,
) -> AsvInput:
    """Line-of-sight path following with differential-thrust heading control
    and a sinusoidal bow dither for excitation."""
    if path.amplitude != 0.0:
        w = 2.0 * math.pi / path.wavelength
        y_ref = path.amplitude * math.sin(w * state.x)
        chi = math.atan(path.amplitude * w * math.cos(w * state.x))
    else:
        y_ref = 0.0
        chi = 0.0
    e_ct = state.y - y_ref
    psi_d = chi - math.atan2(e_ct, gains.lookahead)
    tau_x = gains.kp_surge * (path.speed - state.u) + params.D[0, 0] * path.speed
    m_z = gains.kp_heading * wrap_angle(psi_d - state.psi) - gains.kd_heading * state.r
    # Antisymmetric bias rotates the excitation direction in the left/right
    # thrust plane; the heading loop absorbs the induced moment.
    bias = gains.thrust_bias_amp * math.sin(2.0 * math.pi * gains.thrust_bias_hz * t)
    tau_l = 0.5 * (tau_x - m_z / params.w_lr) + bias
    tau_r = 0.5 * (tau_x + m_z / params.w_lr) - bias
    tau_b = gains.bow_dither_amp * math.sin(2.0 * math.pi * gains.bow_dither_hz * t)
    return AsvInput(tau_l, tau_r, tau_b, 0.0, 0.0).saturated(params)
