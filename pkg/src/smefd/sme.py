"""Unfalsified parameter set construction and feasible-set recursion.

Each measurement triple (u_prev, y_prev, y_now) yields a 2n-row slab of
parameters consistent with the model and the uncertainty bounds; the
feasible parameter set is the running intersection of those slabs with
the initial parameter box, tracked through a fixed-direction outer
approximation so the constraint count stays bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import polytope
from .approximation import DirectionSet, outer_approximate
from .errors import BoundError, DimensionError
from .interval import Expr, Interval, include, state_box
from .polytope import (
    EPS_LP,
    HPolytope,
    VertexSet,
    enumerate_vertices,
    intersect,
    is_empty,
    project_axis,
    support,
)


@dataclass(frozen=True)
class UncertaintyBounds:
    """Known component-wise bounds on disturbance and measurement noise."""

    d_bar: np.ndarray
    n_bar: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d_bar, dtype=float).ravel()
        n = np.asarray(self.n_bar, dtype=float).ravel()
        if d.shape != n.shape:
            raise DimensionError("disturbance and noise bounds have different lengths")
        if np.any(d < 0.0) or np.any(n < 0.0):
            raise BoundError("uncertainty bounds must be non-negative")
        object.__setattr__(self, "d_bar", d)
        object.__setattr__(self, "n_bar", n)

    @property
    def n(self) -> int:
        return self.d_bar.size


def build_ups(
    u_prev,
    y_prev,
    y_now,
    bounds: UncertaintyBounds,
    f_expr: Sequence[Expr],
    G_map: Callable,
) -> HPolytope:
    """Slab of parameters unfalsified by one measurement triple.

    Rows are -[I; -I] G(u_prev) theta <= h_d + h_n + h_f(y_prev) - [I; -I] y_now,
    where h_f comes from the interval bound of the autonomous map over the
    noise box around y_prev. Always exactly 2n rows.
    """
    y_prev = np.asarray(y_prev, dtype=float).ravel()
    y_now = np.asarray(y_now, dtype=float).ravel()
    n = bounds.n
    if y_prev.size != n or y_now.size != n:
        raise DimensionError(
            f"measurements have lengths {y_prev.size}/{y_now.size}, expected {n}"
        )
    G = np.asarray(G_map(u_prev), dtype=float)
    if G.ndim != 2 or G.shape[0] != n:
        raise DimensionError(f"input map shape {G.shape} incompatible with n={n}")
    f_box = include(f_expr, state_box(y_prev, bounds.n_bar))
    f_lo = f_box.lo
    f_hi = f_box.hi
    base = bounds.d_bar + bounds.n_bar
    A = np.vstack([-G, G])
    b = np.concatenate([base + f_hi - y_now, base - f_lo + y_now])
    return HPolytope(A, b)


@dataclass(frozen=True)
class FpsState:
    """Committed outer approximation of the feasible parameter set."""

    current: HPolytope
    vertices: VertexSet
    directions: DirectionSet
    theta0: HPolytope

    @staticmethod
    def initial(theta0: HPolytope, directions: DirectionSet) -> "FpsState":
        if theta0.dim != directions.p:
            raise DimensionError("parameter box and directions disagree on dimension")
        verts = enumerate_vertices(theta0)
        return FpsState(theta0, verts, directions, theta0)

    @property
    def p(self) -> int:
        return self.theta0.dim

    def projections(self) -> list[Interval]:
        """Axis projections of the committed set (equal for FPS and its hull)."""
        return [project_axis(self.vertices, i) for i in range(self.p)]


def _informative_rows(state: FpsState, ups: HPolytope, tol: float):
    """Split slab rows into (cutting, certainly-redundant, infeasible-now).

    A row is certainly redundant when its maximum over the bounding box of
    the committed vertices stays below its offset; that certificate agrees
    with the LP redundancy test whenever it fires. Zero-normal rows are
    vacuous or immediately contradictory.
    """
    V = state.vertices.vertices
    lo = V.min(axis=0)
    hi = V.max(axis=0)
    A, b = ups.A, ups.b
    norms = np.abs(A).sum(axis=1)
    zero = norms <= polytope.PIVOT_TOL
    if np.any(b[zero] < -tol):
        return None, True
    box_max = np.where(A > 0.0, A * hi, A * lo).sum(axis=1)
    cutting = (~zero) & (box_max > b - 1e-12)
    return np.flatnonzero(cutting), False


def step_fps(state: FpsState, ups: HPolytope, tol: float = EPS_LP):
    """One recursion step: intersect with the slab, re-approximate, commit.

    Returns (new_state, empty_flag). On an empty intersection the state is
    returned unchanged with the flag raised; the caller decides whether to
    reset.
    """
    if ups.dim != state.p:
        raise DimensionError(f"slab dimension {ups.dim} != parameter dimension {state.p}")
    rows, contradicted = _informative_rows(state, ups, tol)
    if contradicted:
        return state, True
    if rows.size == 0:
        return state, False
    theta_k = intersect(state.current, HPolytope(ups.A[rows], ups.b[rows]))
    verts = enumerate_vertices(theta_k, check=False)
    if len(verts) == 0:
        if is_empty(theta_k, tol):
            return state, True
        # Numerically degenerate sliver: fall back to LP supports.
        return _commit_via_supports(state, theta_k, tol), False
    approx = outer_approximate(verts, state.directions, tol)
    return replace(state, current=approx, vertices=verts), False


def _commit_via_supports(state: FpsState, theta_k: HPolytope, tol: float) -> FpsState:
    D = state.directions.directions
    offsets = np.empty(len(state.directions))
    points = []
    for i, e in enumerate(D):
        val, x = support(theta_k, e, tol)
        offsets[i] = val
        points.append(x)
    pts = polytope._dedup_points(np.array(points))
    approx = polytope.remove_redundant(HPolytope(D, offsets), tol)
    return replace(state, current=approx, vertices=VertexSet(pts, dim=state.p))


def reset_fps(state: FpsState) -> FpsState:
    """Reinitialize the recursion to the initial parameter box."""
    verts = enumerate_vertices(state.theta0, check=False)
    return replace(state, current=state.theta0, vertices=verts)
