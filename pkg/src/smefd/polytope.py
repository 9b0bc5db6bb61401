"""Half-space polytope engine.

Polytopes are {theta : A theta <= b}. Feasibility and redundancy tests run
on the dense simplex kernel; vertex enumeration solves all p-subsets of
constraint rows in one vectorized batch, which at p <= 3 outruns anything
fancier for the row counts this pipeline produces.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from . import _simplex
from .errors import (
    DimensionError,
    EmptyPolytopeError,
    UnboundedPolytopeError,
)
from .interval import Interval

EPS_LP = 1e-9
EPS_FEAS = 1e-7
EPS_DUP = 1e-7
PIVOT_TOL = 1e-10


class HPolytope:
    """Immutable H-representation polytope {theta : A theta <= b}."""

    __slots__ = ("A", "b", "dim")

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float)).copy()
        b = np.asarray(b, dtype=float).ravel().copy()
        if A.shape[0] != b.shape[0]:
            raise DimensionError(
                f"constraint matrix has {A.shape[0]} rows but offset has {b.shape[0]}"
            )
        A.setflags(write=False)
        b.setflags(write=False)
        self.A = A
        self.b = b
        self.dim = A.shape[1]

    @staticmethod
    def box(lo, hi) -> "HPolytope":
        """Axis-aligned box {lo <= theta <= hi}."""
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise DimensionError("box bounds have different lengths")
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        p = lo.size
        eye = np.eye(p)
        return HPolytope(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @property
    def nrows(self) -> int:
        return self.A.shape[0]

    def contains(self, theta, tol: float = EPS_FEAS) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(self.A @ theta <= self.b + tol))

    def __repr__(self):
        return f"HPolytope(rows={self.nrows}, dim={self.dim})"


class VertexSet:
    """Deduplicated vertices of a bounded polytope."""

    __slots__ = ("vertices", "dim")

    def __init__(self, vertices, dim: int | None = None):
        V = np.atleast_2d(np.asarray(vertices, dtype=float)).copy()
        if V.size == 0:
            V = V.reshape(0, dim if dim is not None else 0)
        V.setflags(write=False)
        self.vertices = V
        self.dim = V.shape[1] if dim is None else dim

    def __len__(self):
        return self.vertices.shape[0]

    def __repr__(self):
        return f"VertexSet(n={len(self)}, dim={self.dim})"


@lru_cache(maxsize=256)
def _combo_indices(n: int, p: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(n), p)), dtype=np.intp)


def _solve_subsets(A: np.ndarray, b: np.ndarray, p: int):
    """Solve every nonsingular p-subset of rows; returns candidate points."""
    n = A.shape[0]
    if n < p:
        return np.zeros((0, p))
    idx = _combo_indices(n, p)
    M = A[idx]  # (K, p, p)
    r = b[idx]  # (K, p)
    if p == 1:
        det = M[:, 0, 0]
        ok = np.abs(det) > PIVOT_TOL
        return (r[ok, 0] / det[ok])[:, None]
    if p == 2:
        det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
        ok = np.abs(det) > PIVOT_TOL
        M, r, det = M[ok], r[ok], det[ok]
        x0 = (r[:, 0] * M[:, 1, 1] - M[:, 0, 1] * r[:, 1]) / det
        x1 = (M[:, 0, 0] * r[:, 1] - r[:, 0] * M[:, 1, 0]) / det
        return np.stack([x0, x1], axis=1)
    if p == 3:
        a, bb, cc = M[:, 0, 0], M[:, 0, 1], M[:, 0, 2]
        d, e, f = M[:, 1, 0], M[:, 1, 1], M[:, 1, 2]
        g, h, i = M[:, 2, 0], M[:, 2, 1], M[:, 2, 2]
        det = a * (e * i - f * h) - bb * (d * i - f * g) + cc * (d * h - e * g)
        ok = np.abs(det) > PIVOT_TOL
        M, r, det = M[ok], r[ok], det[ok]
        a, bb, cc = M[:, 0, 0], M[:, 0, 1], M[:, 0, 2]
        d, e, f = M[:, 1, 0], M[:, 1, 1], M[:, 1, 2]
        g, h, i = M[:, 2, 0], M[:, 2, 1], M[:, 2, 2]
        # adjugate rows
        c00 = e * i - f * h
        c01 = cc * h - bb * i
        c02 = bb * f - cc * e
        c10 = f * g - d * i
        c11 = a * i - cc * g
        c12 = cc * d - a * f
        c20 = d * h - e * g
        c21 = bb * g - a * h
        c22 = a * e - bb * d
        x0 = (c00 * r[:, 0] + c01 * r[:, 1] + c02 * r[:, 2]) / det
        x1 = (c10 * r[:, 0] + c11 * r[:, 1] + c12 * r[:, 2]) / det
        x2 = (c20 * r[:, 0] + c21 * r[:, 1] + c22 * r[:, 2]) / det
        return np.stack([x0, x1, x2], axis=1)
    # general (rare) path
    dets = np.linalg.det(M)
    ok = np.abs(dets) > PIVOT_TOL
    if not np.any(ok):
        return np.zeros((0, p))
    return np.linalg.solve(M[ok], r[ok])


def _dedup_points(X: np.ndarray, eps: float = EPS_DUP) -> np.ndarray:
    if X.shape[0] <= 1:
        return X
    order = np.lexsort(X.T[::-1])
    X = X[order]
    kept: list[np.ndarray] = []
    for x in X:
        dup = False
        for y in kept:
            if np.max(np.abs(x - y)) < eps:
                dup = True
                break
        if not dup:
            kept.append(x)
    return np.array(kept)


def _normalized_rows(P: HPolytope):
    norms = np.linalg.norm(P.A, axis=1)
    live = norms > PIVOT_TOL
    An = P.A[live] / norms[live, None]
    bn = P.b[live] / norms[live]
    return An, bn, live, norms


def is_empty(P: HPolytope, tol: float = EPS_LP) -> bool:
    """Decide emptiness with a phase-1 linear feasibility program."""
    zero = np.linalg.norm(P.A, axis=1) <= PIVOT_TOL
    if np.any(P.b[zero] < -tol):
        return True
    return not _simplex.lp_feasible(P.A, P.b, tol=tol)


def support(P: HPolytope, direction, tol: float = EPS_LP):
    """Support value max{e . theta} over P and a maximizer.

    Raises on empty or unbounded problems.
    """
    e = np.asarray(direction, dtype=float).ravel()
    if e.size != P.dim:
        raise DimensionError("direction dimension mismatch")
    status, x, val = _simplex.solve_lp(P.A, P.b, e, tol=tol)
    if status == _simplex.INFEASIBLE:
        raise EmptyPolytopeError("support of an empty polytope")
    if status == _simplex.UNBOUNDED:
        raise UnboundedPolytopeError("support direction is unbounded")
    return val, x


def remove_redundant(P: HPolytope, tol: float = EPS_LP) -> HPolytope:
    """Drop constraints whose removal leaves the feasible set unchanged.

    Each surviving row is confirmed by the standard LP test: maximize the
    row over the remaining constraints with the row itself relaxed by one
    unit; the row stays only if that maximum exceeds its offset.
    """
    if is_empty(P, tol):
        raise EmptyPolytopeError("cannot reduce an empty polytope")
    An, bn, live, _ = _normalized_rows(P)
    orig_idx = np.flatnonzero(live)

    # Identical normals: only the tightest offset can matter.
    keep = np.ones(An.shape[0], dtype=bool)
    order = np.lexsort(An.T[::-1])
    for ii in range(len(order)):
        i = order[ii]
        if not keep[i]:
            continue
        for jj in range(ii + 1, len(order)):
            j = order[jj]
            if An[j, 0] - An[i, 0] > 1e-9:
                break
            if keep[j] and np.max(np.abs(An[i] - An[j])) < 1e-9:
                if bn[j] >= bn[i]:
                    keep[j] = False
                else:
                    keep[i] = False
                    break
        # i may have been dropped inside the inner loop

    for i in range(An.shape[0]):
        if not keep[i]:
            continue
        rest = keep.copy()
        rest[i] = False
        A_test = np.vstack([An[rest], An[i]])
        b_test = np.concatenate([bn[rest], [bn[i] + 1.0]])
        status, _, val = _simplex.solve_lp(A_test, b_test, An[i], tol=tol)
        if status == _simplex.OPTIMAL and val <= bn[i] + tol:
            keep[i] = False

    kept_rows = orig_idx[keep]
    if kept_rows.size == 0:
        # Whole space; keep one vacuous representation of it.
        return HPolytope(np.zeros((0, P.dim)), np.zeros(0))
    return HPolytope(P.A[kept_rows], P.b[kept_rows])


def enumerate_vertices(
    P: HPolytope,
    tol_feas: float = EPS_FEAS,
    tol_dup: float = EPS_DUP,
    check: bool = True,
) -> VertexSet:
    """All vertices of a bounded nonempty polytope.

    Solves every nonsingular p-subset of the constraint rows and keeps the
    solutions that satisfy all constraints; ``check=False`` skips the LP
    boundedness test for callers that guarantee boundedness structurally.
    """
    if check and is_empty(P):
        raise EmptyPolytopeError("cannot enumerate vertices of an empty polytope")
    if check:
        for j in range(P.dim):
            e = np.zeros(P.dim)
            for sgn in (1.0, -1.0):
                e[j] = sgn
                status, _, _ = _simplex.solve_lp(P.A, P.b, e)
                if status == _simplex.UNBOUNDED:
                    raise UnboundedPolytopeError(
                        f"polytope unbounded along axis {j}"
                    )
            e[j] = 0.0
    An, bn, _, _ = _normalized_rows(P)
    cand = _solve_subsets(An, bn, P.dim)
    if cand.shape[0]:
        feas = np.all(An @ cand.T <= (bn + tol_feas)[:, None], axis=0)
        cand = cand[feas]
    verts = _dedup_points(cand, tol_dup)
    if verts.shape[0] == 0 and not check:
        return VertexSet(np.zeros((0, P.dim)), dim=P.dim)
    if verts.shape[0] == 0:
        raise EmptyPolytopeError("no vertices found; polytope may be degenerate")
    return VertexSet(verts, dim=P.dim)


def intersect(P: HPolytope, Q: HPolytope) -> HPolytope:
    """Exact intersection by constraint concatenation."""
    if P.dim != Q.dim:
        raise DimensionError(f"dimension mismatch: {P.dim} vs {Q.dim}")
    return HPolytope(np.vstack([P.A, Q.A]), np.concatenate([P.b, Q.b]))


def project_axis(V: VertexSet, i: int) -> Interval:
    """Projection of the vertex hull onto coordinate axis i."""
    if len(V) == 0:
        raise EmptyPolytopeError("projection of an empty vertex set")
    if not 0 <= i < V.dim:
        raise DimensionError(f"axis {i} out of range for dimension {V.dim}")
    col = V.vertices[:, i]
    return Interval(float(col.min()), float(col.max()))


def vertex_centroid(V: VertexSet) -> np.ndarray:
    """Arithmetic mean of the vertices."""
    if len(V) == 0:
        raise EmptyPolytopeError("centroid of an empty vertex set")
    return V.vertices.mean(axis=0)
