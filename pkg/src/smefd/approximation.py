"""Predefined face-normal directions and vertex-based outer approximation.

Directions are generated offline by recursive combination sums over the
signed axis set; the online step outer-approximates a vertex set by its
support values along those directions. Redundancy of the support rows is
resolved exactly: each row is implied by the others iff its direction has
a nonnegative conic decomposition over the remaining directions whose
weighted support does not exceed its own (LP duality), and for the small
direction sets used online those decompositions are enumerated once and
cached, leaving only dot products per call.
"""

from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np

from .errors import BoundError, DimensionError, EmptyPolytopeError
from .polytope import EPS_LP, HPolytope, VertexSet, remove_redundant

EPS_DIR = 1e-9
_TABLE_MAX_DIRECTIONS = 48


class DirectionSet:
    """Unit outward normals for the outer-approximation faces."""

    __slots__ = ("directions", "p", "phi", "_dual_table")

    def __init__(self, directions, p: int, phi: int):
        D = np.atleast_2d(np.asarray(directions, dtype=float)).copy()
        if D.shape[1] != p:
            raise DimensionError(f"directions have {D.shape[1]} components, expected {p}")
        norms = np.linalg.norm(D, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise BoundError("directions must have unit Euclidean norm")
        for i in range(p):
            for sgn in (1.0, -1.0):
                e = np.zeros(p)
                e[i] = sgn
                if not np.any(np.max(np.abs(D - e), axis=1) < EPS_DIR):
                    raise BoundError(f"direction set is missing signed axis {sgn * (i + 1):+g}")
        D.setflags(write=False)
        self.directions = D
        self.p = p
        self.phi = phi
        self._dual_table = None

    def __len__(self):
        return self.directions.shape[0]

    def __repr__(self):
        return f"DirectionSet(p={self.p}, phi={self.phi}, n={len(self)})"


def _dedup_directions(D: np.ndarray, eps: float = EPS_DIR) -> np.ndarray:
    kept: list[np.ndarray] = []
    for d in D:
        if not any(np.max(np.abs(d - k)) < eps for k in kept):
            kept.append(d)
    return np.array(kept)


def generate_directions(p: int, phi: int) -> DirectionSet:
    """Signed axes refined by ``phi`` rounds of combination sums.

    Each round replaces the set with the normalized sums of all
    combinations of 1..p current members, discarding zero sums and
    duplicates. Size-1 combinations reproduce the members, so the set
    only grows and always contains the signed axes.
    """
    if p < 1:
        raise DimensionError("dimension must be at least 1")
    if phi < 0:
        raise BoundError("recursion depth must be non-negative")
    eye = np.eye(p)
    current = np.empty((2 * p, p))
    current[0::2] = eye
    current[1::2] = -eye
    for _ in range(phi):
        sums: list[np.ndarray] = []
        n = current.shape[0]
        for j in range(1, p + 1):
            combos = itertools.combinations(range(n), j)
            while True:
                chunk = list(itertools.islice(combos, 100_000))
                if not chunk:
                    break
                s = current[np.array(chunk, dtype=np.intp)].sum(axis=1)
                norms = np.linalg.norm(s, axis=1)
                ok = norms > 1e-12
                sums.append(s[ok] / norms[ok, None])
        current = _dedup_directions(np.vstack(sums))
    return DirectionSet(current, p, phi)


def save_directions(E: DirectionSet, path) -> None:
    """One unit vector per line, with a header carrying p and phi."""
    lines = [f"# p={E.p} phi={E.phi}"]
    for d in E.directions:
        lines.append(" ".join(f"{x:.17g}" for x in d))
    Path(path).write_text("\n".join(lines) + "\n")


def load_directions(path) -> DirectionSet:
    text = Path(path).read_text().strip().splitlines()
    header = text[0].lstrip("# ").split()
    meta = dict(item.split("=") for item in header)
    p = int(meta["p"])
    phi = int(meta["phi"])
    rows = [[float(x) for x in line.split()] for line in text[1:] if line.strip()]
    return DirectionSet(np.array(rows), p, phi)


def _build_dual_table(E: DirectionSet):
    """Enumerate nonnegative conic decompositions of each direction.

    For every nonsingular p-subset S and every direction i outside S with
    e_i = sum_j lambda_j e_j, lambda >= 0, record (i, S, lambda). The LP
    redundancy value for row i equals the minimum of lambda . b[S] over
    these records (dual basic solutions).
    """
    D = E.directions
    n, p = D.shape
    idx = np.array(list(itertools.combinations(range(n), p)), dtype=np.intp)
    B = np.swapaxes(D[idx], 1, 2)  # (K, p, p), columns are directions
    dets = np.linalg.det(B)
    ok = np.abs(dets) > 1e-10
    idx, B = idx[ok], B[ok]
    K = idx.shape[0]
    rhs = np.broadcast_to(D.T, (K, p, n)).copy()
    lam = np.linalg.solve(B, rhs)  # (K, p, n): lam[k, :, i] decomposes e_i over S_k
    nonneg = np.all(lam >= -1e-12, axis=1)  # (K, n)
    in_subset = np.zeros((K, n), dtype=bool)
    for col in range(p):
        in_subset[np.arange(K), idx[:, col]] = True
    valid = nonneg & ~in_subset
    ks, targets = np.nonzero(valid)
    pair_lam = np.clip(np.swapaxes(lam, 1, 2)[ks, targets], 0.0, None)  # (m, p)
    pair_idx = idx[ks]  # (m, p)
    order = np.argsort(targets, kind="stable")
    targets = targets[order]
    pair_lam = pair_lam[order]
    pair_idx = pair_idx[order]
    starts = np.searchsorted(targets, np.arange(n))
    has_any = np.searchsorted(targets, np.arange(n), side="right") > starts
    return pair_idx, pair_lam, targets, starts, has_any


def _table_redundant(E: DirectionSet, offsets: np.ndarray, tol: float) -> np.ndarray:
    if E._dual_table is None:
        E._dual_table = _build_dual_table(E)
    pair_idx, pair_lam, targets, starts, has_any = E._dual_table
    n = len(E)
    redundant = np.zeros(n, dtype=bool)
    if targets.size == 0:
        return redundant
    vals = (pair_lam * offsets[pair_idx]).sum(axis=1)
    mins = np.minimum.reduceat(vals, np.minimum(starts, vals.size - 1))
    redundant[has_any] = mins[has_any] <= offsets[has_any] + tol
    return redundant


def outer_approximate(V: VertexSet, E: DirectionSet, tol: float = EPS_LP) -> HPolytope:
    """Support-value outer approximation of conv(V) along the directions.

    Every direction contributes the face {e . theta <= max_v e . v};
    redundant faces are then removed, so the result is the tightest
    polytope with outward normals drawn from E that contains conv(V).
    """
    if len(V) == 0:
        raise EmptyPolytopeError("cannot outer-approximate an empty vertex set")
    if V.dim != E.p:
        raise DimensionError(f"vertex dimension {V.dim} != direction dimension {E.p}")
    supports = (E.directions @ V.vertices.T).max(axis=1)
    if E.p <= 3 and len(E) <= _TABLE_MAX_DIRECTIONS:
        redundant = _table_redundant(E, supports, tol)
        keep = ~redundant
        return HPolytope(E.directions[keep], supports[keep])
    return remove_redundant(HPolytope(E.directions, supports), tol)
