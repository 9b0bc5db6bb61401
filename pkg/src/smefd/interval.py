"""Closed-interval arithmetic and inclusion functions for bounding dynamics.

Intervals are outward-rounded by one unit in the last place after every
elementary operation, so every result is a superset of the exact real
result and of its float evaluation. Dynamics are written once as a small
expression graph and evaluated either over floats (simulation), numpy
arrays (batch sampling) or intervals (inclusion bounds), which keeps the
simulated map and its bound from drifting apart.
"""

from __future__ import annotations

import math
from math import inf, nextafter
from typing import Sequence

import numpy as np

from .errors import BoundError, DimensionError

_PI = math.pi
_TWO_PI = 2.0 * math.pi


def _dn(x: float) -> float:
    return nextafter(x, -inf)


def _up(x: float) -> float:
    return nextafter(x, inf)


class Interval:
    """Closed interval [lo, hi] with outward-rounded arithmetic."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float):
        lo = float(lo)
        hi = float(hi)
        if not lo <= hi:
            raise BoundError(f"interval bounds out of order: [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @staticmethod
    def point(x: float) -> "Interval":
        return Interval(x, x)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def encloses(self, other: "Interval", tol: float = 0.0) -> bool:
        return self.lo - tol <= other.lo and other.hi <= self.hi + tol

    def intersects(self, other: "Interval", tol: float = 0.0) -> bool:
        return self.lo <= other.hi + tol and other.lo <= self.hi + tol

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval(_dn(self.lo + other.lo), _up(self.hi + other.hi))
        if isinstance(other, (int, float)):
            return Interval(_dn(self.lo + other), _up(self.hi + other))
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        if isinstance(other, Interval):
            return Interval(_dn(self.lo - other.hi), _up(self.hi - other.lo))
        if isinstance(other, (int, float)):
            return Interval(_dn(self.lo - other), _up(self.hi - other))
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, float)):
            return Interval(_dn(other - self.hi), _up(other - self.lo))
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Interval):
            p1 = self.lo * other.lo
            p2 = self.lo * other.hi
            p3 = self.hi * other.lo
            p4 = self.hi * other.hi
            return Interval(_dn(min(p1, p2, p3, p4)), _up(max(p1, p2, p3, p4)))
        if isinstance(other, (int, float)):
            if other >= 0.0:
                return Interval(_dn(self.lo * other), _up(self.hi * other))
            return Interval(_dn(self.hi * other), _up(self.lo * other))
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        return (
            isinstance(other, Interval) and self.lo == other.lo and self.hi == other.hi
        )

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def _sin_pair(a: float, b: float) -> tuple[float, float]:
    if b - a >= _TWO_PI:
        return -1.0, 1.0
    sa, sb = math.sin(a), math.sin(b)
    lo = sa if sa < sb else sb
    hi = sb if sa < sb else sa
    # maxima of sin at pi/2 + 2k*pi, minima at -pi/2 + 2k*pi
    if math.floor((b - _PI / 2) / _TWO_PI) >= math.ceil((a - _PI / 2) / _TWO_PI):
        hi = 1.0
    else:
        hi = min(_up(hi), 1.0)
    if math.floor((b + _PI / 2) / _TWO_PI) >= math.ceil((a + _PI / 2) / _TWO_PI):
        lo = -1.0
    else:
        lo = max(_dn(lo), -1.0)
    return lo, hi


def _cos_pair(a: float, b: float) -> tuple[float, float]:
    if b - a >= _TWO_PI:
        return -1.0, 1.0
    ca, cb = math.cos(a), math.cos(b)
    lo = ca if ca < cb else cb
    hi = cb if ca < cb else ca
    # maxima of cos at 2k*pi, minima at pi + 2k*pi
    if math.floor(b / _TWO_PI) >= math.ceil(a / _TWO_PI):
        hi = 1.0
    else:
        hi = min(_up(hi), 1.0)
    if math.floor((b - _PI) / _TWO_PI) >= math.ceil((a - _PI) / _TWO_PI):
        lo = -1.0
    else:
        lo = max(_dn(lo), -1.0)
    return lo, hi


def isin(x: Interval) -> Interval:
    """Interval extension of sin, widened over crossed extrema."""
    return Interval(*_sin_pair(x.lo, x.hi))


def icos(x: Interval) -> Interval:
    """Interval extension of cos, widened over crossed extrema."""
    return Interval(*_cos_pair(x.lo, x.hi))


class IntervalVector:
    """Fixed-length vector of intervals (a box in state space)."""

    __slots__ = ("components",)

    def __init__(self, components: Sequence[Interval]):
        self.components = tuple(components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i: int) -> Interval:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    @property
    def lo(self) -> np.ndarray:
        return np.array([c.lo for c in self.components])

    @property
    def hi(self) -> np.ndarray:
        return np.array([c.hi for c in self.components])

    def contains_point(self, z: Sequence[float], tol: float = 0.0) -> bool:
        return all(c.contains(float(v), tol) for c, v in zip(self.components, z))

    def encloses(self, other: "IntervalVector", tol: float = 0.0) -> bool:
        return all(a.encloses(b, tol) for a, b in zip(self.components, other.components))

    def __eq__(self, other):
        return (
            isinstance(other, IntervalVector) and self.components == other.components
        )

    def __repr__(self):
        return f"IntervalVector({list(self.components)!r})"


def state_box(y: Sequence[float], n_bar: Sequence[float]) -> IntervalVector:
    """Box containing the true state given a measurement and noise bounds."""
    y = np.asarray(y, dtype=float)
    n_bar = np.asarray(n_bar, dtype=float)
    if y.shape != n_bar.shape or y.ndim != 1:
        raise DimensionError(
            f"measurement shape {y.shape} does not match noise bound shape {n_bar.shape}"
        )
    if np.any(n_bar < 0.0):
        raise BoundError("noise bounds must be non-negative")
    comps = []
    for yi, ni in zip(y, n_bar):
        if ni == 0.0:
            comps.append(Interval(yi, yi))
        else:
            comps.append(Interval(_dn(yi - ni), _up(yi + ni)))
    return IntervalVector(comps)


# ---------------------------------------------------------------------------
# Expression graph for dynamics maps
# ---------------------------------------------------------------------------


class Expr:
    """Scalar expression node; supports +, -, * with exprs and numbers."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, _as_expr(other))

    def __radd__(self, other):
        return add(_as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(_as_expr(other)))

    def __rsub__(self, other):
        return add(_as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, _as_expr(other))

    def __rmul__(self, other):
        return mul(_as_expr(other), self)

    def __neg__(self):
        return neg(self)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        self.value = float(value)


class Var(Expr):
    __slots__ = ("index",)

    def __init__(self, index: int):
        if index < 0:
            raise DimensionError(f"negative state index {index}")
        self.index = index


class Add(Expr):
    __slots__ = ("a", "b")

    def __init__(self, a: Expr, b: Expr):
        self.a = a
        self.b = b


class Mul(Expr):
    __slots__ = ("a", "b")

    def __init__(self, a: Expr, b: Expr):
        self.a = a
        self.b = b


class Neg(Expr):
    __slots__ = ("a",)

    def __init__(self, a: Expr):
        self.a = a


class Sin(Expr):
    __slots__ = ("a",)

    def __init__(self, a: Expr):
        self.a = a


class Cos(Expr):
    __slots__ = ("a",)

    def __init__(self, a: Expr):
        self.a = a


def _as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)):
        return Const(x)
    raise TypeError(f"cannot treat {type(x).__name__} as an expression")


def var(i: int) -> Expr:
    return Var(i)


def const(c: float) -> Expr:
    return Const(c)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if isinstance(a, Const) and a.value == 0.0:
        return b
    if isinstance(b, Const) and b.value == 0.0:
        return a
    return Add(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    for x, y in ((a, b), (b, a)):
        if isinstance(x, Const):
            if x.value == 0.0:
                return Const(0.0)
            if x.value == 1.0:
                return y
    return Mul(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def sin(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(math.sin(a.value))
    return Sin(a)


def cos(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(math.cos(a.value))
    return Cos(a)


def linear_combination(coeffs: Sequence[float], exprs: Sequence[Expr]) -> Expr:
    """Sum of coeff * expr terms with zero/one folding."""
    if len(coeffs) != len(exprs):
        raise DimensionError("coefficient and expression counts differ")
    acc: Expr = Const(0.0)
    for c, e in zip(coeffs, exprs):
        acc = add(acc, mul(Const(float(c)), e))
    return acc


def matvec(matrix, exprs: Sequence[Expr]) -> list[Expr]:
    """Matrix-vector product of a constant matrix with an expression vector."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[1] != len(exprs):
        raise DimensionError(
            f"matrix shape {m.shape} incompatible with {len(exprs)} expressions"
        )
    return [linear_combination(row, exprs) for row in m]


def _eval_node(node: Expr, env, memo: dict, sinf, cosf):
    nid = id(node)
    hit = memo.get(nid)
    if hit is not None:
        return hit
    t = type(node)
    if t is Var:
        idx = node.index
        if idx >= len(env):
            raise DimensionError(
                f"expression references component {idx} of a length-{len(env)} state"
            )
        v = env[idx]
    elif t is Const:
        v = node.value
    elif t is Add:
        v = _eval_node(node.a, env, memo, sinf, cosf) + _eval_node(
            node.b, env, memo, sinf, cosf
        )
    elif t is Mul:
        v = _eval_node(node.a, env, memo, sinf, cosf) * _eval_node(
            node.b, env, memo, sinf, cosf
        )
    elif t is Neg:
        v = -_eval_node(node.a, env, memo, sinf, cosf)
    elif t is Sin:
        v = sinf(_eval_node(node.a, env, memo, sinf, cosf))
    elif t is Cos:
        v = cosf(_eval_node(node.a, env, memo, sinf, cosf))
    else:
        raise TypeError(f"unknown expression node {t.__name__}")
    memo[nid] = v
    return v


def evaluate(exprs, z) -> np.ndarray:
    """Evaluate an expression vector at a real state (scalars or batches).

    ``z`` may be a 1-D state vector or an (n, K) array of K stacked states;
    the result has matching shape. Accepts a plain expression sequence or
    a CompiledMap.
    """
    if isinstance(exprs, CompiledMap):
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            return exprs.eval_point(z)
        exprs = exprs.exprs
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        env = z.tolist()
        memo: dict = {}
        return np.array(
            [_eval_node(e, env, memo, math.sin, math.cos) for e in exprs]
        )
    env = list(z)
    memo = {}
    out = [_eval_node(e, env, memo, np.sin, np.cos) for e in exprs]
    return np.array([np.broadcast_to(v, z.shape[1]) for v in out])


def include(exprs, box: IntervalVector) -> IntervalVector:
    """Natural interval extension of an expression vector over a box."""
    if isinstance(exprs, CompiledMap):
        lo, hi = exprs.eval_interval(box.lo.tolist(), box.hi.tolist())
        return IntervalVector([Interval(a, b) for a, b in zip(lo, hi)])
    env = box.components
    memo: dict = {}
    out = []
    for e in exprs:
        v = _eval_node(e, env, memo, isin, icos)
        if not isinstance(v, Interval):
            v = Interval(v, v)
        out.append(v)
    return IntervalVector(out)


# ---------------------------------------------------------------------------
# Tape compilation: flatten a DAG once, evaluate many times
# ---------------------------------------------------------------------------

_OP_ADD, _OP_MUL, _OP_NEG, _OP_SIN, _OP_COS = range(5)


class CompiledMap:
    """Expression vector flattened to an instruction tape.

    Semantically identical to evaluating the expressions directly; exists
    because the diagnosis loop evaluates the same dynamics map thousands
    of times per run.
    """

    def __init__(self, exprs: Sequence[Expr]):
        self.exprs = list(exprs)
        slot_of: dict[int, int] = {}
        tape: list[tuple] = []
        consts: list[tuple[int, float]] = []
        var_slots: list[tuple[int, int]] = []
        n_vars = 0

        def visit(node: Expr) -> int:
            nonlocal n_vars
            nid = id(node)
            s = slot_of.get(nid)
            if s is not None:
                return s
            t = type(node)
            if t is Const:
                s = _alloc()
                consts.append((s, node.value))
            elif t is Var:
                s = _alloc()
                var_slots.append((s, node.index))
                n_vars = max(n_vars, node.index + 1)
            elif t is Add:
                a = visit(node.a)
                b = visit(node.b)
                s = _alloc()
                tape.append((_OP_ADD, s, a, b))
            elif t is Mul:
                a = visit(node.a)
                b = visit(node.b)
                s = _alloc()
                tape.append((_OP_MUL, s, a, b))
            elif t is Neg:
                a = visit(node.a)
                s = _alloc()
                tape.append((_OP_NEG, s, a, 0))
            elif t is Sin:
                a = visit(node.a)
                s = _alloc()
                tape.append((_OP_SIN, s, a, 0))
            elif t is Cos:
                a = visit(node.a)
                s = _alloc()
                tape.append((_OP_COS, s, a, 0))
            else:
                raise TypeError(f"unknown expression node {t.__name__}")
            slot_of[nid] = s
            return s

        self._n_slots = 0

        def _alloc() -> int:
            self._n_slots += 1
            return self._n_slots - 1

        self._outputs = [visit(e) for e in self.exprs]
        self._tape = tape
        self._consts = consts
        self._vars = var_slots
        self.n_inputs = n_vars

    def __len__(self):
        return len(self.exprs)

    def __iter__(self):
        return iter(self.exprs)

    def eval_point(self, z) -> np.ndarray:
        s = [0.0] * self._n_slots
        for slot, val in self._consts:
            s[slot] = val
        for slot, idx in self._vars:
            if idx >= len(z):
                raise DimensionError(
                    f"expression references component {idx} of a length-{len(z)} state"
                )
            s[slot] = z[idx]
        msin, mcos = math.sin, math.cos
        for op, dst, a, b in self._tape:
            if op == _OP_ADD:
                s[dst] = s[a] + s[b]
            elif op == _OP_MUL:
                s[dst] = s[a] * s[b]
            elif op == _OP_NEG:
                s[dst] = -s[a]
            elif op == _OP_SIN:
                s[dst] = msin(s[a])
            else:
                s[dst] = mcos(s[a])
        return np.array([s[o] for o in self._outputs])

    def eval_interval(self, zlo, zhi) -> tuple[list[float], list[float]]:
        lo = [0.0] * self._n_slots
        hi = [0.0] * self._n_slots
        for slot, val in self._consts:
            lo[slot] = val
            hi[slot] = val
        for slot, idx in self._vars:
            if idx >= len(zlo):
                raise DimensionError(
                    f"expression references component {idx} of a length-{len(zlo)} state"
                )
            lo[slot] = zlo[idx]
            hi[slot] = zhi[idx]
        nxt = nextafter
        for op, dst, a, b in self._tape:
            if op == _OP_ADD:
                lo[dst] = nxt(lo[a] + lo[b], -inf)
                hi[dst] = nxt(hi[a] + hi[b], inf)
            elif op == _OP_MUL:
                p1 = lo[a] * lo[b]
                p2 = lo[a] * hi[b]
                p3 = hi[a] * lo[b]
                p4 = hi[a] * hi[b]
                lo[dst] = nxt(min(p1, p2, p3, p4), -inf)
                hi[dst] = nxt(max(p1, p2, p3, p4), inf)
            elif op == _OP_NEG:
                t = lo[a]
                lo[dst] = -hi[a]
                hi[dst] = -t
            elif op == _OP_SIN:
                lo[dst], hi[dst] = _sin_pair(lo[a], hi[a])
            else:
                lo[dst], hi[dst] = _cos_pair(lo[a], hi[a])
        return [lo[o] for o in self._outputs], [hi[o] for o in self._outputs]
