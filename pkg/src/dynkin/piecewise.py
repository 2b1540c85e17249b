"""Piecewise symbolic functions on an interval.

Payoffs and diffusion coefficients are supplied as symbolic expressions in x,
one per sub-interval.  Each piece is differentiated symbolically, so kink data
(one-sided first derivatives at interior breakpoints) is exact; the strategy
construction depends on that exactness.  Within a piece the expression must be
smooth; pieces containing Abs(...) are split automatically at interior zeros
of the absolute-value argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
import sympy as sp

from .errors import ValidationError

_X = sp.Symbol("x", real=True)

#: relative tolerance for the continuity check at breakpoints
CONTINUITY_RTOL = 1e-12


def _lambdify(expr):
    fn = sp.lambdify(_X, expr, modules=["numpy"])

    def wrapped(xs):
        xs = np.asarray(xs, dtype=float)
        out = fn(xs)
        out = np.asarray(out, dtype=float)
        if out.shape != xs.shape:
            out = np.broadcast_to(out, xs.shape).copy()
        return out

    return wrapped


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    expr: sp.Expr
    d1_expr: sp.Expr = field(repr=False, default=None)
    d2_expr: sp.Expr = field(repr=False, default=None)

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValidationError(f"piece interval [{self.lo}, {self.hi}] is empty")
        object.__setattr__(self, "d1_expr", sp.diff(self.expr, _X))
        object.__setattr__(self, "d2_expr", sp.diff(self.expr, _X, 2))
        object.__setattr__(self, "_val", _lambdify(self.expr))
        object.__setattr__(self, "_d1", _lambdify(self.d1_expr))
        object.__setattr__(self, "_d2", _lambdify(self.d2_expr))

    def val(self, xs):
        return self._val(xs)

    def d1(self, xs):
        return self._d1(xs)

    def d2(self, xs):
        return self._d2(xs)


@dataclass(frozen=True)
class Kink:
    x: float
    d_left: float
    d_right: float

    @property
    def jump(self) -> float:
        return self.d_right - self.d_left


def _split_on_abs(lo: float, hi: float, expr: sp.Expr) -> list[tuple[float, float, sp.Expr]]:
    """Split (lo, hi) at interior zeros of every Abs/sign argument in expr."""
    cuts: set[float] = set()
    for node in expr.atoms(sp.Abs) | expr.atoms(sp.sign):
        arg = node.args[0]
        try:
            roots = sp.solveset(sp.Eq(arg, 0), _X, domain=sp.Interval.open(lo, hi))
        except Exception:
            continue
        if isinstance(roots, sp.FiniteSet):
            for r in roots:
                if r.is_real:
                    cuts.add(float(r))
    points = [lo] + sorted(cuts) + [hi]
    out = []
    for a, b in zip(points[:-1], points[1:]):
        mid = 0.5 * (a + b)
        # rewrite Abs/sign using the locally constant sign so the piece is smooth
        local = expr
        for node in expr.atoms(sp.Abs) | expr.atoms(sp.sign):
            arg = node.args[0]
            s = sp.sign(arg.subs(_X, mid))
            if s == 0:
                continue
            if isinstance(node, sp.Abs):
                local = local.subs(node, s * arg)
            else:
                local = local.subs(node, s)
        out.append((a, b, sp.simplify(local)))
    return out


class PiecewiseFn:
    """A continuous, piecewise-smooth scalar function of one variable.

    Pieces must be contiguous and are checked for continuity at breakpoints.
    Every interior breakpoint is recorded as a declared kink together with its
    one-sided derivatives (the derivative jump may be zero).
    """

    def __init__(self, pieces: Sequence[Piece], name: str = "w"):
        if not pieces:
            raise ValidationError("PiecewiseFn needs at least one piece")
        pieces = sorted(pieces, key=lambda p: p.lo)
        for left, right in zip(pieces[:-1], pieces[1:]):
            if not np.isclose(left.hi, right.lo, rtol=0, atol=1e-12 * (1 + abs(left.hi))):
                raise ValidationError(
                    f"{name}: pieces not contiguous at {left.hi} vs {right.lo}")
        self.name = name
        self.pieces: tuple[Piece, ...] = tuple(pieces)
        self.lo = pieces[0].lo
        self.hi = pieces[-1].hi
        # interior breakpoints, as evaluated from the pieces themselves
        self._breaks = np.array([p.lo for p in pieces[1:]], dtype=float)
        self._check_continuity()
        self.kinks: tuple[Kink, ...] = tuple(self._collect_kinks())

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_descriptor(cls, descriptor, name: str = "w") -> "PiecewiseFn":
        """Build from a list of {"interval": [a, b], "expr": "..."} entries."""
        if isinstance(descriptor, (str, int, float, sp.Expr)):
            raise ValidationError(
                f"{name}: descriptor must be a list of interval/expr entries; "
                "use from_expr for a single global expression")
        pieces = []
        for i, entry in enumerate(descriptor):
            try:
                a, b = entry["interval"]
                raw = entry["expr"]
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(
                    f"{name}: piece {i} must have 'interval': [a, b] and 'expr'") from exc
            expr = _parse_expr(raw, name, i)
            for lo, hi, ex in _split_on_abs(float(a), float(b), expr):
                pieces.append(Piece(lo, hi, ex))
        return cls(pieces, name=name)

    @classmethod
    def from_expr(cls, expr: Union[str, float, sp.Expr], lo: float, hi: float,
                  name: str = "w") -> "PiecewiseFn":
        """Build from one expression valid on the whole interval [lo, hi]."""
        parsed = _parse_expr(expr, name, 0)
        pieces = [Piece(a, b, ex) for a, b, ex in _split_on_abs(float(lo), float(hi), parsed)]
        return cls(pieces, name=name)

    # -- evaluation ------------------------------------------------------------

    def _piece_index(self, xs: np.ndarray) -> np.ndarray:
        # x exactly at a breakpoint belongs to the right piece; outside the
        # overall interval the edge pieces extrapolate
        return np.searchsorted(self._breaks, xs, side="right")

    def __call__(self, xs):
        scalar = np.isscalar(xs)
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = np.empty_like(xs)
        idx = self._piece_index(xs)
        for k, piece in enumerate(self.pieces):
            m = idx == k
            if m.any():
                out[m] = piece.val(xs[m])
        return float(out[0]) if scalar else out

    def _deriv(self, xs, order: int):
        scalar = np.isscalar(xs)
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = np.empty_like(xs)
        idx = self._piece_index(xs)
        for k, piece in enumerate(self.pieces):
            m = idx == k
            if m.any():
                out[m] = piece.d1(xs[m]) if order == 1 else piece.d2(xs[m])
        return float(out[0]) if scalar else out

    def deriv1(self, xs):
        """First derivative; at a breakpoint this is the right-limit value."""
        return self._deriv(xs, 1)

    def deriv2(self, xs):
        """Second derivative; at a breakpoint this is the right-limit value."""
        return self._deriv(xs, 2)

    def deriv1_left(self, x: float) -> float:
        k = int(np.searchsorted(self._breaks, x, side="left"))
        return float(self.pieces[k].d1(np.array([x]))[0])

    def deriv1_right(self, x: float) -> float:
        k = int(np.searchsorted(self._breaks, x, side="right"))
        return float(self.pieces[k].d1(np.array([x]))[0])

    # -- structure -------------------------------------------------------------

    @property
    def kink_points(self) -> np.ndarray:
        return np.array([k.x for k in self.kinks], dtype=float)

    def is_kink(self, x: float, atol: float = 1e-12) -> bool:
        pts = self.kink_points
        return bool(pts.size) and bool(np.min(np.abs(pts - x)) <= atol * (1 + abs(x)))

    def breakpoints(self) -> np.ndarray:
        return self._breaks.copy()

    def _check_continuity(self):
        for left, right, b in zip(self.pieces[:-1], self.pieces[1:], self._breaks):
            vl = float(left.val(np.array([b]))[0])
            vr = float(right.val(np.array([b]))[0])
            scale = 1.0 + max(abs(vl), abs(vr))
            if abs(vl - vr) > CONTINUITY_RTOL * scale:
                raise ValidationError(
                    f"{self.name}: discontinuous at x={b}: {vl} vs {vr}")

    def _collect_kinks(self) -> Iterable[Kink]:
        for left, right, b in zip(self.pieces[:-1], self.pieces[1:], self._breaks):
            dl = float(left.d1(np.array([b]))[0])
            dr = float(right.d1(np.array([b]))[0])
            yield Kink(float(b), dl, dr)

    def __repr__(self):
        parts = ", ".join(f"[{p.lo:g},{p.hi:g}]: {p.expr}" for p in self.pieces)
        return f"PiecewiseFn({self.name}: {parts})"


def _parse_expr(raw, name: str, index: int) -> sp.Expr:
    if isinstance(raw, sp.Expr):
        expr = raw
    else:
        try:
            expr = sp.sympify(raw, locals={"x": _X})
        except (sp.SympifyError, SyntaxError, TypeError) as exc:
            raise ValidationError(f"{name}: piece {index}: cannot parse expr {raw!r}") from exc
    extra = expr.free_symbols - {_X}
    if extra:
        raise ValidationError(
            f"{name}: piece {index}: unknown symbols {sorted(map(str, extra))} in {raw!r}")
    return expr


def as_piecewise(obj, lo: float, hi: float, name: str = "w") -> PiecewiseFn:
    """Coerce a descriptor list, expression string, number, or PiecewiseFn."""
    if isinstance(obj, PiecewiseFn):
        return obj
    if isinstance(obj, (str, int, float, sp.Expr)):
        return PiecewiseFn.from_expr(obj, lo, hi, name=name)
    return PiecewiseFn.from_descriptor(obj, name=name)
