"""Rounded polygons: ``(x, y, d)`` vertex triples and their text token form.

A vertex with ``d >= 0`` carries an inscribed arc whose tangent points sit
at distance ``d`` from the vertex along both incident edges; its radius is
``d * tan(alpha / 2)`` for interior angle ``alpha``.  ``d == -1`` marks a
sharp vertex (an endpoint of a line or arc).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .linearc import ArcPrim, LineArcPath, LinePrim

SHARP = -1.0
COLLINEAR_TOL = 1e-7
QUANT_SLACK = 0.02
FRAME = (0.0, 128.0)


class RoundnessOverflow(ValueError):
    pass


class DegenerateCorner(ValueError):
    pass


class TokenError(ValueError):
    """Strict-mode parse failure at ``line``/``column`` (both 1-based)."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class RoundedVertex(NamedTuple):
    x: float
    y: float
    d: float


@dataclass(frozen=True)
class RoundedPolygon:
    vertices: np.ndarray  # (n, 3) rows of x, y, d
    closed: bool = True

    def __post_init__(self):
        v = np.asarray(self.vertices, float).reshape(-1, 3)
        need = 3 if self.closed else 2
        if len(v) < need:
            raise ValueError(f"rounded polygon needs at least {need} vertices")
        d = v[:, 2]
        if np.any((d < 0) & (d != SHARP)):
            raise ValueError("roundness must be >= 0 or exactly -1")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite vertex")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def xy(self) -> np.ndarray:
        return self.vertices[:, :2]

    @property
    def d(self) -> np.ndarray:
        return self.vertices[:, 2]

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return (RoundedVertex(*map(float, row)) for row in self.vertices)

    @classmethod
    def from_triples(cls, triples, closed: bool = True) -> "RoundedPolygon":
        return cls(np.asarray(list(triples), float), closed)

    def __eq__(self, other):
        return (isinstance(other, RoundedPolygon) and self.closed == other.closed
                and self.vertices.shape == other.vertices.shape
                and bool(np.all(self.vertices == other.vertices)))

    __hash__ = None


def _unit(v):
    n = math.hypot(v[0], v[1])
    return v / n


def _cross(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


# ---------------------------------------------------------------------------
# line-arc chains <-> rounded polygons
# ---------------------------------------------------------------------------

def tangent_vertex(arc: ArcPrim) -> np.ndarray:
    """Intersection of the tangent rays at both arc endpoints."""
    t0, t1 = arc.start_tangent(), arc.end_tangent()
    denom = _cross(t0, t1)
    if abs(denom) < 1e-12:
        raise ValueError("arc cap violated: endpoint tangents are parallel")
    s = _cross(arc.b - arc.a, t1) / denom
    return arc.a + s * t0


def to_rounded(path: LineArcPath) -> RoundedPolygon:
    """Polygon vertices from a line/arc chain.

    Line endpoints become sharp vertices; each arc adds its tangent
    intersection ``B`` with ``d = |B - D|`` (``D`` = arc start).  Sharp
    vertices whose incident edges are collinear are dropped.
    """
    rows = []
    for prim in path.primitives:
        rows.append((*prim.a, SHARP))
        if isinstance(prim, ArcPrim):
            b = tangent_vertex(prim)
            rows.append((*b, float(np.hypot(*(b - prim.a)))))
    if not path.closed:
        rows.append((*path.primitives[-1].b, SHARP))
    v = np.array(rows)
    return RoundedPolygon(_drop_collinear(v, path.closed), path.closed)


def _drop_collinear(v: np.ndarray, closed: bool, tol: float = COLLINEAR_TOL) -> np.ndarray:
    n = len(v)
    keep = np.ones(n, bool)
    for i in range(n):
        if v[i, 2] != SHARP or (not closed and i in (0, n - 1)):
            continue
        prev = v[i - 1, :2] if i > 0 else v[n - 1, :2]
        nxt = v[(i + 1) % n, :2]
        u = v[i, :2] - prev
        w = nxt - v[i, :2]
        lu, lw = math.hypot(*u), math.hypot(*w)
        if lu < 1e-12 or lw < 1e-12:
            keep[i] = False
            continue
        if abs(_cross(u, w)) <= tol * lu * lw and float(u @ w) > 0:
            keep[i] = False
    # never drop below the minimum vertex count
    if keep.sum() < (3 if closed else 2):
        return v
    return v[keep]


def _overflow_scale(xy, d, closed, clamp, diagnostics):
    """Check that adjacent tangent points do not cross on any edge.

    With ``clamp`` the roundness on an overfull edge is scaled so the two
    tangent points meet exactly; only overflow beyond quantization slack is
    reported.
    """
    n = len(xy)
    d = d.copy()
    for i in range(n if closed else n - 1):
        j = (i + 1) % n
        length = math.hypot(*(xy[j] - xy[i]))
        need = max(d[i], 0.0) + max(d[j], 0.0)
        if need <= length * (1 + 1e-9) + 1e-12:
            continue
        bad = i if d[i] > 0 else j
        if not clamp:
            raise RoundnessOverflow(f"roundness overflow at vertex {bad}")
        s = length / need
        if d[i] > 0:
            d[i] *= s
        if d[j] > 0:
            d[j] *= s
        if diagnostics is not None and need - length > QUANT_SLACK:
            diagnostics.append(f"roundness overflow at vertex {bad} clamped by factor {s:.4f}")
    return d


def from_rounded(poly: RoundedPolygon, clamp: bool = False, diagnostics: Optional[list] = None) -> LineArcPath:
    """Rebuild the line/arc chain of a rounded polygon.

    Each vertex with ``d > 0`` gets an arc tangent to both incident edges at
    distance ``d`` from the vertex; ``d`` of ``-1`` or ``0`` stays sharp.
    Adjacent roundness values that overlap on a shared edge raise
    ``RoundnessOverflow`` unless ``clamp`` is set.
    """
    xy = np.array(poly.xy, float)
    n = len(xy)
    closed = poly.closed
    d = np.array(poly.d, float)
    if not closed:
        d[0] = d[-1] = SHARP
    d = _overflow_scale(xy, d, closed, clamp, diagnostics)

    ins, outs, arcs = [None] * n, [None] * n, [None] * n
    for i in range(n):
        ins[i] = outs[i] = xy[i]
        if d[i] <= 0 or (not closed and i in (0, n - 1)):
            continue
        u_in = _unit(xy[i - 1] - xy[i])
        u_out = _unit(xy[(i + 1) % n] - xy[i])
        cosa = float(np.clip(u_in @ u_out, -1.0, 1.0))
        alpha = math.acos(cosa)
        if alpha < 1e-9 or math.pi - alpha < 1e-9:
            raise DegenerateCorner(f"degenerate corner at vertex {i}")
        t_in = xy[i] + d[i] * u_in
        t_out = xy[i] + d[i] * u_out
        r = d[i] * math.tan(alpha / 2)
        center = xy[i] + _unit(u_in + u_out) * (d[i] / math.cos(alpha / 2))
        turn = _cross(xy[i] - xy[i - 1], xy[(i + 1) % n] - xy[i])
        sweep = math.copysign(math.pi - alpha, turn)
        ins[i], outs[i] = t_in, t_out
        arcs[i] = ArcPrim(t_in, t_out, center, r, sweep)

    prims, corners = [], []

    def push(prim, corner_before):
        if corner_before and prims:
            corners.append(len(prims) - 1)
        prims.append(prim)

    pending_corner = False
    last = n if closed else n - 1
    for i in range(last):
        j = (i + 1) % n
        if arcs[i] is not None:
            push(arcs[i], pending_corner)
            pending_corner = False
        elif i > 0 or closed:
            pending_corner = True
        a, b = outs[i], ins[j]
        if math.hypot(*(b - a)) > 1e-9:
            push(LinePrim(a, b), pending_corner)
            pending_corner = False
    if closed and prims and arcs[0] is None:
        # the junction that closes the loop sits at vertex 0
        corners.append(len(prims) - 1)
    # sharp vertices where the incident edges are collinear are not corners
    corners = [k for k in corners if _is_real_corner(prims, k, closed)]
    return LineArcPath(tuple(prims), closed, tuple(corners))


def _is_real_corner(prims, k, closed) -> bool:
    if not closed and k >= len(prims) - 1:
        return False
    a, b = prims[k], prims[(k + 1) % len(prims)]
    t0, t1 = a.end_tangent(), b.start_tangent()
    return abs(math.atan2(_cross(t0, t1), float(t0 @ t1))) > 1e-9


def radius_from_roundness(d: float, alpha: float) -> float:
    return d * math.tan(alpha / 2)


def interior_angle(poly: RoundedPolygon, i: int) -> float:
    xy = poly.xy
    n = len(xy)
    u = _unit(xy[i - 1] - xy[i])
    w = _unit(xy[(i + 1) % n] - xy[i])
    return math.acos(float(np.clip(u @ w, -1.0, 1.0)))


# ---------------------------------------------------------------------------
# text tokens
# ---------------------------------------------------------------------------

_Q = Decimal("0.01")


def format_number(v: float) -> str:
    """Two-decimal, half-away-from-zero, trailing zeros stripped."""
    if v == SHARP:
        return "-1"
    q = Decimal(repr(float(v))).quantize(_Q, rounding=ROUND_HALF_UP)
    s = format(q, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def quantize_value(v: float) -> float:
    return float(format_number(v))


def quantize(scene: Sequence[RoundedPolygon]) -> list:
    return [RoundedPolygon(np.vectorize(quantize_value)(p.vertices), p.closed) for p in scene]


def serialize(scene: Sequence[RoundedPolygon]) -> str:
    """Encode polygons as ``x,y,d`` triples, space between vertices, newline
    between paths.  Coordinates must lie in the 0..128 frame."""
    if not scene:
        raise ValueError("empty scene")
    lines = []
    lo, hi = FRAME
    for k, poly in enumerate(scene):
        xy = poly.xy
        if np.any(xy < lo - 1e-9) or np.any(xy > hi + 1e-9):
            raise ValueError(f"path {k} has coordinates outside [{lo:g}, {hi:g}]")
        lines.append(" ".join(",".join(format_number(c) for c in row) for row in poly.vertices))
    return "\n".join(lines)


_NUMBER = re.compile(r"-?\d+(?:\.\d{1,2})?\Z")


class DecodeResult(NamedTuple):
    polygons: list
    diagnostics: list


def _parse_vertex(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        return None, f"expected 3 components, got {len(parts)}"
    vals = []
    for p in parts:
        if not _NUMBER.match(p):
            return None, f"bad number {p!r}"
        vals.append(float(p))
    if vals[2] < 0 and vals[2] != SHARP:
        return None, f"negative roundness {parts[2]!r}"
    return vals, None


def deserialize(doc: str, strict: bool = False) -> DecodeResult:
    """Parse token text back into closed rounded polygons.

    Recovery mode (default) truncates a path at its first malformed vertex
    and drops paths left with fewer than 3 vertices, reporting one
    diagnostic per affected path.  ``strict=True`` raises ``TokenError``.
    """
    polys, diags = [], []
    lines = doc.split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]
    for ln, line in enumerate(lines, start=1):
        col = 1
        rows = []
        problem = None
        for chunk in line.split(" "):
            vals, err = _parse_vertex(chunk)
            if err:
                problem = (err, col)
                break
            rows.append(vals)
            col += len(chunk) + 1
        if problem and strict:
            raise TokenError(problem[0], ln, problem[1])
        if len(rows) < 3:
            msg = f"path {ln}: only {len(rows)} valid vertices, dropped"
            if strict:
                raise TokenError(msg, ln, 1)
            diags.append(msg + (f" ({problem[0]} at column {problem[1]})" if problem else ""))
            continue
        if problem:
            diags.append(f"path {ln}: truncated after {len(rows)} vertices ({problem[0]} at column {problem[1]})")
        polys.append(RoundedPolygon(np.array(rows), True))
    return DecodeResult(polys, diags)


# ---------------------------------------------------------------------------
# token accounting
# ---------------------------------------------------------------------------

_TOKENS = re.compile(r"-?\d+(?:\.\d+)?|[A-Za-z]|\S|\s")


def default_tokenizer(text: str) -> int:
    """Each number, letter, comma, space and newline counts as one token."""
    return len(_TOKENS.findall(text))


def count_tokens(doc: str, tokenizer: Optional[Callable[[str], int]] = None) -> int:
    return (tokenizer or default_tokenizer)(doc)


def compare_tokens(ours: str, raw_svg: str, tokenizer: Optional[Callable[[str], int]] = None) -> float:
    """Fractional token savings of ``ours`` relative to ``raw_svg``."""
    raw = count_tokens(raw_svg, tokenizer)
    if raw == 0:
        return 0.0
    return 1.0 - count_tokens(ours, tokenizer) / raw
