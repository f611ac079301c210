"""Fit G1-continuous chains of lines and circular arcs to sampled paths.

The fitter works in three stages:

1. split the samples at corners (source tangent breaks or, failing that,
   sharp discrete turns) into smooth runs;
2. segment each run into the fewest primitives that fit within a reduced
   tolerance (greedy furthest reach, which is optimal for primitive count
   when feasibility is monotone in the interval);
3. refine each run jointly in intrinsic coordinates (start angle plus
   length and curvature per primitive) so consecutive primitives share
   position and tangent by construction.

Arcs sweeping 120 degrees or more are split into equal sub-arcs at the end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.optimize import least_squares

from .path_model import CORNER_ANGLE, SampledPath

ARC_CAP = 2 * math.pi / 3
DEFAULT_FIT_TOLERANCE = 0.3
DEFAULT_STRAIGHTNESS = 0.02
G1_TOLERANCE = 1e-3
ANCHOR_WEIGHT = 0.05
MIN_RETRY_TOLERANCE = 0.05


@dataclass(frozen=True)
class LinePrim:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, float)
        b = np.asarray(self.b, float)
        if np.hypot(*(b - a)) <= 1e-9:
            raise ValueError("zero-length line")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.b - self.a)))

    def start_tangent(self):
        return (self.b - self.a) / self.length

    end_tangent = start_tangent

    def sample(self, n: int) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n)[:, None]
        return self.a + t * (self.b - self.a)

    def distance(self, p) -> np.ndarray:
        p = np.asarray(p, float).reshape(-1, 2)
        d = self.b - self.a
        t = np.clip(((p - self.a) @ d) / (d @ d), 0.0, 1.0)
        return np.hypot(*(p - (self.a + t[:, None] * d)).T)

    def reversed(self):
        return LinePrim(self.b, self.a)


@dataclass(frozen=True)
class ArcPrim:
    a: np.ndarray
    b: np.ndarray
    center: np.ndarray
    radius: float
    sweep: float  # signed, positive = counterclockwise (x right, y up)

    def __post_init__(self):
        for k in ("a", "b", "center"):
            object.__setattr__(self, k, np.asarray(getattr(self, k), float))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "sweep", float(self.sweep))
        if not self.radius > 0:
            raise ValueError("arc radius must be positive")
        if self.sweep == 0:
            raise ValueError("arc sweep must be nonzero")

    @property
    def start_angle(self) -> float:
        v = self.a - self.center
        return math.atan2(v[1], v[0])

    @property
    def length(self) -> float:
        return abs(self.sweep) * self.radius

    def start_tangent(self):
        th = self.start_angle
        s = math.copysign(1.0, self.sweep)
        return s * np.array([-math.sin(th), math.cos(th)])

    def end_tangent(self):
        th = self.start_angle + self.sweep
        s = math.copysign(1.0, self.sweep)
        return s * np.array([-math.sin(th), math.cos(th)])

    def sample(self, n: int) -> np.ndarray:
        th = self.start_angle + np.linspace(0.0, self.sweep, n)
        pts = self.center + self.radius * np.stack([np.cos(th), np.sin(th)], axis=1)
        pts[0], pts[-1] = self.a, self.b
        return pts

    def distance(self, p) -> np.ndarray:
        p = np.asarray(p, float).reshape(-1, 2)
        v = p - self.center
        ang = np.arctan2(v[:, 1], v[:, 0]) - self.start_angle
        if self.sweep > 0:
            rel = np.mod(ang, 2 * np.pi)
            inside = rel <= self.sweep
        else:
            rel = np.mod(-ang, 2 * np.pi)
            inside = rel <= -self.sweep
        radial = np.abs(np.hypot(*v.T) - self.radius)
        ends = np.minimum(np.hypot(*(p - self.a).T), np.hypot(*(p - self.b).T))
        return np.where(inside, radial, ends)

    def reversed(self):
        return ArcPrim(self.b, self.a, self.center, self.radius, -self.sweep)


Primitive = Union[LinePrim, ArcPrim]


@dataclass(frozen=True)
class LineArcPath:
    primitives: tuple
    closed: bool
    corners: tuple = ()  # junction k joins primitive k and k + 1 (mod n if closed)

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "corners", tuple(sorted(set(int(c) for c in self.corners))))

    def junctions(self) -> range:
        n = len(self.primitives)
        return range(n if self.closed else n - 1)

    def sample(self, per_unit: float = 8.0, min_per_prim: int = 8) -> np.ndarray:
        chunks = []
        for p in self.primitives:
            n = max(min_per_prim, int(math.ceil(p.length * per_unit)) + 1)
            chunks.append(p.sample(n)[:-1])
        last = self.primitives[-1]
        chunks.append(last.b[None, :])
        return np.concatenate(chunks)

    def distance(self, pts) -> np.ndarray:
        pts = np.asarray(pts, float).reshape(-1, 2)
        return np.min([p.distance(pts) for p in self.primitives], axis=0)

    def max_residual(self, pts) -> float:
        return float(self.distance(pts).max())


# ---------------------------------------------------------------------------
# small geometry helpers
# ---------------------------------------------------------------------------

def _angle_between(u, v) -> float:
    return abs(math.atan2(u[0] * v[1] - u[1] * v[0], u[0] * v[0] + u[1] * v[1]))


def arc_from_intrinsic(p, theta, kappa, length) -> Primitive:
    """Primitive starting at ``p`` with heading ``theta``, curvature and length."""
    p = np.asarray(p, float)
    phi = kappa * length
    half = 0.5 * phi
    sinc = math.sin(half) / half if abs(half) > 1e-12 else 1.0 - half * half / 6.0
    end = p + length * sinc * np.array([math.cos(theta + half), math.sin(theta + half)])
    if kappa == 0.0 or phi == 0.0:
        return LinePrim(p, end)
    normal = np.array([-math.sin(theta), math.cos(theta)])
    return ArcPrim(p, end, p + normal / kappa, 1.0 / abs(kappa), phi)


def tangent_arc_to(p, tangent, q) -> Primitive:
    """The unique arc (or line) leaving ``p`` along ``tangent`` that ends at ``q``."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    t = np.asarray(tangent, float)
    t = t / np.hypot(*t)
    n = np.array([-t[1], t[0]])
    d = q - p
    along, across = float(d @ t), float(d @ n)
    chord2 = along * along + across * across
    phi = 2.0 * math.atan2(across, along)
    if abs(phi) < 1e-12:
        return LinePrim(p, q)
    kappa = 2.0 * across / chord2
    return ArcPrim(p, q, p + n / kappa, 1.0 / abs(kappa), phi)


def fit_circle(pts: np.ndarray, iterations: int = 3):
    """Kasa algebraic circle fit refined by Gauss-Newton on geometric distance.

    Returns ``(center, radius)`` or ``None`` for (near) collinear input.
    """
    pts = np.asarray(pts, float)
    mean = pts.mean(axis=0)
    q = pts - mean
    scale = np.sqrt((q * q).sum(axis=1).mean())
    if scale < 1e-12:
        return None
    q = q / scale
    a = np.column_stack([q, np.ones(len(q))])
    b = (q * q).sum(axis=1)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    c = sol[:2] / 2
    r2 = sol[2] + c @ c
    if not np.isfinite(r2) or r2 <= 0 or np.hypot(*c) > 1e6:
        return None
    r = math.sqrt(r2)
    for _ in range(iterations):
        v = q - c
        dist = np.hypot(*v.T)
        if np.any(dist < 1e-12):
            break
        u = v / dist[:, None]
        jac = np.column_stack([-u, -np.ones(len(q))])
        res = dist - r
        step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        c = c + step[:2]
        r = r + step[2]
    if not (np.isfinite(r) and r > 0):
        return None
    return c * scale + mean, r * scale


def classify_arc(center, radius, a, b, sweep, straightness_tol: float = DEFAULT_STRAIGHTNESS) -> Primitive:
    """Replace an arc whose ``|sweep|`` is below ``straightness_tol`` by its chord."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    if abs(sweep) < straightness_tol:
        return LinePrim(a, b)
    return ArcPrim(a, b, center, radius, sweep)


def subdivide_large_arcs(path: LineArcPath, cap: float = ARC_CAP) -> LineArcPath:
    """Split every arc with ``|sweep| >= cap`` into equal sub-arcs below the cap."""
    prims, corners = [], []
    old_to_new_end = []
    for prim in path.primitives:
        if isinstance(prim, ArcPrim) and abs(prim.sweep) >= cap:
            prims.extend(split_arc(prim, int(math.ceil(abs(prim.sweep) / (cap - 1e-9)))))
        else:
            prims.append(prim)
        old_to_new_end.append(len(prims) - 1)
    n_new = len(prims)
    for c in path.corners:
        corners.append(old_to_new_end[c] % n_new if path.closed else old_to_new_end[c])
    return LineArcPath(tuple(prims), path.closed, tuple(corners))


def split_arc(arc: ArcPrim, k: int) -> list:
    if k <= 1:
        return [arc]
    th0 = arc.start_angle
    step = arc.sweep / k
    pts = [arc.a]
    for i in range(1, k):
        th = th0 + i * step
        pts.append(arc.center + arc.radius * np.array([math.cos(th), math.sin(th)]))
    pts.append(arc.b)
    return [ArcPrim(pts[i], pts[i + 1], arc.center, arc.radius, step) for i in range(k)]


# ---------------------------------------------------------------------------
# segmentation
# ---------------------------------------------------------------------------

@dataclass
class _Piece:
    i: int
    j: int
    kind: str  # "line" | "arc"
    theta: float = 0.0
    kappa: float = 0.0
    length: float = 0.0


def _line_fit(q: np.ndarray):
    mean = q.mean(axis=0)
    _, _, vt = np.linalg.svd(q - mean, full_matrices=False)
    d = vt[0]
    if d @ (q[-1] - q[0]) < 0:
        d = -d
    n = np.array([-d[1], d[0]])
    resid = float(np.abs((q - mean) @ n).max())
    s0 = float((q[0] - mean) @ d)
    s1 = float((q[-1] - mean) @ d)
    return resid, math.atan2(d[1], d[0]), s1 - s0


def _arc_fit(q: np.ndarray):
    fit = fit_circle(q)
    if fit is None:
        return None
    c, r = fit
    v = q - c
    ang = np.unwrap(np.arctan2(v[:, 1], v[:, 0]))
    steps = np.diff(ang)
    if len(steps) and not (np.all(steps > 0) or np.all(steps < 0)):
        return None
    sweep = float(ang[-1] - ang[0])
    resid = float(np.abs(np.hypot(*v.T) - r).max())
    th = ang[0]
    heading = th + math.copysign(math.pi / 2, sweep)
    return resid, heading, math.copysign(1.0 / r, sweep), abs(sweep) * r, sweep


def _feasible(q: np.ndarray, tol: float, straightness: float) -> Optional[_Piece]:
    if len(q) == 2:
        d = q[1] - q[0]
        return _Piece(0, 1, "line", math.atan2(d[1], d[0]), 0.0, float(np.hypot(*d)))
    lres, lth, llen = _line_fit(q)
    if lres <= tol and llen > 0:
        return _Piece(0, len(q) - 1, "line", lth, 0.0, llen)
    arc = _arc_fit(q)
    if arc is None:
        return None
    ares, heading, kappa, length, sweep = arc
    if ares <= tol and abs(sweep) >= straightness and abs(sweep) <= 2 * math.pi + 1e-9:
        return _Piece(0, len(q) - 1, "arc", heading, kappa, length)
    return None


def _segment_run(q: np.ndarray, tol: float, straightness: float) -> list:
    """Greedy furthest-reach cover of ``q`` by feasible pieces."""
    pieces = []
    i = 0
    last = len(q) - 1
    while i < last:
        best = _feasible(q[i:i + 2], tol, straightness)
        best_j = i + 1
        step = 2
        lo, hi = i + 1, None
        while True:
            j = min(i + step, last)
            pc = _feasible(q[i:j + 1], tol, straightness)
            if pc is None:
                hi = j
                break
            best, best_j, lo = pc, j, j
            if j == last:
                break
            step *= 2
        if hi is not None:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                pc = _feasible(q[i:mid + 1], tol, straightness)
                if pc is None:
                    hi = mid
                else:
                    best, best_j, lo = pc, mid, mid
        best.i, best.j = i, best_j
        pieces.append(best)
        i = best_j
    return pieces


# ---------------------------------------------------------------------------
# joint refinement in intrinsic coordinates
# ---------------------------------------------------------------------------

class _Chain:
    """Vectorized chain of constant-curvature pieces with analytic Jacobian.

    Positions are handled as complex numbers; a piece starting at ``z`` with
    heading ``theta``, curvature ``kappa`` and length ``L`` displaces the
    chain by ``integral_0^L exp(i (theta + kappa s)) ds``.
    """

    def __init__(self, q, pieces, start_fixed: Optional[np.ndarray], end_fixed: Optional[np.ndarray],
                 periodic: bool, turns: int, weight: float = 1e3):
        self.q = q[:, 0] + 1j * q[:, 1]
        self.pieces = pieces
        self.start_fixed = None if start_fixed is None else complex(*start_fixed)
        self.end_fixed = None if end_fixed is None else complex(*end_fixed)
        self.periodic = periodic
        self.turns = turns
        self.is_arc = np.array([p.kind == "arc" for p in pieces])
        self.arc_idx = np.flatnonzero(self.is_arc)
        self.n = len(pieces)
        owner, idx = [], []
        for k, p in enumerate(pieces):
            # a boundary sample belongs to the piece it starts
            rng = np.arange(p.i, p.j + (1 if k == len(pieces) - 1 else 0))
            owner.append(np.full(len(rng), k))
            idx.append(rng)
        self.owner = np.concatenate(owner)
        self.samples = self.q[np.concatenate(idx)]
        self.weight = weight
        self.o = 0 if self.start_fixed is not None else 2
        # weak pull of each piece start toward its boundary sample; distances
        # are measured to whole carriers, so without it pieces can slide
        self.anchors = self.q[[p.i for p in pieces]]

    def pack(self, p0, theta0, lengths, kappas):
        head = [] if self.start_fixed is not None else [p0[0], p0[1]]
        return np.concatenate([head, [theta0], lengths, kappas[self.is_arc]])

    def unpack(self, x):
        o = self.o
        p0 = self.start_fixed if o == 0 else complex(x[0], x[1])
        theta0 = x[o]
        lengths = x[o + 1:o + 1 + self.n]
        kappas = np.zeros(self.n)
        kappas[self.is_arc] = x[o + 1 + self.n:]
        return p0, theta0, lengths, kappas

    def geometry(self, x):
        p0, theta0, lengths, kappas = self.unpack(x)
        phi = kappas * lengths
        thetas = theta0 + np.concatenate([[0.0], np.cumsum(phi)])
        half = 0.5 * phi
        small = np.abs(half) < 1e-8
        sinc = np.where(small, 1.0 - half * half / 6.0, np.sin(half) / np.where(small, 1.0, half))
        disp = lengths * sinc * np.exp(1j * (thetas[:-1] + half))
        starts = p0 + np.concatenate([[0.0], np.cumsum(disp)])
        return starts, thetas, lengths, kappas

    def _distance_terms(self, starts, thetas, kappas):
        k = self.owner
        q = self.samples - starts[k]
        e = np.exp(1j * thetas[k])
        nrm = 1j * e
        kap = kappas[k]
        u = 2 * (q.real * nrm.real + q.imag * nrm.imag) - kap * np.abs(q) ** 2
        w = np.sqrt(np.maximum(1.0 - kap * u, 1e-12))
        return q, e, nrm, kap, u, w, u / (1.0 + w)

    def residuals(self, x):
        starts, thetas, lengths, kappas = self.geometry(x)
        d = self._distance_terms(starts, thetas, kappas)[-1]
        extra = []
        if self.end_fixed is not None:
            r = self.weight * (starts[-1] - self.end_fixed)
            extra += [r.real, r.imag]
        if self.periodic:
            r = self.weight * (starts[-1] - starts[0])
            extra += [r.real, r.imag, self.weight * 10.0 * (thetas[-1] - thetas[0] - 2 * math.pi * self.turns)]
        neg = np.where(lengths < 1e-6, (1e-6 - lengths) * self.weight, 0.0)
        a = ANCHOR_WEIGHT * (starts[:-1] - self.anchors)
        return np.concatenate([d, np.array(extra), neg, a.real, a.imag])

    def _moments(self, thetas, lengths, kappas):
        """First moments ``integral_0^L s exp(i (theta + kappa s)) ds``."""
        x = 1j * kappas
        L = lengths
        small = np.abs(kappas * L) < 1e-3
        xs = np.where(small, 1.0, x)
        big = np.exp(xs * L) * (L / xs - 1.0 / xs ** 2) + 1.0 / xs ** 2
        series = sum(x ** m * L ** (m + 2) / (math.factorial(m) * (m + 2)) for m in range(6))
        return np.exp(1j * thetas[:-1]) * np.where(small, series, big)

    def jacobian(self, x):
        starts, thetas, lengths, kappas = self.geometry(x)
        q, e, nrm, kap, u, w, d = self._distance_terms(starts, thetas, kappas)
        n, o = self.n, self.o
        npar = len(x)
        m_samples = len(self.samples)
        dd_du = ((1.0 + w) + u * kap / (2 * w)) / (1.0 + w) ** 2
        dd_dkap_direct = (u * u / (2 * w)) / (1.0 + w) ** 2
        # gradient of u with respect to the piece start (as complex vector)
        gs = -2 * nrm + 2 * kap * q
        du_dth = -2 * (q.real * e.real + q.imag * e.imag)
        du_dkap = -np.abs(q) ** 2
        mom = self._moments(thetas, lengths, kappas)
        end_tan = np.exp(1j * thetas[1:])

        def start_partials(k_arr, z):
            """d(start_k)/dparams, d(theta_k)/dparams for targets at points z."""
            rows = len(k_arr)
            ds = np.zeros((rows, npar), complex)
            dth = np.zeros((rows, npar))
            if o:
                ds[:, 0] = 1.0
                ds[:, 1] = 1j
            ds[:, o] = 1j * (z - (self.start_fixed if o == 0 else complex(x[0], x[1])))
            dth[:, o] = 1.0
            for l in range(n):
                mask = k_arr > l
                if not np.any(mask):
                    continue
                rel = z[mask] - starts[l + 1]
                ds[mask, o + 1 + l] = end_tan[l] + kappas[l] * 1j * rel
                dth[mask, o + 1 + l] = kappas[l]
                if self.is_arc[l]:
                    col = o + 1 + n + int(np.searchsorted(self.arc_idx, l))
                    ds[mask, col] = 1j * mom[l] + lengths[l] * 1j * rel
                    dth[mask, col] = lengths[l]
            return ds, dth

        k = self.owner
        ds, dth = start_partials(k, starts[k])
        jac = np.zeros((m_samples, npar))
        du = (gs.real[:, None] * ds.real + gs.imag[:, None] * ds.imag) + du_dth[:, None] * dth
        for a_pos, l in enumerate(self.arc_idx):
            col = o + 1 + n + a_pos
            sel = k == l
            du[sel, col] += du_dkap[sel]
        jac[:] = dd_du[:, None] * du
        for a_pos, l in enumerate(self.arc_idx):
            col = o + 1 + n + a_pos
            sel = k == l
            jac[sel, col] += dd_dkap_direct[sel]
        blocks = [jac]
        kend = np.array([n])
        ds_end, dth_end = start_partials(kend, starts[-1:])
        if self.end_fixed is not None:
            blocks += [self.weight * ds_end.real, self.weight * ds_end.imag]
        if self.periodic:
            ds_0 = np.zeros((1, npar), complex)
            if o:
                ds_0[0, 0], ds_0[0, 1] = 1.0, 1j
            diff = ds_end - ds_0
            dturn = dth_end.copy()
            dturn[:, o] = 0.0
            blocks += [self.weight * diff.real, self.weight * diff.imag, self.weight * 10.0 * dturn]
        neg = np.zeros((n, npar))
        act = lengths < 1e-6
        neg[np.flatnonzero(act), o + 1 + np.flatnonzero(act)] = -self.weight
        blocks.append(neg)
        ds_a, _ = start_partials(np.arange(n), starts[:-1])
        blocks += [ANCHOR_WEIGHT * ds_a.real, ANCHOR_WEIGHT * ds_a.imag]
        return np.vstack(blocks)

    def primitives(self, x) -> list:
        starts, thetas, lengths, kappas = self.geometry(x)
        prims = []
        for k in range(self.n):
            if lengths[k] <= 1e-9:
                continue
            kap = kappas[k] if self.is_arc[k] else 0.0
            prims.append(arc_from_intrinsic((starts[k].real, starts[k].imag), thetas[k], kap, lengths[k]))
        return prims


def _tangent_init(q, pieces, p0, theta0):
    """Lengths and curvatures of a chain that leaves ``p0`` along ``theta0``
    and bends each piece to pass through its end sample (G1 by construction)."""
    lengths, kappas = [], []
    p, th = np.asarray(p0, float), theta0
    for pc in pieces:
        t = np.array([math.cos(th), math.sin(th)])
        d = q[pc.j] - p
        along, across = float(d @ t), float(d[1] * t[0] - d[0] * t[1])
        if pc.kind == "line" or abs(across) < 1e-12:
            L = max(along, 1e-6)
            lengths.append(L)
            kappas.append(0.0)
            p = p + L * t
            continue
        chord2 = along * along + across * across
        phi = 2.0 * math.atan2(across, along)
        kap = 2.0 * across / chord2
        lengths.append(abs(phi / kap))
        kappas.append(kap)
        p, th = q[pc.j], th + phi
    return np.array(lengths), np.array(kappas)


def _refine(q, pieces, start_fixed, end_fixed, periodic, init="fits"):
    turns = 0
    if periodic:
        total = sum(p.kappa * p.length for p in pieces)
        turns = int(round(total / (2 * math.pi))) or (1 if total >= 0 else -1)
    chain = _Chain(q, pieces, start_fixed, end_fixed, periodic, turns)
    p0 = q[0] if start_fixed is None else start_fixed
    if init == "tangent":
        lengths, kappas = _tangent_init(q, pieces, p0, pieces[0].theta)
    else:
        lengths = np.array([p.length for p in pieces])
        kappas = np.array([p.kappa for p in pieces])
    x0 = chain.pack(p0, pieces[0].theta, lengths, kappas)
    x = x0
    # continuation on the constraint weight keeps the early iterations well
    # conditioned when the independent fits do not chain up exactly
    for weight, tol in ((1.0, 1e-8), (1e3, 1e-12)):
        chain.weight = weight
        x = least_squares(chain.residuals, x, jac=chain.jacobian, method="trf",
                          xtol=tol, ftol=tol, gtol=tol, max_nfev=50 + 5 * len(x0)).x
    return chain.primitives(x)


def _snap_end(prims: list, target: np.ndarray) -> list:
    """Move the chain end exactly onto ``target`` (sub-micro adjustments)."""
    last = prims[-1]
    if isinstance(last, ArcPrim) and abs(last.sweep) >= math.pi:
        prims[-1:] = split_arc(last, 2)
        last = prims[-1]
    if isinstance(last, ArcPrim):
        prims[-1] = tangent_arc_to(last.a, last.start_tangent(), target)
    else:
        prims[-1] = LinePrim(last.a, target)
    return prims


def _polyline(q: np.ndarray) -> list:
    prims = []
    for a, b in zip(q[:-1], q[1:]):
        if np.hypot(*(b - a)) > 1e-9:
            prims.append(LinePrim(a, b))
    return prims


def _fit_run(q, tol, straightness, start_fixed, end_fixed, periodic, max_splits=12):
    """Fit one smooth run; returns ``(primitives, internal_corners)``."""
    seg_tol = 0.5 * tol
    q_in = q
    pieces = None
    if periodic:
        arc = _arc_fit(q)
        if arc is not None and arc[0] <= seg_tol:
            res, heading, kappa, length, sweep = arc
            pieces = [_Piece(0, len(q) - 1, "arc", heading, kappa, length)]
    if pieces is None:
        pieces = _segment_run(q, seg_tol, straightness)
        if periodic and len(pieces) > 1:
            # restart the loop where the last piece begins so the seam does
            # not cut a piece in two
            r = pieces[-1].i
            ring = np.roll(q[:-1], -r, axis=0)
            q2 = np.vstack([ring, ring[:1]])
            pieces2 = _segment_run(q2, seg_tol, straightness)
            if len(pieces2) <= len(pieces):
                q, pieces = q2, pieces2
    target = start_fixed if periodic and start_fixed is not None else end_fixed

    def attempt(init):
        try:
            prims = _refine(q, pieces, start_fixed, end_fixed, periodic, init)
        except (ValueError, np.linalg.LinAlgError):
            return None
        if not prims:
            return None
        n_ref = len(prims)
        end = target if target is not None else (prims[0].a if periodic else None)
        if end is not None:
            prims = _snap_end(prims, end)
        return prims, n_ref, LineArcPath(tuple(prims), False).distance(q)

    for _ in range(max_splits):
        got = attempt("fits")
        if got is None or got[2].max() > tol:
            alt = attempt("tangent")
            if alt is not None and (got is None or alt[2].max() < got[2].max()):
                got = alt
        if got is not None:
            prims, n_ref, resid = got
            retype = [k for k, p in enumerate(prims) if isinstance(p, ArcPrim) and abs(p.sweep) < straightness]
            if resid.max() <= tol and not retype and n_ref == len(pieces):
                return prims, ()
            if resid.max() <= tol and retype and n_ref == len(pieces):
                for k in retype:
                    pieces[k].kind = "line"
                    pieces[k].kappa = 0.0
                continue
            worst = _worst_piece(pieces, resid)
        else:
            prims = []
            worst = max(range(len(pieces)), key=lambda k: pieces[k].j - pieces[k].i)
        pc = pieces[worst]
        if pc.kind == "line" and prims:
            # under G1 a line split into lines cannot bend; let it curve first
            pc.kind = "arc"
            continue
        if pc.j - pc.i < 2:
            break
        mid = (pc.i + pc.j) // 2
        left = _feasible(q[pc.i:mid + 1], seg_tol, straightness) or _Piece(0, 0, "line")
        right = _feasible(q[mid:pc.j + 1], seg_tol, straightness) or _Piece(0, 0, "line")
        for part, (a, b) in ((left, (pc.i, mid)), (right, (mid, pc.j))):
            part.i, part.j = a, b
            if part.length == 0.0:
                d = q[b] - q[a]
                part.theta, part.length = math.atan2(d[1], d[0]), float(np.hypot(*d))
        pieces[worst:worst + 1] = [left, right]
    if tol > MIN_RETRY_TOLERANCE:
        # a tighter run segments more finely, which often escapes the bad
        # basin; its result satisfies the looser tolerance too
        return _fit_run(q_in, 0.5 * tol, straightness, start_fixed, end_fixed, periodic, max_splits)
    prims = _polyline(q)
    return prims, tuple(range(len(prims) - 1))


def _worst_piece(pieces, resid):
    best, worst = -1.0, 0
    for k, p in enumerate(pieces):
        r = resid[p.i:p.j + 1].max()
        if r > best:
            best, worst = r, k
    return worst


def _detect_corners(pts: np.ndarray, closed: bool, angle: float) -> list:
    n = len(pts)
    idx = range(n) if closed else range(1, n - 1)
    turns = np.zeros(n)
    for i in idx:
        u = pts[i] - pts[i - 1]
        v = pts[(i + 1) % n] - pts[i]
        if np.hypot(*u) > 0 and np.hypot(*v) > 0:
            turns[i] = _angle_between(u, v)
    out = []
    for i in idx:
        if turns[i] > angle and turns[i] >= turns[i - 1] and turns[i] >= turns[(i + 1) % n]:
            if out and out[-1] == i - 1:
                continue
            out.append(i)
    return out


def with_corners(sampled: SampledPath):
    """Merge exact source corners into the sample sequence."""
    pts = [p for p in sampled.points]
    n = len(pts)
    corner_idx = []
    inserts = []
    for f, x, y in sampled.corners:
        k = int(round(f))
        if abs(f - k) < 1e-6:
            pts[k % n] = np.array([x, y])
            corner_idx.append(k % n)
        else:
            inserts.append((math.floor(f), np.array([x, y])))
    for after, p in sorted(inserts, key=lambda t: -t[0]):
        pts.insert(after + 1, p)
        corner_idx = [c + 1 if c > after else c for c in corner_idx]
        corner_idx.append(after + 1)
    return np.array(pts), sorted(set(corner_idx))


def fit_linearc(samples: SampledPath, fit_tolerance: float = DEFAULT_FIT_TOLERANCE,
                straightness_tol: float = DEFAULT_STRAIGHTNESS,
                corner_angle: float = CORNER_ANGLE) -> LineArcPath:
    """Fit a line/arc chain within ``fit_tolerance`` of every sample.

    Junctions are G1 except those listed in ``corners``.  Arcs are capped
    below 120 degrees.  The worst case is a polyline through the samples.
    """
    if fit_tolerance <= 0:
        raise ValueError("fit_tolerance must be positive")
    if len(samples.corners):
        pts, corners = with_corners(samples)
    else:
        pts = samples.points
        corners = _detect_corners(pts, samples.closed, corner_angle)
    closed = samples.closed
    n = len(pts)
    prims: list = []
    junction_corners: list = []

    def add_run(q, start_fixed, end_fixed, periodic, leading_corner):
        run, internal = _fit_run(q, fit_tolerance, straightness_tol, start_fixed, end_fixed, periodic)
        base = len(prims)
        if leading_corner and base:
            junction_corners.append(base - 1)
        junction_corners.extend(base + c for c in internal)
        prims.extend(run)

    if closed and not corners:
        q = np.vstack([pts, pts[:1]])
        add_run(q, None, None, True, False)
    elif closed:
        rot = corners[0]
        ring = np.roll(pts, -rot, axis=0)
        cs = [(c - rot) % n for c in corners] + [n]
        ring = np.vstack([ring, ring[:1]])
        for a, b in zip(cs[:-1], cs[1:]):
            add_run(ring[a:b + 1], ring[a], ring[b], False, True)
        if prims:
            junction_corners.append(len(prims) - 1)
    else:
        cs = [0] + [c for c in corners if 0 < c < n - 1] + [n - 1]
        for a, b in zip(cs[:-1], cs[1:]):
            add_run(pts[a:b + 1], pts[a], pts[b], False, a != 0)
    if closed and prims:
        # seal the loop exactly
        first = prims[0].a
        if np.hypot(*(prims[-1].b - first)) > 0:
            prims = _snap_end(prims, first)
    path = LineArcPath(tuple(prims), closed, tuple(junction_corners))
    return subdivide_large_arcs(path)


def check_g1(path: LineArcPath, tol: float = G1_TOLERANCE) -> list:
    """Junction indices (not flagged as corners) whose tangents disagree."""
    bad = []
    prims = path.primitives
    for k in path.junctions():
        if k in path.corners:
            continue
        a, b = prims[k], prims[(k + 1) % len(prims)]
        if _angle_between(a.end_tangent(), b.start_tangent()) > tol:
            bad.append(k)
    return bad


def check_chaining(path: LineArcPath, tol: float = 1e-6) -> list:
    prims = path.primitives
    return [k for k in path.junctions() if np.hypot(*(prims[k].b - prims[(k + 1) % len(prims)].a)) > tol]
