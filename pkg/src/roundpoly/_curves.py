"""Parametric curve segments with exact evaluation and arc-length inversion.

Every segment maps ``t in [0, 1]`` to the plane.  Arc length is integrated
with composite 5-point Gauss-Legendre on an adaptively refined partition, so
lookups ``length -> t`` are accurate to well below 1e-9 relative.
"""
from __future__ import annotations

import math

import numpy as np

_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class Segment:
    start: np.ndarray
    end: np.ndarray

    def point(self, t):
        raise NotImplementedError

    def deriv(self, t):
        raise NotImplementedError

    def speed(self, t):
        return np.hypot(*self.deriv(t).T)

    def transformed(self, matrix):
        raise NotImplementedError


class LineSeg(Segment):
    def __init__(self, start, end):
        self.start = np.asarray(start, float)
        self.end = np.asarray(end, float)

    def point(self, t):
        t = np.asarray(t, float)[..., None]
        return self.start + t * (self.end - self.start)

    def deriv(self, t):
        t = np.asarray(t, float)
        return np.broadcast_to(self.end - self.start, t.shape + (2,)).copy()

    def transformed(self, m):
        return LineSeg(_apply(m, self.start), _apply(m, self.end))


class CubicSeg(Segment):
    def __init__(self, p0, p1, p2, p3):
        self.ctrl = np.array([p0, p1, p2, p3], float)
        self.start, self.end = self.ctrl[0], self.ctrl[3]

    def point(self, t):
        t = np.asarray(t, float)[..., None]
        s = 1.0 - t
        p0, p1, p2, p3 = self.ctrl
        return s**3 * p0 + 3 * s * s * t * p1 + 3 * s * t * t * p2 + t**3 * p3

    def deriv(self, t):
        t = np.asarray(t, float)[..., None]
        s = 1.0 - t
        p0, p1, p2, p3 = self.ctrl
        return 3 * s * s * (p1 - p0) + 6 * s * t * (p2 - p1) + 3 * t * t * (p3 - p2)

    def transformed(self, m):
        return CubicSeg(*(_apply(m, p) for p in self.ctrl))


class QuadSeg(Segment):
    def __init__(self, p0, p1, p2):
        self.ctrl = np.array([p0, p1, p2], float)
        self.start, self.end = self.ctrl[0], self.ctrl[2]

    def point(self, t):
        t = np.asarray(t, float)[..., None]
        s = 1.0 - t
        p0, p1, p2 = self.ctrl
        return s * s * p0 + 2 * s * t * p1 + t * t * p2

    def deriv(self, t):
        t = np.asarray(t, float)[..., None]
        p0, p1, p2 = self.ctrl
        return 2 * (1.0 - t) * (p1 - p0) + 2 * t * (p2 - p1)

    def transformed(self, m):
        return QuadSeg(*(_apply(m, p) for p in self.ctrl))


class EllipticalArcSeg(Segment):
    """Elliptical arc in center parameterization.

    ``theta(t) = theta0 + t * dtheta``; the point is
    ``center + R(phi) @ (rx cos theta, ry sin theta)``.
    """

    def __init__(self, center, rx, ry, phi, theta0, dtheta):
        self.center = np.asarray(center, float)
        self.rx, self.ry, self.phi = float(rx), float(ry), float(phi)
        self.theta0, self.dtheta = float(theta0), float(dtheta)
        self.start = self.point(0.0)
        self.end = self.point(1.0)

    @classmethod
    def from_endpoints(cls, p0, p1, rx, ry, rotation_deg, large_arc, sweep):
        """SVG endpoint parameterization to center form (SVG 1.1 F.6.5/F.6.6).

        Returns a LineSeg when the radii are degenerate, ``None`` when the
        endpoints coincide (the arc is omitted).
        """
        p0 = np.asarray(p0, float)
        p1 = np.asarray(p1, float)
        if np.allclose(p0, p1, rtol=0, atol=1e-12):
            return None
        rx, ry = abs(rx), abs(ry)
        if rx < 1e-12 or ry < 1e-12:
            return LineSeg(p0, p1)
        phi = math.radians(rotation_deg % 360.0)
        c, s = math.cos(phi), math.sin(phi)
        dx, dy = (p0 - p1) / 2.0
        x1 = c * dx + s * dy
        y1 = -s * dx + c * dy
        lam = (x1 / rx) ** 2 + (y1 / ry) ** 2
        if lam > 1.0:
            k = math.sqrt(lam)
            rx, ry = rx * k, ry * k
        num = rx * rx * ry * ry - rx * rx * y1 * y1 - ry * ry * x1 * x1
        den = rx * rx * y1 * y1 + ry * ry * x1 * x1
        coef = math.sqrt(max(num, 0.0) / den)
        if bool(large_arc) == bool(sweep):
            coef = -coef
        cx1 = coef * rx * y1 / ry
        cy1 = -coef * ry * x1 / rx
        mid = (p0 + p1) / 2.0
        center = np.array([c * cx1 - s * cy1, s * cx1 + c * cy1]) + mid
        ux, uy = (x1 - cx1) / rx, (y1 - cy1) / ry
        vx, vy = (-x1 - cx1) / rx, (-y1 - cy1) / ry
        theta0 = math.atan2(uy, ux)
        dtheta = math.atan2(ux * vy - uy * vx, ux * vx + uy * vy)
        if not sweep and dtheta > 0:
            dtheta -= 2 * math.pi
        elif sweep and dtheta < 0:
            dtheta += 2 * math.pi
        seg = cls(center, rx, ry, phi, theta0, dtheta)
        # pin endpoints exactly; the center form reproduces them to ~1e-15
        seg.start, seg.end = p0, p1
        return seg

    def _rot(self):
        c, s = math.cos(self.phi), math.sin(self.phi)
        return np.array([[c, -s], [s, c]])

    def point(self, t):
        th = self.theta0 + np.asarray(t, float) * self.dtheta
        local = np.stack([self.rx * np.cos(th), self.ry * np.sin(th)], axis=-1)
        return self.center + local @ self._rot().T

    def deriv(self, t):
        th = self.theta0 + np.asarray(t, float) * self.dtheta
        local = np.stack([-self.rx * np.sin(th), self.ry * np.cos(th)], axis=-1)
        return self.dtheta * (local @ self._rot().T)

    def transformed(self, m):
        # General affine maps of ellipses: recover the image ellipse from its
        # conjugate semi-axes.
        a = np.asarray(m, float)[:2, :2]
        basis = a @ self._rot() @ np.diag([self.rx, self.ry])
        u, sv, vt = np.linalg.svd(basis)
        if np.linalg.det(u) < 0:
            u[:, 1] *= -1
            vt[1, :] *= -1
        # theta' = theta mapped through vt (a rotation or reflection)
        def remap(theta):
            v = vt @ np.array([math.cos(theta), math.sin(theta)])
            return math.atan2(v[1], v[0])
        th0 = remap(self.theta0)
        flip = np.linalg.det(vt) < 0
        dth = -self.dtheta if flip else self.dtheta
        phi = math.atan2(u[1, 0], u[0, 0])
        seg = EllipticalArcSeg(_apply(m, self.center), sv[0], sv[1], phi, th0, dth)
        seg.start, seg.end = _apply(m, self.start), _apply(m, self.end)
        return seg


def _apply(m, p):
    m = np.asarray(m, float)
    return m[:2, :2] @ np.asarray(p, float) + m[:2, 2]


class ArcLengthTable:
    """Cumulative arc length of one segment with ``length -> t`` inversion."""

    def __init__(self, seg: Segment, rtol: float = 1e-10, max_depth: int = 30):
        self.seg = seg
        breaks = [0.0]
        cum = [0.0]
        seed = np.linspace(0.0, 1.0, 9)
        intervals = list(zip(seed[:-1], seed[1:]))
        out = []
        while intervals:
            a, b = intervals.pop(0)
            whole = self._gl(a, b)
            m = 0.5 * (a + b)
            halves = self._gl(a, m) + self._gl(m, b)
            depth = math.log2(1.0 / (b - a)) if b > a else max_depth
            if abs(whole - halves) <= rtol * max(halves, 1e-300) or depth >= max_depth or halves < 1e-300:
                out.append((a, b, halves))
            else:
                intervals[0:0] = [(a, m), (m, b)]
        for a, b, ln in out:
            breaks.append(b)
            cum.append(cum[-1] + ln)
        self.breaks = np.array(breaks)
        self.cum = np.array(cum)
        self.length = float(self.cum[-1])

    def _gl(self, a, b):
        t = a + (b - a) * _GL_X
        return float((b - a) * np.dot(_GL_W, self.seg.speed(t)))

    def _partial(self, a, b):
        """Vectorized GL integral of speed over [a_k, b_k]."""
        t = a[:, None] + (b - a)[:, None] * _GL_X[None, :]
        sp = self.seg.speed(t.ravel()).reshape(t.shape)
        return (b - a) * (sp @ _GL_W)

    def t_at(self, s):
        """Curve parameters at arc lengths ``s`` (array, clipped to [0, L])."""
        s = np.clip(np.asarray(s, float), 0.0, self.length)
        j = np.searchsorted(self.cum, s, side="right") - 1
        j = np.clip(j, 0, len(self.breaks) - 2)
        lo = self.breaks[j].copy()
        hi = self.breaks[j + 1].copy()
        base = self.cum[j]
        a = self.breaks[j]
        seg_len = self.cum[j + 1] - self.cum[j]
        frac = np.where(seg_len > 0, (s - base) / np.where(seg_len > 0, seg_len, 1.0), 0.0)
        t = lo + frac * (hi - lo)
        for _ in range(40):
            f = base + self._partial(a, t) - s
            lo = np.where(f < 0, t, lo)
            hi = np.where(f > 0, t, hi)
            d = self.seg.speed(t)
            with np.errstate(divide="ignore", invalid="ignore"):
                tn = t - f / d
            bad = ~np.isfinite(tn) | (tn <= lo) | (tn >= hi)
            tn = np.where(bad, 0.5 * (lo + hi), tn)
            if np.all(np.abs(tn - t) < 1e-15):
                t = tn
                break
            t = tn
        return t
