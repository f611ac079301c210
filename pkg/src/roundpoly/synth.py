"""Synthetic shapes and scenes for tests, demos and benchmarks."""
from __future__ import annotations

import math

import numpy as np

from .rounded_poly import RoundedPolygon

SHAPE_KINDS = ("circle", "rounded_rect", "star", "blob")
CURVED_KINDS = ("circle", "rounded_rect", "blob")


def _svg(body: str, size: float = 100.0) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size:g} {size:g}">'
            f"{body}</svg>")


def circle_svg(cx=50.0, cy=50.0, r=40.0, fill="#000000") -> str:
    return _svg(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{r:.3f}" fill="{fill}"/>')


def rounded_rect_svg(x, y, w, h, r, fill="#000000") -> str:
    return _svg(f'<rect x="{x:.3f}" y="{y:.3f}" width="{w:.3f}" height="{h:.3f}" rx="{r:.3f}" fill="{fill}"/>')


def star_points(cx, cy, r_out, r_in, n, phase=0.0) -> np.ndarray:
    k = np.arange(2 * n)
    th = phase + math.pi * k / n
    r = np.where(k % 2 == 0, r_out, r_in)
    return np.stack([cx + r * np.cos(th), cy + r * np.sin(th)], axis=1)


def star_svg(cx, cy, r_out, r_in, n, phase=0.0, fill="#000000") -> str:
    pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in star_points(cx, cy, r_out, r_in, n, phase))
    return _svg(f'<polygon points="{pts}" fill="{fill}"/>')


def blob_path(rng, cx=50.0, cy=50.0, r=30.0, n=None, wobble=0.25) -> str:
    """Closed Catmull-Rom spline through jittered radial points, as cubics."""
    n = n or int(rng.integers(5, 9))
    th = 2 * math.pi * (np.arange(n) + rng.uniform(-0.2, 0.2, n)) / n
    rad = r * (1.0 + rng.uniform(-wobble, wobble, n))
    p = np.stack([cx + rad * np.cos(th), cy + rad * np.sin(th)], axis=1)
    parts = [f"M {p[0, 0]:.3f} {p[0, 1]:.3f}"]
    for i in range(n):
        p0, p1, p2, p3 = p[i - 1], p[i], p[(i + 1) % n], p[(i + 2) % n]
        c1 = p1 + (p2 - p0) / 6.0
        c2 = p2 - (p3 - p1) / 6.0
        parts.append(f"C {c1[0]:.3f} {c1[1]:.3f} {c2[0]:.3f} {c2[1]:.3f} {p2[0]:.3f} {p2[1]:.3f}")
    parts.append("Z")
    return " ".join(parts)


def blob_svg(rng, fill="#000000") -> str:
    return _svg(f'<path d="{blob_path(rng)}" fill="{fill}"/>')


def random_shape_svg(rng, kind: str) -> str:
    if kind == "circle":
        return circle_svg(rng.uniform(35, 65), rng.uniform(35, 65), rng.uniform(15, 34))
    if kind == "rounded_rect":
        w, h = rng.uniform(30, 90), rng.uniform(30, 90)
        x, y = rng.uniform(0, 100 - w), rng.uniform(0, 100 - h)
        return rounded_rect_svg(x, y, w, h, rng.uniform(0.1, 0.45) * min(w, h))
    if kind == "star":
        return star_svg(50, 50, rng.uniform(30, 45), rng.uniform(12, 25), int(rng.integers(4, 8)),
                        rng.uniform(0, math.pi))
    if kind == "blob":
        return blob_svg(rng)
    raise ValueError(f"unknown shape kind {kind!r}")


def shape_corpus(n: int = 200, seed: int = 0) -> list:
    """``(kind, svg_text)`` pairs cycling through every shape kind."""
    rng = np.random.default_rng(seed)
    return [(SHAPE_KINDS[i % len(SHAPE_KINDS)], random_shape_svg(rng, SHAPE_KINDS[i % len(SHAPE_KINDS)]))
            for i in range(n)]


# ---------------------------------------------------------------------------
# rounded-polygon scenes
# ---------------------------------------------------------------------------

def regular_polygon(cx, cy, r, n, phase=0.0, d=-1.0) -> RoundedPolygon:
    th = phase + 2 * math.pi * np.arange(n) / n
    dd = np.full(n, float(d))
    if d > 0:
        side = 2 * r * math.sin(math.pi / n)
        dd = np.full(n, min(d, 0.49 * side))
    return RoundedPolygon(np.stack([cx + r * np.cos(th), cy + r * np.sin(th), dd], axis=1))


def rect(x0, y0, x1, y1, d=-1.0) -> RoundedPolygon:
    return RoundedPolygon(np.array([[x0, y0, d], [x1, y0, d], [x1, y1, d], [x0, y1, d]], float))


def random_polygon(rng, lo=8.0, hi=120.0) -> RoundedPolygon:
    """A rectangle, rounded regular polygon or triangle inside [lo, hi]^2."""
    kind = int(rng.integers(0, 3))
    if kind == 0:
        w, h = rng.uniform(12, 70, 2)
        x, y = rng.uniform(lo, hi - w), rng.uniform(lo, hi - h)
        d = rng.uniform(0, 0.45 * min(w, h)) if rng.random() < 0.5 else -1.0
        return rect(x, y, x + w, y + h, d)
    if kind == 1:
        r = rng.uniform(8, 35)
        cx, cy = rng.uniform(lo + r, hi - r, 2)
        n = int(rng.integers(5, 9))
        return regular_polygon(cx, cy, r, n, rng.uniform(0, math.pi), d=rng.uniform(0.5, 0.9) * r)
    while True:
        pts = rng.uniform(lo, hi, (3, 2))
        u, v = pts[1] - pts[0], pts[2] - pts[0]
        a = 0.5 * abs(u[0] * v[1] - u[1] * v[0])
        if a > 150:
            return RoundedPolygon(np.hstack([pts, -np.ones((3, 1))]))


def distinct_colors(rng, k: int) -> list:
    seen, out = set(), []
    while len(out) < k:
        c = tuple(int(v) for v in rng.integers(0, 256, 3))
        if c not in seen and c != (255, 255, 255):
            seen.add(c)
            out.append(c)
    return out


def random_scene(rng, k: int):
    """``k`` random polygons with distinct colors, painted in index order."""
    polys = [random_polygon(rng) for _ in range(k)]
    return polys, distinct_colors(rng, k)
