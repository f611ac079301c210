"""Software rasterizer and image metrics.

All geometry lives in the 128-unit normalized frame; a raster of ``size``
pixels maps unit ``x`` to pixel ``x * size / 128`` and tests coverage at
pixel centers.  Filling uses nonzero winding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from PIL import Image
from scipy.spatial import cKDTree

from .linearc import ArcPrim, LineArcPath
from .path_model import CANVAS

DEFAULT_MASK_RESOLUTION = 256
DEFAULT_OUTLINE_SIZE = 448
DEFAULT_STROKE_WIDTH = 2.0
SAGITTA_PX = 0.1
SSIM_WINDOW = 8
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
CHAMFER_SCALE = 1.0 / CANVAS


@dataclass(frozen=True)
class Raster:
    """Row-major image with samples in [0, 1]; shape (h, w) or (h, w, 3)."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=float)
        if a.ndim not in (2, 3) or (a.ndim == 3 and a.shape[2] != 3):
            raise ValueError(f"raster must be (h, w) or (h, w, 3), got {a.shape}")
        if a.shape[0] == 0 or a.shape[1] == 0:
            raise ValueError("empty raster")
        if np.any(a < 0) or np.any(a > 1) or not np.all(np.isfinite(a)):
            raise ValueError("raster samples must lie in [0, 1]")
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    @classmethod
    def blank(cls, size: int, channels: int = 3, value: float = 1.0) -> "Raster":
        shape = (size, size) if channels == 1 else (size, size, 3)
        return cls(np.full(shape, value))

    def gray(self) -> "Raster":
        """Rec. 601 luminance."""
        if self.channels == 1:
            return self
        return Raster(np.clip(self.data @ np.array([0.299, 0.587, 0.114]), 0.0, 1.0))

    def rgb(self) -> "Raster":
        if self.channels == 3:
            return self
        return Raster(np.repeat(self.data[:, :, None], 3, axis=2))

    def quantized(self) -> "Raster":
        return Raster(np.round(self.data * 255.0) / 255.0)


@dataclass(frozen=True)
class Mask:
    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.ndim != 2 or b.shape[0] == 0 or b.shape[1] == 0:
            raise ValueError("mask must be a non-empty 2-D array")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class Metrics:
    mse: float
    ssim: float
    chamfer: Optional[float] = None


# ---------------------------------------------------------------------------
# flattening
# ---------------------------------------------------------------------------

def _arc_points(arc: ArcPrim, px_per_unit: float, sagitta_px: float) -> np.ndarray:
    r_px = arc.radius * px_per_unit
    if r_px <= sagitta_px:
        n = 1
    else:
        step = 2.0 * math.acos(1.0 - sagitta_px / r_px)
        n = max(1, math.ceil(abs(arc.sweep) / step))
    a0 = math.atan2(*(arc.a - arc.center)[::-1])
    th = a0 + arc.sweep * np.arange(1, n) / n
    mid = arc.center + arc.radius * np.stack([np.cos(th), np.sin(th)], axis=1)
    return np.vstack([mid, arc.b[None]])


def flatten(path, size: int, sagitta_px: float = SAGITTA_PX) -> list:
    """Loops of pixel-space vertices for any supported path-like input.

    Accepts a LineArcPath, a RoundedPolygon, an ``(n, 2)`` array of
    normalized points, or a list of those (a compound path).
    """
    from .rounded_poly import RoundedPolygon, from_rounded

    k = size / CANVAS
    if isinstance(path, (list, tuple)):
        out = []
        for p in path:
            out.extend(flatten(p, size, sagitta_px))
        return out
    if isinstance(path, RoundedPolygon):
        path = from_rounded(path, clamp=True)
    if isinstance(path, LineArcPath):
        pts = [path.primitives[0].a[None]]
        for prim in path.primitives:
            if isinstance(prim, ArcPrim):
                pts.append(_arc_points(prim, k, sagitta_px))
            else:
                pts.append(prim.b[None])
        loop = np.vstack(pts)
        if np.allclose(loop[0], loop[-1], atol=1e-9) and len(loop) > 1:
            loop = loop[:-1]
        return [(loop * k, path.closed)]
    arr = np.asarray(path, float)
    return [(arr * k, True)]


# ---------------------------------------------------------------------------
# coverage
# ---------------------------------------------------------------------------

def _winding_coverage(loops: Iterable[np.ndarray], h: int, w: int) -> np.ndarray:
    """Nonzero-winding pixel-center coverage of a set of closed loops."""
    acc = np.zeros((h, w + 1), dtype=np.int32)
    for loop in loops:
        if len(loop) < 3:
            continue
        p0 = loop
        p1 = np.roll(loop, -1, axis=0)
        y0, y1 = p0[:, 1], p1[:, 1]
        keep = y0 != y1
        if not np.any(keep):
            continue
        x0, y0, x1, y1 = p0[keep, 0], y0[keep], p1[keep, 0], y1[keep]
        direction = np.where(y1 > y0, 1, -1)
        ylo, yhi = np.minimum(y0, y1), np.maximum(y0, y1)
        # rows whose center yc = r + 0.5 satisfies ylo <= yc < yhi
        r0 = np.clip(np.ceil(ylo - 0.5).astype(np.int64), 0, h)
        r1 = np.clip(np.ceil(yhi - 0.5).astype(np.int64), 0, h)
        counts = np.maximum(r1 - r0, 0)
        total = int(counts.sum())
        if total == 0:
            continue
        edge = np.repeat(np.arange(len(counts)), counts)
        offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        rows = r0[edge] + offs
        yc = rows + 0.5
        t = (yc - y0[edge]) / (y1[edge] - y0[edge])
        xc = x0[edge] + t * (x1[edge] - x0[edge])
        # first column whose center lies strictly right of the crossing
        cols = np.clip(np.floor(xc - 0.5).astype(np.int64) + 1, 0, w)
        np.add.at(acc, (rows, cols), direction[edge])
    return np.cumsum(acc, axis=1)[:, :w] != 0


def coverage(path, size: int, supersample: int = 1) -> np.ndarray:
    """Boolean coverage at ``size * supersample`` resolution."""
    n = size * supersample
    loops = [pts for pts, _ in flatten(path, n)]
    return _winding_coverage(loops, n, n)


def path_mask(poly, resolution: int = DEFAULT_MASK_RESOLUTION) -> Mask:
    return Mask(coverage(poly, resolution, 1))


def _box_down(a: np.ndarray, s: int) -> np.ndarray:
    if s == 1:
        return a
    h, w = a.shape[0] // s, a.shape[1] // s
    return a.reshape(h, s, w, s, *a.shape[2:]).mean(axis=(1, 3))


def _color(c) -> np.ndarray:
    c = np.asarray(c, float).reshape(-1)
    if c.size == 1:
        c = np.repeat(c, 3)
    if np.any(c > 1.0):
        c = c / 255.0
    return c


def composite(covers: Sequence[np.ndarray], colors: Sequence, order: Sequence[int],
              background: float = 1.0) -> np.ndarray:
    """Paint coverage masks back-to-front; returns an (h, w, 3) array."""
    h, w = covers[0].shape if len(covers) else (0, 0)
    img = np.full((h, w, 3), background)
    for i in order:
        img[covers[i]] = _color(colors[i])
    return img


def render_fill(scene: Sequence, order: Optional[Sequence[int]] = None, size: int = DEFAULT_MASK_RESOLUTION,
                supersample: int = 1) -> Raster:
    """Paint ``(path, rgb)`` pairs back-to-front in ``order`` on white."""
    if supersample < 1:
        raise ValueError("supersample must be >= 1")
    if order is None:
        order = range(len(scene))
    order = list(order)
    if sorted(order) != list(range(len(scene))):
        raise ValueError("order must be a permutation of scene indices")
    n = size * supersample
    img = np.ones((n, n, 3))
    for i in order:
        path, color = scene[i]
        img[coverage(path, size, supersample)] = _color(color)
    return Raster(np.clip(_box_down(img, supersample), 0.0, 1.0))


def _stroke_cover(loops, h: int, w: int, width: float) -> np.ndarray:
    """Pixels whose center lies within ``width / 2`` of any segment."""
    out = np.zeros((h, w), dtype=bool)
    half = width / 2.0
    for pts, closed in loops:
        if len(pts) == 1:
            segs = [(pts[0], pts[0])]
        else:
            a = pts if closed else pts[:-1]
            b = np.roll(pts, -1, axis=0) if closed else pts[1:]
            segs = zip(a, b)
        for a, b in segs:
            x_lo = max(int(math.floor(min(a[0], b[0]) - half - 0.5)), 0)
            x_hi = min(int(math.ceil(max(a[0], b[0]) + half + 0.5)), w)
            y_lo = max(int(math.floor(min(a[1], b[1]) - half - 0.5)), 0)
            y_hi = min(int(math.ceil(max(a[1], b[1]) + half + 0.5)), h)
            if x_lo >= x_hi or y_lo >= y_hi:
                continue
            xs = np.arange(x_lo, x_hi) + 0.5
            ys = np.arange(y_lo, y_hi) + 0.5
            px, py = np.meshgrid(xs, ys)
            d = b - a
            dd = float(d @ d)
            if dd == 0.0:
                t = np.zeros_like(px)
            else:
                t = np.clip(((px - a[0]) * d[0] + (py - a[1]) * d[1]) / dd, 0.0, 1.0)
            dist2 = (px - a[0] - t * d[0]) ** 2 + (py - a[1] - t * d[1]) ** 2
            out[y_lo:y_hi, x_lo:x_hi] |= dist2 <= half * half
    return out


def stroke_coverage(path, size: int, width: float, supersample: int = 1) -> np.ndarray:
    n = size * supersample
    return _stroke_cover(flatten(path, n), n, n, width * supersample)


def render_outline(scene: Sequence, size: int = DEFAULT_OUTLINE_SIZE,
                   stroke_width: float = DEFAULT_STROKE_WIDTH) -> Raster:
    """Black fixed-width boundaries on white, no fills."""
    if stroke_width <= 0:
        raise ValueError("stroke_width must be positive")
    loops = []
    for path in scene:
        loops.extend(flatten(path, size))
    ink = _stroke_cover(loops, size, size, stroke_width)
    return Raster(np.where(ink, 0.0, 1.0))


def render_scene(polys: Sequence, colors: Sequence, order: Sequence[int], size: int,
                 strokes: Optional[Sequence] = None, supersample: int = 1,
                 stroke_scale: float = 1.0) -> Raster:
    """Fill each path then its optional stroke, back-to-front.

    ``strokes[i]`` is ``None`` or an object with ``width`` (pixels at
    ``size / stroke_scale``), ``color`` and ``accepted`` attributes.
    """
    n = size * supersample
    img = np.ones((n, n, 3))
    for i in order:
        img[coverage(polys[i], size, supersample)] = _color(colors[i])
        s = strokes[i] if strokes is not None else None
        if s is not None and getattr(s, "accepted", True):
            img[stroke_coverage(polys[i], size, s.width * stroke_scale, supersample)] = _color(s.color)
    return Raster(np.clip(_box_down(img, supersample), 0.0, 1.0))


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def _pair(a: Raster, b: Raster):
    if a.data.shape != b.data.shape:
        raise ValueError(f"dimension mismatch: {a.data.shape} vs {b.data.shape}")
    return a.data, b.data


def mse(a: Raster, b: Raster) -> float:
    x, y = _pair(a, b)
    return float(np.mean((x - y) ** 2))


def _window_sums(a: np.ndarray, k: int) -> np.ndarray:
    c = np.zeros((a.shape[0] + 1, a.shape[1] + 1))
    c[1:, 1:] = a.cumsum(0).cumsum(1)
    return c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]


def ssim(a: Raster, b: Raster, window: int = SSIM_WINDOW) -> float:
    """Mean SSIM over all valid ``window``-square uniform windows and channels.

    Window statistics use population (1/N) moments.
    """
    x, y = _pair(a, b)
    if x.shape[0] < window or x.shape[1] < window:
        raise ValueError(f"image smaller than the {window}x{window} window")
    if x.ndim == 2:
        x, y = x[:, :, None], y[:, :, None]
    n = float(window * window)
    vals = []
    for c in range(x.shape[2]):
        xc, yc = x[:, :, c], y[:, :, c]
        mx = _window_sums(xc, window) / n
        my = _window_sums(yc, window) / n
        vx = np.maximum(_window_sums(xc * xc, window) / n - mx * mx, 0.0)
        vy = np.maximum(_window_sums(yc * yc, window) / n - my * my, 0.0)
        cxy = _window_sums(xc * yc, window) / n - mx * my
        s = ((2 * mx * my + SSIM_C1) * (2 * cxy + SSIM_C2)) / (
            (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2))
        vals.append(s.mean())
    return float(np.mean(vals))


def chamfer(points_a, points_b, scale: float = CHAMFER_SCALE) -> float:
    """Symmetric mean nearest-neighbour distance, multiplied by ``scale``."""
    a = np.asarray(points_a, float).reshape(-1, 2)
    b = np.asarray(points_b, float).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("chamfer needs non-empty point sets")
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(0.5 * (da.mean() + db.mean()) * scale)


def metrics(a: Raster, b: Raster, points_a=None, points_b=None) -> Metrics:
    ch = None if points_a is None or points_b is None else chamfer(points_a, points_b)
    return Metrics(mse(a, b), ssim(a, b), ch)


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, bool), np.asarray(b, bool)
    union = np.count_nonzero(a | b)
    return 1.0 if union == 0 else np.count_nonzero(a & b) / union


# ---------------------------------------------------------------------------
# image files
# ---------------------------------------------------------------------------

def read_image(path) -> Raster:
    """8-bit PNG / PGM / PPM.  Alpha is composited over white."""
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I", "F") or mode.startswith("I;"):
                raise ValueError(f"unsupported bit depth (mode {mode})")
            if mode == "1":
                im = im.convert("L")
            elif mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
            elif mode not in ("L", "LA", "RGB", "RGBA"):
                raise ValueError(f"unsupported image mode {mode}")
            arr = np.asarray(im, dtype=float) / 255.0
            mode = im.mode
    except (OSError, SyntaxError) as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from exc
    if mode in ("LA", "RGBA"):
        alpha = arr[..., -1:]
        arr = arr[..., :-1] * alpha + (1.0 - alpha)
        if mode == "LA":
            arr = arr[..., 0]
    return Raster(np.clip(arr, 0.0, 1.0))


def to_uint8(r: Raster) -> np.ndarray:
    return np.round(r.data * 255.0).astype(np.uint8)


def write_image(raster: Raster, path) -> None:
    suffix = Path(path).suffix.lower()
    data = to_uint8(raster)
    if suffix == ".pgm" and raster.channels != 1:
        data = to_uint8(raster.gray())
    elif suffix == ".ppm" and raster.channels == 1:
        data = to_uint8(raster.rgb())
    fmt = {".png": "PNG", ".pgm": "PPM", ".ppm": "PPM", ".pnm": "PPM"}.get(suffix)
    if fmt is None:
        raise ValueError(f"unsupported image format {suffix!r}")
    Image.fromarray(data, "L" if data.ndim == 2 else "RGB").save(path, format=fmt)
