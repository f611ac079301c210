"""Vectorization-based degradation of clean scenes.

A scene is rendered at a reduced random resolution, blurred, traced back to
polygons with a classical marching-squares tracer and re-rendered as a
fixed-width outline.  Everything is a deterministic function of the seed.
"""
from __future__ import annotations

import json
import math
import shlex
import subprocess
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import correlate1d
from skimage.measure import find_contours

from .path_model import CANVAS
from .raster import (DEFAULT_OUTLINE_SIZE, DEFAULT_STROKE_WIDTH, Raster, render_fill,
                     render_outline, write_image)

DP_EPSILON_PX = 0.75
MIN_REGION_AREA_PX = 4.0


class DegradedToBlank(RuntimeError):
    """The trace of a degraded render produced no contours."""


@dataclass(frozen=True)
class DegradeConfig:
    resolution_range: tuple = (224, 336)
    blur_range: tuple = (0.5, 2.0)
    rng_seed: int = 0
    bypass_probability: float = 0.25
    threshold: float = 0.5
    outline_size: int = DEFAULT_OUTLINE_SIZE
    stroke_width: float = DEFAULT_STROKE_WIDTH
    supersample: int = 2
    tracer_command: Optional[str] = None

    def __post_init__(self):
        lo, hi = self.resolution_range
        if not (0 < lo <= hi):
            raise ValueError("resolution range must be positive and ordered")
        slo, shi = self.blur_range
        if not (0 <= slo <= shi):
            raise ValueError("blur_sigma must be >= 0 and the range ordered")
        if not 0.0 <= self.bypass_probability <= 1.0:
            raise ValueError("bypass_probability must lie in [0, 1]")


@dataclass
class TraceResult:
    contours: list  # (n, 2) arrays in normalized units, stored open
    diagnostics: dict = field(default_factory=dict)


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img: Raster, sigma: float) -> Raster:
    """Separable Gaussian, radius ``ceil(3 sigma)``, edges clamped."""
    if sigma <= 0:
        return img
    k = gaussian_kernel(sigma)
    a = correlate1d(img.data, k, axis=0, mode="nearest")
    a = correlate1d(a, k, axis=1, mode="nearest")
    return Raster(np.clip(a, 0.0, 1.0))


def polygon_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _dp_open(pts: np.ndarray, eps: float) -> np.ndarray:
    keep = np.zeros(len(pts), bool)
    keep[0] = keep[-1] = True
    stack = [(0, len(pts) - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        a, b = pts[i], pts[j]
        seg = pts[i + 1:j] - a
        d = b - a
        norm = math.hypot(*d)
        if norm < 1e-12:
            dist = np.hypot(seg[:, 0], seg[:, 1])
        else:
            dist = np.abs(seg[:, 0] * d[1] - seg[:, 1] * d[0]) / norm
        k = int(np.argmax(dist))
        if dist[k] > eps:
            m = i + 1 + k
            keep[m] = True
            stack.extend([(i, m), (m, j)])
    return pts[keep]


def douglas_peucker(loop: np.ndarray, eps: float) -> np.ndarray:
    """Simplify a closed loop (stored open).  Anchors are the first point and
    the point farthest from it."""
    if len(loop) < 4:
        return loop
    far = int(np.argmax(np.hypot(*(loop - loop[0]).T)))
    ring = np.vstack([loop, loop[:1]])
    first = _dp_open(ring[: far + 1], eps)
    second = _dp_open(ring[far:], eps)
    return np.vstack([first[:-1], second[:-1]])


def classical_trace(image: Raster, binarize_threshold: float = 0.5, epsilon: float = DP_EPSILON_PX,
                    min_area: float = MIN_REGION_AREA_PX) -> TraceResult:
    """Dark-region boundaries of ``image`` as simplified loops.

    Marching squares runs on the luminance at ``binarize_threshold`` so the
    crossing points are linearly interpolated between pixel centers.
    """
    lum = image.gray().data
    h, w = lum.shape
    padded = np.pad(lum, 1, constant_values=1.0)
    raw = find_contours(padded, binarize_threshold)
    loops, dropped = [], 0
    for c in raw:
        if len(c) < 4:
            dropped += 1
            continue
        # (row, col) in padded index space -> pixel-space (x, y)
        pts = np.stack([c[:, 1] - 0.5, c[:, 0] - 0.5], axis=1)
        if np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        if abs(polygon_area(pts)) < min_area:
            dropped += 1
            continue
        simple = douglas_peucker(pts, epsilon)
        if len(simple) < 3 or abs(polygon_area(simple)) == 0.0:
            dropped += 1
            continue
        loops.append(simple * np.array([CANVAS / w, CANVAS / h]))
    return TraceResult(loops, {"raw_contours": len(raw), "dropped_regions": dropped})


# ---------------------------------------------------------------------------
# external tracers
# ---------------------------------------------------------------------------

def contours_to_json(contours: Sequence[np.ndarray]) -> str:
    return json.dumps({"contours": [np.round(np.asarray(c, float), 4).tolist() for c in contours]})


def contours_from_json(text: str) -> list:
    doc = json.loads(text)
    out = []
    for c in doc["contours"]:
        a = np.asarray(c, float).reshape(-1, 2)
        if len(a) >= 3:
            out.append(a)
    return out


def external_trace(image: Raster, command: str, timeout: float = 60.0) -> TraceResult:
    """Run ``command`` (``{input}`` replaced by a PNG path); it must print
    contour JSON on standard output."""
    with tempfile.TemporaryDirectory() as tmp:
        png = Path(tmp) / "input.png"
        write_image(image, png)
        argv = [a.replace("{input}", str(png)) for a in shlex.split(command)]
        if not any(str(png) in a for a in argv):
            argv.append(str(png))
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout, check=True)
    return TraceResult(contours_from_json(proc.stdout), {"external": command})


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def _scene_fill(scene):
    items = []
    for item in scene:
        if isinstance(item, tuple) and len(item) == 2 and not isinstance(item[0], (int, float)):
            items.append((item[0], item[1]))
        else:
            items.append((item, (0.0, 0.0, 0.0)))
    return items


def _paths(scene):
    return [p for p, _ in _scene_fill(scene)]


def sample_params(cfg: DegradeConfig) -> dict:
    """Draw bypass / resolution / sigma from the seeded stream (always all
    three, so the stream layout does not depend on the branch)."""
    rng = np.random.default_rng(cfg.rng_seed)
    u = float(rng.random())
    res = int(rng.integers(cfg.resolution_range[0], cfg.resolution_range[1] + 1))
    sigma = float(rng.uniform(*cfg.blur_range)) if cfg.blur_range[1] > cfg.blur_range[0] else float(cfg.blur_range[0])
    return {"seed": int(cfg.rng_seed), "bypass": u < cfg.bypass_probability, "resolution": res, "sigma": sigma}


def degrade_trace(scene: Sequence, cfg: DegradeConfig, params: Optional[dict] = None) -> TraceResult:
    """Steps 1-3: reduced-resolution fill render, blur, trace."""
    params = params or sample_params(cfg)
    filled = render_fill(_scene_fill(scene), size=params["resolution"], supersample=cfg.supersample)
    blurred = gaussian_blur(filled.gray(), params["sigma"])
    if cfg.tracer_command:
        return external_trace(blurred, cfg.tracer_command)
    return classical_trace(blurred, cfg.threshold)


def degrade_outline(scene: Sequence, cfg: DegradeConfig, force_degrade: bool = False):
    """Degraded outline raster plus the record of sampled parameters.

    ``scene`` holds polygons or ``(polygon, color)`` pairs; colors only
    matter through their luminance.
    """
    params = sample_params(cfg)
    if force_degrade:
        params["bypass"] = False
    if params["bypass"]:
        out = render_outline(_paths(scene), cfg.outline_size, cfg.stroke_width)
        return out, dict(params, contours=None)
    traced = degrade_trace(scene, cfg, params)
    if not traced.contours:
        raise DegradedToBlank("degraded to blank")
    out = render_outline(traced.contours, cfg.outline_size, cfg.stroke_width)
    return out, dict(params, contours=len(traced.contours), **traced.diagnostics)


def densify(loop: np.ndarray, spacing: float = 0.5, closed: bool = True) -> np.ndarray:
    """Points every ``spacing`` units along a polyline (vertices included)."""
    pts = np.vstack([loop, loop[:1]]) if closed else np.asarray(loop)
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil(math.hypot(*(b - a)) / spacing)))
        t = np.arange(n)[:, None] / n
        out.append(a + t * (b - a))
    if not closed:
        out.append(pts[-1:])
    return np.vstack(out)


def config_dict(cfg: DegradeConfig) -> dict:
    return asdict(cfg)
