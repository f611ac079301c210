"""SVG to token text and back, plus round-trip measurements."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.spatial import cKDTree

from .config import RunConfig
from .linearc import ArcPrim, LineArcPath, fit_linearc, split_arc, with_corners
from .path_model import CANVAS, normalize_viewbox, parse_svg, sample_segments, subpath_segments
from .raster import chamfer, coverage, mask_iou
from .rounded_poly import (RoundedPolygon, compare_tokens, count_tokens, deserialize, from_rounded,
                           serialize, tangent_vertex, to_rounded)

FRAME_SPLIT_ROUNDS = 8


@dataclass
class EncodedPath:
    element: int
    subpath: int
    fill: Optional[tuple]
    chain: LineArcPath
    polygon: RoundedPolygon

    @property
    def n_lines(self) -> int:
        return sum(not isinstance(p, ArcPrim) for p in self.chain.primitives)

    @property
    def n_arcs(self) -> int:
        return sum(isinstance(p, ArcPrim) for p in self.chain.primitives)


@dataclass
class Encoding:
    paths: List[EncodedPath]
    doc: str
    raw: str
    geometries: list
    warnings: list = field(default_factory=list)

    @property
    def polygons(self) -> list:
        return [p.polygon for p in self.paths]

    @property
    def savings(self) -> float:
        return compare_tokens(self.doc, self.raw)

    @property
    def tokens(self) -> int:
        return count_tokens(self.doc)

    @property
    def raw_tokens(self) -> int:
        return count_tokens(self.raw)


def _outside(poly: RoundedPolygon, lo=0.0, hi=CANVAS) -> np.ndarray:
    xy = poly.xy
    return np.any((xy < lo - 1e-9) | (xy > hi + 1e-9), axis=1)


def rounded_in_frame(chain: LineArcPath) -> tuple:
    """``to_rounded`` with arcs halved until every tangent vertex lies in the
    frame.  Returns ``(polygon, chain)`` where ``chain`` is the final chain."""
    for _ in range(FRAME_SPLIT_ROUNDS):
        poly = to_rounded(chain)
        if not np.any(_outside(poly)):
            return poly, chain
        prims, remap = [], []
        for prim in chain.primitives:
            if isinstance(prim, ArcPrim):
                b = tangent_vertex(prim)
                if np.any(b < 0) or np.any(b > CANVAS):
                    prims.extend(split_arc(prim, 2))
                    remap.append(len(prims) - 1)
                    continue
            prims.append(prim)
            remap.append(len(prims) - 1)
        chain = LineArcPath(tuple(prims), chain.closed, tuple(remap[c] for c in chain.corners))
    poly = to_rounded(chain)
    return RoundedPolygon(np.column_stack([np.clip(poly.xy, 0.0, CANVAS), poly.d]), poly.closed), chain


def _closed_segments(cmds):
    return subpath_segments(cmds, True)


def encode_geometries(elements, cfg: RunConfig = RunConfig()) -> Encoding:
    """Encode parsed elements (already in the canonical frame)."""
    paths, warn, raw_lines = [], [], []
    for e, (geom, fill) in enumerate(elements):
        raw_lines.append(geom.to_path_data(2))
        for s, cmds in enumerate(geom.subpaths):
            segs = _closed_segments(cmds)
            try:
                samples = sample_segments(segs, True, cfg.spacing, cfg.corner_angle)
            except ValueError:
                warn.append(f"element {e} subpath {s}: zero length, skipped")
                continue
            area = _area(samples.points)
            if abs(area) < 1e-6:
                warn.append(f"element {e} subpath {s}: zero area, skipped")
                continue
            chain = fit_linearc(samples, cfg.fit_tolerance, cfg.straightness_tol, cfg.corner_angle)
            poly, chain = rounded_in_frame(chain)
            paths.append(EncodedPath(e, s, fill, chain, poly))
    if not paths:
        raise ValueError("no paths")
    doc = serialize([p.polygon for p in paths])
    return Encoding(paths, doc, "\n".join(raw_lines), [g for g, _ in elements], warn)


def _area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def parse_and_normalize(svg_text: str):
    """Parsed elements mapped into the canonical frame, with parse warnings."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        elements = parse_svg(svg_text)
    if not elements:
        raise ValueError("no paths")
    geoms = normalize_viewbox([el.geometry for el in elements])
    msgs = [str(w.message) for w in caught]
    return [(g, el.fill) for g, el in zip(geoms, elements)], msgs


def encode_svg(svg_text: str, cfg: RunConfig = RunConfig()) -> Encoding:
    elements, msgs = parse_and_normalize(svg_text)
    enc = encode_geometries(elements, cfg)
    enc.warnings[:0] = msgs
    return enc


@dataclass
class Decoding:
    polygons: list
    chains: list
    diagnostics: list


def decode_doc(doc: str, strict: bool = False) -> Decoding:
    """Token text to polygons and chains; roundness overflow is clamped."""
    res = deserialize(doc, strict=strict)
    diags = list(res.diagnostics)
    polys, chains = [], []
    for k, poly in enumerate(res.polygons):
        local: list = []
        try:
            chain = from_rounded(poly, clamp=True, diagnostics=local)
        except ValueError as exc:
            if strict:
                raise
            diags.append(f"path {k + 1}: {exc}, dropped")
            continue
        diags.extend(f"path {k + 1}: {m}" for m in local)
        polys.append(poly)
        chains.append(chain)
    return Decoding(polys, chains, diags)


# ---------------------------------------------------------------------------
# round-trip measurements
# ---------------------------------------------------------------------------

def geometry_boundary(geoms, spacing: float = 0.25) -> np.ndarray:
    pts = []
    for g in geoms:
        for cmds in g.subpaths:
            segs = _closed_segments(cmds)
            try:
                pts.append(sample_segments(segs, True, spacing).points)
            except ValueError:
                continue
    return np.vstack(pts) if pts else np.zeros((0, 2))


def geometry_loops(geoms, spacing: float = 0.25) -> list:
    """Dense closed polygon approximations of every subpath, per element."""
    out = []
    for g in geoms:
        loops = []
        for cmds in g.subpaths:
            try:
                sampled = sample_segments(_closed_segments(cmds), True, spacing)
            except ValueError:
                continue
            # keep sharp corners exact rather than cut by the sampling grid
            loops.append(with_corners(sampled)[0] if len(sampled.corners) else sampled.points)
        out.append(loops)
    return out


def chain_boundary(chains, per_unit: float = 4.0) -> np.ndarray:
    return np.vstack([c.sample(per_unit) for c in chains]) if chains else np.zeros((0, 2))


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Point-set Hausdorff distance."""
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))


def polyline_distance(pts: np.ndarray, loops, k: int = 4) -> np.ndarray:
    """Distance from each point to a set of closed polylines, checking the
    segments next to the ``k`` nearest vertices."""
    verts = np.vstack(loops)
    nxt = np.concatenate([np.roll(np.arange(len(l)), -1) + off
                          for l, off in zip(loops, np.cumsum([0] + [len(l) for l in loops[:-1]]))])
    prv = np.empty_like(nxt)
    prv[nxt] = np.arange(len(nxt))
    _, idx = cKDTree(verts).query(pts, k=min(k, len(verts)))
    idx = idx.reshape(len(pts), -1)
    best = np.full(len(pts), np.inf)
    for starts in (idx, prv[idx]):
        a, b = verts[starts], verts[nxt[starts]]
        d = b - a
        dd = np.maximum((d * d).sum(axis=2), 1e-300)
        t = np.clip(((pts[:, None, :] - a) * d).sum(axis=2) / dd, 0.0, 1.0)
        dist = np.hypot(*(pts[:, None, :] - a - t[..., None] * d).transpose(2, 0, 1))
        best = np.minimum(best, dist.min(axis=1))
    return best


def curve_hausdorff(src_loops, chains, per_unit: float = 4.0) -> float:
    """Hausdorff distance between source outlines (dense polylines) and
    decoded chains, measured point-to-curve in both directions."""
    src_pts = np.vstack(src_loops)
    to_chain = np.min([c.distance(src_pts) for c in chains], axis=0)
    to_src = polyline_distance(chain_boundary(chains, per_unit), src_loops)
    return float(max(to_chain.max(), to_src.max()))


def union_mask(paths, resolution: int) -> np.ndarray:
    m = np.zeros((resolution, resolution), bool)
    for p in paths:
        m |= coverage(p, resolution)
    return m


def roundtrip(svg_text: str, cfg: RunConfig = RunConfig()) -> dict:
    """Encode, decode and compare against the source geometry."""
    enc = encode_svg(svg_text, cfg)
    dec = decode_doc(enc.doc)
    src_loops = [l for loops in geometry_loops(enc.geometries, 0.1) for l in loops]
    src_pts = geometry_boundary(enc.geometries)
    out_pts = chain_boundary(dec.chains)
    res = cfg.mask_resolution
    # fill each element with nonzero winding over all of its subpaths
    src_mask = np.zeros((res, res), bool)
    for loops in geometry_loops(enc.geometries):
        if loops:
            src_mask |= coverage(list(loops), res)
    out_mask = union_mask(dec.chains, res)
    return {
        "paths": len(enc.paths),
        "hausdorff": curve_hausdorff(src_loops, dec.chains),
        "chamfer": chamfer(src_pts, out_pts),
        "iou": mask_iou(src_mask, out_mask),
        "tokens": enc.tokens,
        "raw_tokens": enc.raw_tokens,
        "savings": enc.savings,
        "diagnostics": dec.diagnostics,
        "warnings": enc.warnings,
    }
