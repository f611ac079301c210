"""Recover fills, paint order and strokes for bare polygons from a raster.

Colors come from per-channel medians over exclusive masks, removing resolved
paths pass by pass.  Paint order is searched per connected component of the
overlap graph over subset-respecting orders, one representative per class of
render-equivalent orders.  Strokes are proposed by walking along boundary
normals and kept only when they lower the error by a fixed margin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.ndimage import distance_transform_edt

from .linearc import ArcPrim
from .path_model import CANVAS
from .raster import Mask, Raster, coverage, flatten, stroke_coverage
from .rounded_poly import RoundedPolygon, from_rounded

EVAL_CAP = 120
STROKE_EPSILON = 0.0002
COLOR_DELTA = 0.1
MIN_BOUNDARY_SAMPLES = 32
MAX_WALK_PX = 24
BORDERLINE_MARGIN_PX = 4.0
WIDTH_SEARCH = (-1.0, -0.5, 0.0, 0.5, 1.0)
BAND_COLORS = 3  # frequent band colors tried besides the walked one
UNRESOLVED = "unresolved"
VISIBLE = "visible"


@dataclass
class OverlapGraph:
    nodes: list
    edges: set  # frozenset({i, j})
    subset_edges: set  # (j, i): j renders before i
    components: list
    diagnostics: list = field(default_factory=list)


@dataclass
class ColorAssignment:
    colors: list  # (r, g, b) 0..255 ints
    provenance: list  # pass number, "visible" or "unresolved"
    diagnostics: list = field(default_factory=list)

    def as_float(self) -> list:
        return [tuple(c / 255.0 for c in rgb) for rgb in self.colors]


@dataclass
class StrokeSpec:
    width: float  # pixels at the source resolution
    color: tuple  # 0..255
    accepted: bool
    mse_delta: float = 0.0


@dataclass
class StyledScene:
    polygons: list
    colors: ColorAssignment
    order: list
    strokes: list
    resolution: int = 256
    diagnostics: list = field(default_factory=list)

    def render(self, size: Optional[int] = None, supersample: int = 1) -> Raster:
        from .raster import render_scene

        size = size or self.resolution
        return render_scene(self.polygons, self.colors.as_float(), self.order, size,
                            strokes=self.strokes, supersample=supersample,
                            stroke_scale=size / self.resolution)

    def to_svg(self, precision: int = 2) -> str:
        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {CANVAS} {CANVAS}" '
                 f'width="{CANVAS}" height="{CANVAS}">']
        for i in self.order:
            d = path_data(self.polygons[i], precision)
            attrs = f'd="{d}" fill="{hex_color(self.colors.colors[i])}"'
            s = self.strokes[i] if self.strokes else None
            if s is not None and s.accepted:
                w = s.width * CANVAS / self.resolution
                attrs += f' stroke="{hex_color(s.color)}" stroke-width="{w:.{precision}f}"'
            parts.append(f"  <path {attrs}/>")
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def hex_color(rgb) -> str:
    return "#%02x%02x%02x" % tuple(int(c) for c in rgb)


def _num(v: float, precision: int) -> str:
    s = f"{v:.{precision}f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def path_data(poly, precision: int = 2) -> str:
    """M/L/A path string for a rounded polygon or line-arc chain."""
    path = from_rounded(poly, clamp=True) if isinstance(poly, RoundedPolygon) else poly
    f = lambda p: f"{_num(p[0], precision)} {_num(p[1], precision)}"
    out = [f"M {f(path.primitives[0].a)}"]
    for prim in path.primitives:
        if isinstance(prim, ArcPrim):
            r = _num(prim.radius, precision)
            large = int(abs(prim.sweep) > math.pi)
            sweep = int(prim.sweep > 0)
            out.append(f"A {r} {r} 0 {large} {sweep} {f(prim.b)}")
        else:
            out.append(f"L {f(prim.b)}")
    if path.closed:
        out.append("Z")
    return " ".join(out)


# ---------------------------------------------------------------------------
# masks and colors
# ---------------------------------------------------------------------------

def _stack(masks) -> np.ndarray:
    arrs = [m.bits if isinstance(m, Mask) else np.asarray(m, bool) for m in masks]
    if not arrs:
        return np.zeros((0, 1, 1), bool)
    shape = arrs[0].shape
    if any(a.shape != shape for a in arrs):
        raise ValueError("mask dimension mismatch")
    return np.stack(arrs)


def exclusive_masks(masks: Sequence) -> List[Mask]:
    """``M_i`` minus the union of every other mask."""
    st = _stack(masks)
    if len(st) == 0:
        return []
    only_one = st.sum(axis=0) == 1
    return [Mask(m & only_one) for m in st]


def scene_masks(polys: Sequence, resolution: int) -> np.ndarray:
    return np.stack([coverage(p, resolution, 1) for p in polys]) if len(polys) else np.zeros((0, resolution, resolution), bool)


def _source_rgb(source: Raster) -> np.ndarray:
    if source.width != source.height:
        raise ValueError("source raster must be square (aligned with the 128-unit frame)")
    return np.round(source.rgb().data * 255.0).astype(np.int64)


def lower_median(pixels: np.ndarray) -> tuple:
    """Per-channel lower median of an (n, 3) integer array."""
    k = (len(pixels) - 1) // 2
    return tuple(int(np.partition(pixels[:, c], k)[k]) for c in range(pixels.shape[1]))


def recover_colors(polys: Sequence, source: Raster, masks: Optional[np.ndarray] = None) -> ColorAssignment:
    src = _source_rgb(source)
    st = scene_masks(polys, source.width) if masks is None else _stack(masks)
    n = len(st)
    colors: list = [None] * n
    prov: list = [UNRESOLVED] * n
    diags = []
    remaining = list(range(n))
    npass = 0
    while remaining:
        npass += 1
        sub = st[remaining]
        only = sub.sum(axis=0) == 1
        assigned = []
        for i, m in zip(remaining, sub):
            excl = m & only
            if excl.any():
                colors[i] = lower_median(src[excl])
                prov[i] = npass
                assigned.append(i)
        if not assigned:
            break
        remaining = [i for i in remaining if i not in assigned]
    for i in remaining:
        if st[i].any():
            colors[i] = lower_median(src[st[i]])
        else:
            colors[i] = (128, 128, 128)
        diags.append(f"path {i}: empty exclusive mask in every pass, full-mask median used")
    return ColorAssignment(colors, prov, diags)


# ---------------------------------------------------------------------------
# overlap graph
# ---------------------------------------------------------------------------

def build_overlap_graph(masks: Sequence) -> OverlapGraph:
    st = _stack(masks)
    n = len(st)
    flat = st.reshape(n, -1)
    areas = flat.sum(axis=1)
    inter = flat.astype(np.int32) @ flat.T.astype(np.int32) if n else np.zeros((0, 0))
    edges, subset, diags = set(), set(), []
    for i in range(n):
        for j in range(i + 1, n):
            if inter[i, j] == 0:
                continue
            edges.add(frozenset((i, j)))
            i_in_j = inter[i, j] == areas[i]
            j_in_i = inter[i, j] == areas[j]
            if i_in_j and j_in_i:
                diags.append(f"paths {i} and {j} have equal masks; order left to evaluation")
            elif i_in_j:
                subset.add((j, i))
            elif j_in_i:
                subset.add((i, j))
    adj = {i: [] for i in range(n)}
    for e in edges:
        a, b = tuple(e)
        adj[a].append(b)
        adj[b].append(a)
    seen, comps = set(), []
    for s in range(n):
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in sorted(adj[v], reverse=True):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        comps.append(sorted(comp))
    g = OverlapGraph(list(range(n)), edges, subset, comps, diags)
    _borderline(st, g)
    return g


def _borderline(st, g: OverlapGraph):
    cache = {}
    for j, i in sorted(g.subset_edges):
        if j not in cache:
            cache[j] = distance_transform_edt(st[j])
        margin = float(cache[j][st[i]].min()) if st[i].any() else math.inf
        if margin < BORDERLINE_MARGIN_PX:
            g.diagnostics.append(f"containment {i} in {j} has margin {margin:.1f} px")


# ---------------------------------------------------------------------------
# z-order
# ---------------------------------------------------------------------------

def linear_extensions(nodes: Sequence[int], before: set, commute, limit: Optional[int] = None):
    """Orders of ``nodes`` honouring ``before`` (pairs (a, b): a first), one
    per class of orders equal up to swapping adjacent commuting nodes.

    The representative is the lexicographically least order of its class:
    a node may not follow a run of nodes it commutes with if any of them is
    larger than it.
    """
    nodes = sorted(nodes)
    preds = {v: {a for a, b in before if b == v} for v in nodes}
    order: list = []
    placed: set = set()
    count = 0

    def canonical(v) -> bool:
        for u in reversed(order):
            if not commute(u, v):
                return True
            if u > v:
                return False
        return True

    def rec():
        nonlocal count
        if limit is not None and count >= limit:
            return
        if len(order) == len(nodes):
            count += 1
            yield list(order)
            return
        for v in nodes:
            if v in placed or not preds[v] <= placed or not canonical(v):
                continue
            order.append(v)
            placed.add(v)
            yield from rec()
            order.pop()
            placed.discard(v)
            if limit is not None and count >= limit:
                return

    yield from rec()


def _component_costs(comp, st, src, colors):
    """Squared error of each possible top path for each distinct coverage
    pattern inside the component region (plus the white-background cost of
    nothing, which never occurs inside the region)."""
    region = st[comp].any(axis=0)
    cover = st[comp][:, region].T  # (pixels, k)
    pats, inv = np.unique(cover, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    px = src[region].astype(float) / 255.0
    cols = np.array(colors, float)[comp] / 255.0  # (k, 3)
    # sse[p, m] = sum over pixels of pattern p of |px - color_m|^2
    sq = ((px[:, None, :] - cols[None, :, :]) ** 2).sum(axis=2)  # (pixels, k)
    sse = np.zeros((len(pats), len(comp)))
    np.add.at(sse, inv, sq)
    return pats, sse


def _order_cost(order_local, pats, sse) -> float:
    rank = np.empty(len(order_local), int)
    rank[order_local] = np.arange(len(order_local))
    # topmost covering member per pattern = member with the largest rank
    ranked = np.where(pats, rank[None, :], -1)
    top = ranked.argmax(axis=1)
    return float(sse[np.arange(len(pats)), top].sum())


def optimize_zorder(polys: Sequence, colors, source: Raster, eval_cap: int = EVAL_CAP,
                    masks: Optional[np.ndarray] = None, graph: Optional[OverlapGraph] = None,
                    diagnostics: Optional[list] = None) -> list:
    """Back-to-front permutation minimising squared error against ``source``."""
    if eval_cap < 1:
        raise ValueError("eval_cap must be >= 1")
    cols = colors.colors if isinstance(colors, ColorAssignment) else list(colors)
    src = _source_rgb(source)
    st = scene_masks(polys, source.width) if masks is None else _stack(masks)
    g = graph or build_overlap_graph(st)
    diags = diagnostics if diagnostics is not None else []
    areas = st.reshape(len(st), -1).sum(axis=1)
    result = []
    for ci, comp in enumerate(g.components):
        if len(comp) == 1:
            result.extend(comp)
            continue
        local = {v: k for k, v in enumerate(comp)}
        before = {(local[a], local[b]) for a, b in g.subset_edges if a in local and b in local}
        overl = {(local[a], local[b]) for e in g.edges for a in e for b in e if a != b and a in local and b in local}
        commute = lambda u, v: (u, v) not in overl
        cands = list(linear_extensions(range(len(comp)), before, commute, limit=eval_cap + 1))
        if len(cands) > eval_cap:
            best = sorted(range(len(comp)), key=lambda k: (-areas[comp[k]], k))
            diags.append(f"component {ci} ({len(comp)} paths): more than {eval_cap} candidate orders, "
                         "area-descending fallback")
        else:
            pats, sse = _component_costs(comp, st, src, cols)
            best, best_cost = None, math.inf
            for cand in cands:
                c = _order_cost(np.asarray(cand), pats, sse)
                if c < best_cost:
                    best, best_cost = cand, c
        result.extend(comp[k] for k in best)
    return result


# ---------------------------------------------------------------------------
# strokes
# ---------------------------------------------------------------------------

def _boundary_samples(poly, size: int, n_min: int = MIN_BOUNDARY_SAMPLES):
    """Evenly spaced boundary points (pixels) with outward-ish unit normals."""
    pts_all, nrm_all = [], []
    for loop, closed in flatten(poly, size):
        ring = np.vstack([loop, loop[:1]]) if closed else loop
        seg = np.diff(ring, axis=0)
        ln = np.hypot(seg[:, 0], seg[:, 1])
        total = ln.sum()
        if total <= 0:
            continue
        n = max(n_min, int(total / 2.0))
        s = (np.arange(n) + 0.5) * total / n
        cum = np.concatenate([[0.0], np.cumsum(ln)])
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
        t = (s - cum[k]) / np.where(ln[k] > 0, ln[k], 1.0)
        p = ring[k] + t[:, None] * seg[k]
        tan = seg[k] / np.where(ln[k] > 0, ln[k], 1.0)[:, None]
        nrm = np.stack([tan[:, 1], -tan[:, 0]], axis=1)
        pts_all.append(p)
        nrm_all.append(nrm)
    if not pts_all:
        return np.zeros((0, 2)), np.zeros((0, 2))
    return np.vstack(pts_all), np.vstack(nrm_all)


def _walk(src, p, nrm, max_walk, delta):
    """Distance (px) from each boundary point to the first significant color
    change along ``nrm``; NaN when none within ``max_walk``."""
    h, w = src.shape[:2]
    steps = np.arange(max_walk) + 0.5
    q = p[:, None, :] + steps[None, :, None] * nrm[:, None, :]
    xi = np.clip(np.floor(q[..., 0]).astype(int), 0, w - 1)
    yi = np.clip(np.floor(q[..., 1]).astype(int), 0, h - 1)
    cols = src[yi, xi].astype(float) / 255.0  # (n, steps, 3)
    ref = cols[:, :1, :]
    changed = (np.abs(cols - ref) > delta).any(axis=2)
    hit = changed.any(axis=1)
    first = changed.argmax(axis=1)
    dist = np.where(hit, steps[first] - 0.5, np.nan)
    return dist, cols[:, 0, :]


def propose_stroke(poly, source: Raster, delta: float = COLOR_DELTA, max_walk: int = MAX_WALK_PX):
    src = _source_rgb(source)
    p, nrm = _boundary_samples(poly, source.width)
    if len(p) == 0:
        return None
    out_d, _ = _walk(src, p, nrm, max_walk, delta)
    in_d, _ = _walk(src, p, -nrm, max_walk, delta)
    ok = np.isfinite(out_d) & np.isfinite(in_d)
    if not ok.any():
        return None
    widths = out_d[ok] + in_d[ok]
    widths = widths[widths > 0]
    if len(widths) == 0:
        return None
    bins = np.floor(widths).astype(int)
    top_bin = np.bincount(bins).argmax()
    width = float(np.median(widths[bins == top_bin]))
    # color at the middle of each run, since a thin stroke may not cover the boundary pixel
    h, w = src.shape[:2]
    mid = p[ok] + ((out_d[ok] - in_d[ok]) / 2.0)[:, None] * nrm[ok]
    xi = np.clip(np.floor(mid[:, 0]).astype(int), 0, w - 1)
    yi = np.clip(np.floor(mid[:, 1]).astype(int), 0, h - 1)
    rgb = src[yi, xi].astype(int)
    coarse = rgb // 32
    keys, inv, cnt = np.unique(coarse, axis=0, return_inverse=True, return_counts=True)
    members = rgb[inv.reshape(-1) == cnt.argmax()]
    exact, ecnt = np.unique(members, axis=0, return_counts=True)
    color = tuple(int(c) for c in exact[ecnt.argmax()])
    return StrokeSpec(width, color, False)


def _band_colors(proposed, band: np.ndarray, k: int = BAND_COLORS) -> list:
    """The walked color plus the ``k`` most frequent source colors in the band."""
    b = band.reshape(-1, 3).astype(np.int64)
    keys, cnt = np.unique((b[:, 0] << 16) | (b[:, 1] << 8) | b[:, 2], return_counts=True)
    out = [tuple(proposed)]
    for key in keys[np.argsort(-cnt, kind="stable")[:k]]:
        c = (int(key >> 16), int(key >> 8) & 255, int(key) & 255)
        if c not in out:
            out.append(c)
    return out


def detect_strokes(styled: StyledScene, source: Raster, epsilon: float = STROKE_EPSILON,
                   delta: float = COLOR_DELTA, masks: Optional[np.ndarray] = None,
                   width_search: Sequence[float] = WIDTH_SEARCH) -> list:
    """Per-path stroke proposals, accepted when they lower MSE by ``epsilon``.

    The walked width is only resolved to whole pixels, so the proposal is
    refined over ``width + width_search`` using the same error the gate uses.
    """
    size = source.width
    src_int = _source_rgb(source)
    src = src_int.astype(float) / 255.0
    st = scene_masks(styled.polygons, size) if masks is None else _stack(masks)
    cols = [np.array(c, float) / 255.0 for c in styled.colors.colors]
    img = np.ones((size, size, 3))
    for i in styled.order:
        img[st[i]] = cols[i]
    npx = float(src.size)
    out: list = [None] * len(styled.polygons)
    for pos, i in enumerate(styled.order):
        spec = propose_stroke(styled.polygons[i], source, delta)
        if spec is None:
            continue
        above = np.zeros((size, size), bool)
        for j in styled.order[pos + 1:]:
            above |= st[j]
        best = None
        widths = sorted({max(spec.width + dw, 0.5) for dw in width_search})
        regions = [stroke_coverage(styled.polygons[i], size, w) & ~above for w in widths]
        candidates = _band_colors(spec.color, src_int[regions[-1]])
        for w, region in zip(widths, regions):
            if not region.any():
                continue
            before = ((img[region] - src[region]) ** 2).sum()
            for color in candidates:
                new = np.array(color, float) / 255.0
                after = ((new[None, :] - src[region]) ** 2).sum()
                gain = float((before - after) / npx)
                if best is None or gain > best[0]:
                    best = (gain, w, region, color)
        if best is None:
            continue
        gain, spec.width, region, spec.color = best
        new = np.array(spec.color, float) / 255.0
        spec.mse_delta = gain
        spec.accepted = gain >= epsilon
        if spec.accepted:
            img[region] = new
        out[i] = spec
    return out


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def _composite_sse(st, colors, order, src) -> float:
    img = np.ones(src.shape)
    for i in order:
        img[st[i]] = np.array(colors[i], float) / 255.0
    return float(((img - src) ** 2).sum())


def _visible_recolor(st, colors, order, src_int):
    """Median of source pixels where each path ends up on top."""
    top = np.full(st.shape[1:], -1)
    for i in order:
        top[st[i]] = i
    new = list(colors)
    changed = []
    for i in range(len(st)):
        vis = top == i
        if vis.any():
            med = lower_median(src_int[vis])
            if med != tuple(colors[i]):
                new[i] = med
                changed.append(i)
    return new, changed


def stylize_scene(polys: Sequence, source: Raster, eval_cap: int = EVAL_CAP, strokes: bool = True,
                  epsilon: float = STROKE_EPSILON, delta: float = COLOR_DELTA,
                  refine_rounds: int = 3) -> StyledScene:
    """Colors, then paint order, then strokes, sharing one set of masks.

    After the order is fixed, paths whose visible pixels disagree with their
    voted color are re-voted over the visible region and the order is
    searched again; the refinement is kept only if total error drops.
    """
    polys = list(polys)
    size = source.width
    src_int = _source_rgb(source)
    src = src_int.astype(float) / 255.0
    st = scene_masks(polys, size)
    diags: list = []
    ca = recover_colors(polys, source, masks=st)
    diags.extend(ca.diagnostics)
    graph = build_overlap_graph(st)
    diags.extend(graph.diagnostics)
    zdiag: list = []
    order = optimize_zorder(polys, ca, source, eval_cap, masks=st, graph=graph, diagnostics=zdiag)
    sse = _composite_sse(st, ca.colors, order, src)
    for _ in range(refine_rounds):
        if sse == 0.0:
            break
        new_cols, changed = _visible_recolor(st, ca.colors, order, src_int)
        if not changed:
            break
        trial_diag: list = []
        new_order = optimize_zorder(polys, new_cols, source, eval_cap, masks=st, graph=graph,
                                    diagnostics=trial_diag)
        new_sse = _composite_sse(st, new_cols, new_order, src)
        if new_sse >= sse:
            break
        for i in changed:
            ca.provenance[i] = VISIBLE
            diags.append(f"path {i}: recolored from its visible region")
        ca.colors, order, sse, zdiag = new_cols, new_order, new_sse, trial_diag
    diags.extend(zdiag)
    scene = StyledScene(polys, ca, order, [None] * len(polys), size, diags)
    if strokes and polys:
        scene.strokes = detect_strokes(scene, source, epsilon, delta, masks=st)
    return scene
