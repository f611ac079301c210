"""End-to-end acceptance checks; each test reports one summary line."""
import math
import time
import warnings

import numpy as np
import pytest
from hypothesis import given, settings

from roundpoly.cli import select_best
from roundpoly.config import RunConfig
from roundpoly.degrade import DegradeConfig, degrade_outline, degrade_trace, densify
from roundpoly.linearc import ARC_CAP, ArcPrim, LineArcPath, check_chaining, subdivide_large_arcs
from roundpoly.pipeline import decode_doc, encode_svg, roundtrip
from roundpoly.raster import chamfer, render_fill, render_scene, to_uint8
from roundpoly.rounded_poly import RoundedPolygon, from_rounded, interior_angle, serialize, to_rounded
from roundpoly.stylize import (StrokeSpec, optimize_zorder, recover_colors,
                               stylize_scene)
from roundpoly.synth import (CURVED_KINDS, distinct_colors, random_polygon, random_scene,
                             shape_corpus)

from _oracles import composite_mse, exhaustive_zorder_mse, small_component_scene, subset_valid
from _strategies import chains


# 1 -------------------------------------------------------------------------

def test_radius_identity(criterion):
    line = criterion(1, "radius identity r = d tan(alpha/2)")
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(10_000):
        r = float(rng.uniform(0.1, 100))
        sw = float(rng.uniform(0.05, 2 * math.pi / 3 - 0.05)) * rng.choice([-1, 1])
        a0 = float(rng.uniform(-math.pi, math.pi))
        c = rng.uniform(-50, 50, 2)
        arc = ArcPrim(c + r * np.array([math.cos(a0), math.sin(a0)]),
                      c + r * np.array([math.cos(a0 + sw), math.sin(a0 + sw)]), c, r, sw)
        poly = to_rounded(LineArcPath((arc,), False))
        rec = poly.d[1] * math.tan(interior_angle(poly, 1) / 2)
        worst = max(worst, abs(rec - r) / r)
    line.detail(f"10000 arcs, max relative error {worst:.2e} (limit 1e-6)")
    assert worst <= 1e-6


# 2 -------------------------------------------------------------------------

_CAP_STATS = {"paths": 0, "arcs": 0, "over": 0, "g1": 0.0}


@settings(max_examples=300, deadline=None)
@given(chains(max_sweep=2 * math.pi - 0.01, max_prims=8))
def _cap_property(path):
    out = subdivide_large_arcs(path)
    arcs = [p for p in out.primitives if isinstance(p, ArcPrim)]
    _CAP_STATS["paths"] += 1
    _CAP_STATS["arcs"] += len(arcs)
    _CAP_STATS["over"] += sum(abs(a.sweep) >= ARC_CAP for a in arcs)
    prims = out.primitives
    for k in out.junctions():
        t0, t1 = prims[k].end_tangent(), prims[k + 1].start_tangent()
        err = abs(math.atan2(t0[0] * t1[1] - t0[1] * t1[0], t0 @ t1))
        _CAP_STATS["g1"] = max(_CAP_STATS["g1"], err)
    assert all(abs(a.sweep) < ARC_CAP for a in arcs)
    assert not check_chaining(out, 1e-9)


def test_arc_cap(criterion):
    line = criterion(2, "arc cap below 120 degrees after subdivision")
    _cap_property()
    s = _CAP_STATS
    line.detail(f"{s['paths']} random chains, {s['arcs']} arcs, {s['over']} at or over the cap, "
                f"max junction tangent error {s['g1']:.1e} rad")
    assert s["over"] == 0 and s["g1"] <= 1e-9


# 3 and 4 ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def corpus_reports():
    t0 = time.perf_counter()
    reps = [(kind, roundtrip(svg)) for kind, svg in shape_corpus(200, seed=0)]
    return reps, time.perf_counter() - t0


def test_round_trip_fidelity(corpus_reports, criterion):
    line = criterion(3, "round-trip fidelity on 200 synthetic shapes")
    reps, elapsed = corpus_reports
    ious = np.array([r["iou"] for _, r in reps])
    haus = np.array([r["hausdorff"] for _, r in reps])
    line.detail(f"min IoU {ious.min():.4f} (>= 0.98), max Hausdorff {haus.max():.3f} (<= 0.5), "
                f"{elapsed:.1f} s (<= 120 s)")
    assert len(reps) == 200
    assert ious.min() >= 0.98 and haus.max() <= 0.5 and elapsed <= 120


def test_token_savings(corpus_reports, criterion):
    line = criterion(4, "token savings on curved shapes")
    reps, _ = corpus_reports
    sav = np.array([r["savings"] for kind, r in reps if kind in CURVED_KINDS])
    by_kind = {k: np.mean([r["savings"] for kk, r in reps if kk == k]) for k in CURVED_KINDS}
    parts = ", ".join(f"{k} {v:.1%}" for k, v in by_kind.items())
    line.detail(f"mean {sav.mean():.1%} over {len(sav)} curved shapes (>= 20%); {parts}")
    assert sav.mean() >= 0.20


# 5 -------------------------------------------------------------------------

def test_zorder_oracle(criterion):
    line = criterion(5, "z-order equals exhaustive search")
    size, mismatches, invalid, worst = 64, 0, 0, 0.0
    rng = np.random.default_rng(5)
    for _ in range(500):
        k = int(rng.integers(2, 7))
        polys, cols, masks, g = small_component_scene(rng, k, size, random_scene)
        src = render_fill(list(zip(polys, cols)), order=list(rng.permutation(k)), size=size)
        ca = recover_colors(polys, src, masks=masks)
        order = optimize_zorder(polys, ca, src, masks=masks, graph=g)
        invalid += not subset_valid(order, g.subset_edges)
        best = exhaustive_zorder_mse(masks, ca.colors, src.data, g.subset_edges)
        gap = composite_mse(masks, ca.colors, order, src.data) - best
        worst = max(worst, abs(gap))
        mismatches += abs(gap) > 1e-12
    line.detail(f"500 scenes, {mismatches} MSE mismatches (max gap {worst:.1e}), "
                f"{invalid} subset-edge violations")
    assert mismatches == 0 and invalid == 0


# 6 -------------------------------------------------------------------------

def test_stylization_closure(criterion):
    line = criterion(6, "stylization closure")
    rng = np.random.default_rng(6)
    failures = 0
    for _ in range(200):
        polys, cols = random_scene(rng, int(rng.integers(1, 6)))
        src = render_fill(list(zip(polys, cols)), size=256, supersample=1)
        scene = stylize_scene(polys, src)
        failures += not np.array_equal(scene.render(supersample=1).data, src.data)
    line.detail(f"{200 - failures}/200 scenes re-render with mse = 0")
    assert failures == 0


# 7 -------------------------------------------------------------------------

def test_stroke_detection(criterion):
    line = criterion(7, "stroke detection and epsilon gate")
    rng = np.random.default_rng(7)
    hits, total, errs = 0, 0, []
    for w in (1, 2, 4, 8):
        for _ in range(5):
            p = random_polygon(rng, lo=24, hi=104)
            fill, stroke = distinct_colors(rng, 2)
            src = render_scene([p], [np.array(fill) / 255], [0], 256,
                               strokes=[StrokeSpec(float(w), stroke, True)])
            s = stylize_scene([p], src).strokes[0]
            total += 1
            if s is not None and s.accepted and abs(s.width - w) <= 1:
                hits += 1
            errs.append(abs(s.width - w) if s is not None else math.inf)
    false_acc = 0
    for _ in range(100):
        polys, cols = random_scene(rng, int(rng.integers(1, 4)))
        src = render_fill(list(zip(polys, cols)), size=256)
        false_acc += sum(1 for s in stylize_scene(polys, src).strokes if s is not None and s.accepted)
    line.detail(f"{hits}/{total} stroked shapes accepted within 1 px (max error {max(errs):.2f} px), "
                f"{false_acc} false acceptances on 100 unstroked scenes")
    assert hits == total and false_acc == 0


# 8 -------------------------------------------------------------------------

TARGET_MS = 300.0


def test_stylize_throughput(criterion):
    line = criterion(8, "stylize throughput (soft target)")
    rng = np.random.default_rng(8)
    times = []
    for _ in range(40):
        polys, cols = random_scene(rng, int(rng.integers(1, 21)))
        src = render_fill(list(zip(polys, cols)), size=256)
        t0 = time.perf_counter()
        stylize_scene(polys, src)
        times.append(1000 * (time.perf_counter() - t0))
    med = float(np.median(times))
    status = "within target" if med <= TARGET_MS else "soft miss"
    line.detail(f"median {med:.0f} ms, max {max(times):.0f} ms over 40 scenes with K <= 20 "
                f"({status}; target {TARGET_MS:.0f} ms)")
    if med > TARGET_MS:
        warnings.warn(f"stylize median {med:.0f} ms is over the {TARGET_MS:.0f} ms target")
    assert med <= 2 * TARGET_MS


# 9 -------------------------------------------------------------------------

def _perturbed(doc, rng, scale):
    out = []
    for poly in decode_doc(doc).polygons:
        v = poly.vertices.copy()
        v[:, :2] = np.clip(v[:, :2] + rng.normal(0, scale, (len(v), 2)), 0, 128)
        out.append(RoundedPolygon(v))
    return serialize(out)


def _scene_svg(rng):
    body = []
    for _ in range(3):
        x, y = rng.uniform(5, 60, 2)
        w, h = rng.uniform(20, 60, 2)
        c = rng.integers(0, 256, 3)
        body.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" '
                    f'rx="{rng.uniform(0, 8):.2f}" fill="rgb({c[0]},{c[1]},{c[2]})"/>')
    return f'<svg viewBox="0 0 128 128">{"".join(body)}</svg>'


def test_best_of_n_monotone(criterion):
    line = criterion(9, "best-of-N monotone in N")
    cfg = RunConfig()
    ok, curves = True, []
    for seed in range(3):
        rng = np.random.default_rng(900 + seed)
        enc = encode_svg(_scene_svg(rng))
        dec = decode_doc(enc.doc)
        src = render_fill([(c, p.fill) for c, p in zip(dec.chains, enc.paths)], size=128)
        cands = [_perturbed(enc.doc, rng, float(s)) for s in rng.uniform(0.5, 6.0, 8)]
        scores = []
        for n in (1, 2, 4, 8):
            best, rows = select_best(cands[:n], src, cfg)
            scores.append(rows[best][0])
        ok &= all(b >= a for a, b in zip(scores, scores[1:]))
        curves.append(" < ".join(f"{-s:.5f}" for s in scores).replace("<", ">="))
    line.detail("selected mse per N=1,2,4,8: " + "; ".join(curves))
    assert ok


# 10 ------------------------------------------------------------------------

def _trace_chamfer(seed, res):
    rng = np.random.default_rng(seed)
    polys, cols = random_scene(rng, 3)
    cfg = DegradeConfig(resolution_range=(res, res), rng_seed=seed, bypass_probability=0.0)
    traced = degrade_trace(list(zip(polys, cols)), cfg)
    if not traced.contours:
        return math.nan
    truth = np.vstack([from_rounded(p, clamp=True).sample(4.0) for p in polys])
    return chamfer(np.vstack([densify(c, 0.25) for c in traced.contours]), truth)


def test_degradation_determinism_and_direction(criterion):
    line = criterion(10, "degradation determinism and direction")
    rng = np.random.default_rng(10)
    polys, cols = random_scene(rng, 4)
    scene = list(zip(polys, cols))
    same = True
    for seed in range(5):
        cfg = DegradeConfig(rng_seed=seed)
        a, _ = degrade_outline(scene, cfg, force_degrade=True)
        b, _ = degrade_outline(scene, cfg, force_degrade=True)
        same &= to_uint8(a).tobytes() == to_uint8(b).tobytes()
    lo = np.nanmean([_trace_chamfer(s, 224) for s in range(60)])
    hi = np.nanmean([_trace_chamfer(s, 336) for s in range(60)])
    line.detail(f"identical bytes for repeated seeds: {same}; mean chamfer 224px {lo:.5f} "
                f">= 336px {hi:.5f} over 60 seeds")
    assert same and lo >= hi
