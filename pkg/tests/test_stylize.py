import itertools

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from roundpoly.raster import Raster, path_mask, render_fill, render_scene
from roundpoly.rounded_poly import RoundedPolygon
from roundpoly.stylize import (UNRESOLVED, ColorAssignment, StrokeSpec, StyledScene,
                               build_overlap_graph, detect_strokes, exclusive_masks,
                               linear_extensions, lower_median, optimize_zorder, propose_stroke,
                               recover_colors, stylize_scene)
from roundpoly.synth import random_polygon, random_scene, rect, regular_polygon

from _oracles import composite_mse, exhaustive_zorder_mse, small_component_scene, subset_valid

RED, GREEN, BLUE, BLACK = (255, 0, 0), (0, 255, 0), (0, 0, 255), (0, 0, 0)


def _masks(polys, res=64):
    return [path_mask(p, res) for p in polys]


def _src(polys, cols, order=None, size=64):
    return render_fill(list(zip(polys, cols)), order=order, size=size)


def test_exclusive_examples():
    a, b = rect(4, 4, 40, 40), rect(60, 60, 100, 100)
    ea, eb = exclusive_masks(_masks([a, b]))
    assert np.array_equal(ea.bits, path_mask(a, 64).bits)
    assert np.array_equal(eb.bits, path_mask(b, 64).bits)
    ea, eb = exclusive_masks(_masks([a, a]))
    assert ea.count() == 0 and eb.count() == 0
    big, small = rect(10, 10, 110, 110), rect(40, 40, 60, 60)
    eb, es = exclusive_masks(_masks([big, small]))
    assert es.count() == 0
    assert path_mask(big, 64).count() - eb.count() == path_mask(small, 64).count()


@given(st.integers(0, 10 ** 6), st.integers(1, 6))
def test_exclusive_partition(seed, k):
    rng = np.random.default_rng(seed)
    ms = _masks([random_polygon(rng) for _ in range(k)])
    ex = exclusive_masks(ms)
    for i, e in enumerate(ex):
        for j, m in enumerate(ms):
            if i != j:
                assert not (e.bits & m.bits).any()


def test_lower_median():
    assert lower_median(np.array([[1, 5, 9], [3, 2, 8], [2, 7, 7], [4, 1, 1]])) == (2, 2, 7)


def test_colors_disjoint_squares():
    polys = [rect(4, 4, 40, 40), rect(60, 60, 100, 100)]
    ca = recover_colors(polys, _src(polys, [RED, BLUE]))
    assert ca.colors == [RED, BLUE] and ca.provenance == [1, 1]


def test_colors_nested_squares_second_pass():
    polys = [rect(10, 10, 110, 110), rect(40, 40, 70, 70)]
    ca = recover_colors(polys, _src(polys, [RED, BLUE]))
    assert ca.colors == [RED, BLUE]
    assert ca.provenance == [1, 2]


def test_colors_identical_paths_unresolved():
    p = rect(20, 20, 80, 80)
    ca = recover_colors([p, p, p], _src([p], [GREEN]))
    assert ca.provenance == [UNRESOLVED] * 3
    assert ca.colors == [GREEN] * 3
    assert len(ca.diagnostics) == 3


def test_overlap_graph_examples():
    a, b, c = rect(4, 4, 30, 30), rect(50, 50, 70, 70), rect(90, 90, 120, 120)
    g = build_overlap_graph(_masks([a, b, c]))
    assert g.components == [[0], [1], [2]] and not g.edges
    inner, outer = rect(40, 40, 60, 60), rect(20, 20, 80, 80)
    g = build_overlap_graph(_masks([inner, outer, c]))
    assert g.components == [[0, 1], [2]]
    assert g.subset_edges == {(1, 0)}
    ab, bc, cc = rect(10, 10, 50, 50), rect(40, 40, 90, 90), rect(80, 80, 120, 120)
    g = build_overlap_graph(_masks([ab, bc, cc]))
    assert g.components == [[0, 1, 2]]
    assert g.edges == {frozenset((0, 1)), frozenset((1, 2))}
    assert not g.subset_edges


def test_equal_masks_no_subset_edge():
    p = rect(20, 20, 80, 80)
    g = build_overlap_graph(_masks([p, p]))
    assert g.edges == {frozenset((0, 1))} and not g.subset_edges
    assert any("equal masks" in d for d in g.diagnostics)


def _brute_extensions(n, before):
    return [list(p) for p in itertools.permutations(range(n))
            if all(p.index(a) < p.index(b) for a, b in before)]


@given(st.integers(1, 6), st.integers(0, 10 ** 6))
def test_linear_extensions_without_commuting(n, seed):
    rng = np.random.default_rng(seed)
    before = {(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.3}
    got = list(linear_extensions(range(n), before, lambda u, v: False))
    assert sorted(got) == _brute_extensions(n, before)


@given(st.integers(1, 6), st.integers(0, 10 ** 6))
def test_linear_extensions_one_per_class(n, seed):
    """Orders equal up to swapping adjacent commuting nodes form a class;
    exactly one representative of each class comes out."""
    rng = np.random.default_rng(seed)
    conflict = {frozenset((a, b)) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.5}
    # containment implies overlap, so precedence only links conflicting pairs
    before = {(min(e), max(e)) for e in conflict if rng.random() < 0.3}
    commute = lambda u, v: frozenset((u, v)) not in conflict

    def key(order):
        # relative order of every conflicting pair identifies the class
        pos = {v: k for k, v in enumerate(order)}
        return tuple(sorted((min(e), max(e), pos[min(e)] < pos[max(e)]) for e in conflict))

    got = list(linear_extensions(range(n), before, commute))
    classes = {key(o) for o in _brute_extensions(n, before)}
    assert len(got) == len(classes)
    assert {key(o) for o in got} == classes


def test_zorder_disjoint_identity():
    polys = [rect(4, 4, 30, 30), rect(50, 50, 70, 70), rect(90, 90, 120, 120)]
    src = _src(polys, [RED, GREEN, BLUE])
    assert optimize_zorder(polys, [RED, GREEN, BLUE], src) == [0, 1, 2]


def test_zorder_nested_pair():
    inner, outer = rect(40, 40, 60, 60), rect(20, 20, 80, 80)
    polys, cols = [inner, outer], [BLUE, RED]
    src = _src(polys, cols, order=[1, 0])
    order = optimize_zorder(polys, cols, src)
    assert order == [1, 0]
    ms = [m.bits for m in _masks(polys)]
    srcf = src.data
    assert composite_mse(ms, cols, [0, 1], srcf) > composite_mse(ms, cols, [1, 0], srcf)


def test_zorder_cap_fallback():
    polys = [regular_polygon(64 + 3 * k, 64 - 2 * k, 30 + k, 5 + k % 3, phase=0.4 * k) for k in range(6)]
    cols = [(40 * k, 255 - 30 * k, 17 * k) for k in range(6)]
    src = _src(polys, cols)
    diags = []
    order = optimize_zorder(polys, cols, src, eval_cap=120, diagnostics=diags)
    areas = [path_mask(p, 64).count() for p in polys]
    assert order == sorted(range(6), key=lambda k: (-areas[k], k))
    assert any("area-descending" in d for d in diags)


@given(st.integers(0, 10 ** 6))
def test_zorder_matches_exhaustive(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 6))
    polys, cols, masks, g = small_component_scene(rng, k, 64, random_scene)
    src = render_fill(list(zip(polys, cols)), order=list(rng.permutation(k)), size=64)
    ca = recover_colors(polys, src, masks=masks)
    order = optimize_zorder(polys, ca, src, masks=masks, graph=g)
    assert subset_valid(order, g.subset_edges)
    best = exhaustive_zorder_mse(masks, ca.colors, src.data, g.subset_edges)
    assert abs(composite_mse(masks, ca.colors, order, src.data) - best) <= 1e-12


def _stroked_square(width, fill=(200, 200, 40), stroke=BLACK):
    p = rect(32, 32, 96, 96)
    src = render_scene([p], [np.array(fill) / 255], [0], 256, strokes=[StrokeSpec(width, stroke, True)])
    return p, src


def test_stroke_detected():
    p, src = _stroked_square(4)
    scene = stylize_scene([p], src)
    s = scene.strokes[0]
    assert s.accepted and 3 <= s.width <= 5 and s.color == BLACK
    assert np.array_equal(scene.render().data, src.data)


def test_thin_stroke_on_sliver_keeps_stroke_color():
    # a 1 px stroke on a narrow triangle rarely covers the boundary pixel
    p = RoundedPolygon(np.array([[74.3, 65.1, -1.0], [63.7, 43.8, -1.0], [24.9, 39.4, -1.0]]))
    src = render_scene([p], [np.array((248, 177, 225)) / 255], [0], 256,
                       strokes=[StrokeSpec(1.0, (51, 184, 94), True)])
    s = stylize_scene([p], src).strokes[0]
    assert s.accepted and s.color == (51, 184, 94) and abs(s.width - 1) <= 1


def test_unstroked_square_rejected():
    p = rect(32, 32, 96, 96)
    src = _src([p], [(200, 200, 40)], size=256)
    scene = stylize_scene([p], src)
    assert all(s is None or not s.accepted for s in scene.strokes)


def test_blank_path_has_no_proposal():
    p = rect(32, 32, 96, 96)
    src = Raster(np.full((256, 256, 3), 0.5))
    assert propose_stroke(p, src) is None


@given(st.integers(0, 10 ** 6))
def test_epsilon_gate_monotone(seed):
    rng = np.random.default_rng(seed)
    polys, cols = random_scene(rng, int(rng.integers(1, 4)))
    strokes = [StrokeSpec(float(rng.integers(1, 6)), BLACK, True) if rng.random() < 0.5 else None
               for _ in polys]
    src = render_scene(polys, [np.array(c) / 255 for c in cols], range(len(polys)), 128, strokes=strokes)
    base = stylize_scene(polys, src, strokes=False)
    before = float(np.mean((base.render().data - src.data) ** 2))
    base.strokes = detect_strokes(base, src)
    after = float(np.mean((base.render().data - src.data) ** 2))
    assert after <= before + 1e-12
    assert all(s.mse_delta >= 0.0002 for s in base.strokes if s is not None and s.accepted)


def test_single_black_square():
    p = rect(32, 32, 96, 96)
    scene = stylize_scene([p], _src([p], [BLACK], size=256))
    assert scene.colors.colors == [BLACK] and scene.order == [0]
    assert scene.strokes == [None] or not scene.strokes[0].accepted


def test_closure_small():
    rng = np.random.default_rng(7)
    for _ in range(10):
        polys, cols = random_scene(rng, int(rng.integers(1, 6)))
        src = render_fill(list(zip(polys, cols)), size=128)
        scene = stylize_scene(polys, src)
        assert np.array_equal(scene.render().data, src.data)


def test_to_svg_lists_paths_in_order():
    polys = [rect(10, 10, 50, 50), rect(30, 30, 90, 90, 5)]
    cols = ColorAssignment([RED, BLUE], [1, 1], [])
    svg = StyledScene(polys, cols, [1, 0], [None, StrokeSpec(2.0, BLACK, True)]).to_svg()
    assert svg.index("#0000ff") < svg.index("#ff0000")
    assert 'stroke="#000000"' in svg and " A " in svg
