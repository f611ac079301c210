import json
import sys

import numpy as np
import pytest

from roundpoly.degrade import (DegradeConfig, DegradedToBlank, classical_trace, contours_from_json,
                               contours_to_json, degrade_outline, degrade_trace, densify,
                               douglas_peucker, external_trace, gaussian_blur, polygon_area,
                               sample_params)
from roundpoly.raster import Raster, chamfer, render_fill, render_outline, to_uint8
from roundpoly.rounded_poly import RoundedPolygon, from_rounded
from roundpoly.synth import random_scene, rect, regular_polygon


def _circle(cx, cy, r):
    return RoundedPolygon.from_triples([(cx + r, cy + r, r), (cx - r, cy + r, r),
                                        (cx - r, cy - r, r), (cx + r, cy - r, r)])


def test_square_trace_corners():
    img = render_fill([(rect(32, 32, 96, 96), (0, 0, 0))], size=512)
    (loop,), = [classical_trace(img).contours]
    px = loop * 512 / 128
    for corner in [(128, 128), (384, 128), (384, 384), (128, 384)]:
        assert np.hypot(*(px - corner).T).min() <= 1.0
    assert len(loop) <= 8


def test_blank_trace_is_empty():
    assert classical_trace(Raster(np.ones((64, 64)))).contours == []


def test_circle_trace_radius():
    img = render_fill([(_circle(64, 64, 32), (0, 0, 0))], size=256)
    (loop,) = classical_trace(img).contours
    r = np.hypot(*(loop * 2 - 128).T)
    assert np.all(np.abs(r - 64) <= 1.5)


def test_trace_validity():
    rng = np.random.default_rng(2)
    polys, cols = random_scene(rng, 4)
    img = render_fill(list(zip(polys, cols)), size=300)
    for loop in classical_trace(img.gray()).contours:
        assert not np.allclose(loop[0], loop[-1])
        assert abs(polygon_area(loop)) > 0


def test_douglas_peucker_keeps_square_corners():
    sq = densify(np.array([[0, 0], [10, 0], [10, 10], [0, 10]], float), 0.5)
    out = douglas_peucker(sq, 0.1)
    assert len(out) == 4
    assert {tuple(p) for p in out} == {(0, 0), (10, 0), (10, 10), (0, 10)}


def test_blur_preserves_constant_and_mass():
    flat = Raster(np.full((20, 20), 0.3))
    assert np.allclose(gaussian_blur(flat, 1.7).data, 0.3)
    spot = np.ones((41, 41))
    spot[20, 20] = 0.0
    out = gaussian_blur(Raster(spot), 1.0).data
    assert (1 - out).sum() == pytest.approx(1.0)


SCENE = [(regular_polygon(64, 64, 40, 6, d=8), (0, 0, 0)), (rect(20, 20, 50, 40), (90, 0, 0))]


def test_same_seed_identical():
    cfg = DegradeConfig(rng_seed=11, bypass_probability=0.0)
    a, ra = degrade_outline(SCENE, cfg)
    b, rb = degrade_outline(SCENE, cfg)
    assert np.array_equal(to_uint8(a), to_uint8(b)) and ra == rb


def test_seed_controls_parameters():
    ps = {sample_params(DegradeConfig(rng_seed=s))["resolution"] for s in range(20)}
    assert len(ps) > 1
    assert all(224 <= r <= 336 for r in ps)


def test_bypass_is_clean_outline():
    cfg = DegradeConfig(bypass_probability=1.0)
    out, rec = degrade_outline(SCENE, cfg)
    assert rec["bypass"]
    clean = render_outline([p for p, _ in SCENE])
    assert np.array_equal(out.data, clean.data)


def _boundary(polys, per_unit=4.0):
    return np.vstack([from_rounded(p, clamp=True).sample(per_unit) for p in polys])


def test_full_fidelity_is_near_identity():
    cfg = DegradeConfig(resolution_range=(448, 448), blur_range=(0.0, 0.0), bypass_probability=0.0)
    traced = degrade_trace(SCENE, cfg)
    pts = np.vstack([densify(c, 0.25) for c in traced.contours])
    px_chamfer = chamfer(pts, _boundary([p for p, _ in SCENE]), scale=448 / 128)
    assert px_chamfer <= 1.5


def test_sliver_is_lost():
    sliver = rect(20, 90, 100, 91)
    cfg = DegradeConfig(resolution_range=(224, 224), blur_range=(1.5, 1.5), bypass_probability=0.0)
    traced = degrade_trace([(rect(30, 10, 90, 60), (0, 0, 0)), (sliver, (0, 0, 0))], cfg)
    assert len(traced.contours) == 1
    assert np.all(traced.contours[0][:, 1] < 70)
    with pytest.raises(DegradedToBlank, match="degraded to blank"):
        degrade_outline([(sliver, (0, 0, 0))], cfg)


def _trace_chamfer(seed, res, sigma=1.0):
    rng = np.random.default_rng(seed)
    polys, cols = random_scene(rng, 3)
    cfg = DegradeConfig(resolution_range=(res, res), blur_range=(sigma, sigma), bypass_probability=0.0)
    traced = degrade_trace(list(zip(polys, cols)), cfg)
    if not traced.contours:
        return np.nan
    pts = np.vstack([densify(c, 0.25) for c in traced.contours])
    return chamfer(pts, _boundary(polys))


@pytest.mark.slow
def test_degradation_monotone_in_resolution():
    means = [np.nanmean([_trace_chamfer(s, res) for s in range(50)]) for res in (336, 280, 224)]
    assert means[0] <= means[1] <= means[2]


def test_contour_json_round_trip():
    loops = [np.array([[1.0, 2.0], [3.5, 4.25], [0.0, 9.0]])]
    back = contours_from_json(contours_to_json(loops))
    assert np.allclose(back[0], loops[0])
    assert json.loads(contours_to_json(loops)) == {"contours": [[[1.0, 2.0], [3.5, 4.25], [0.0, 9.0]]]}


def test_external_tracer(tmp_path):
    script = tmp_path / "tracer.py"
    script.write_text("import json, sys\n"
                      "assert sys.argv[1].endswith('.png')\n"
                      "print(json.dumps({'contours': [[[10, 10], [20, 10], [20, 20]]]}))\n")
    res = external_trace(Raster(np.ones((16, 16))), f"{sys.executable} {script} {{input}}")
    assert len(res.contours) == 1 and res.contours[0].shape == (3, 2)
    cfg = DegradeConfig(bypass_probability=0.0, tracer_command=f"{sys.executable} {script}")
    out, rec = degrade_outline(SCENE, cfg)
    assert rec["contours"] == 1


def test_config_validation():
    with pytest.raises(ValueError):
        DegradeConfig(resolution_range=(300, 200))
    with pytest.raises(ValueError):
        DegradeConfig(blur_range=(-1, 2))
