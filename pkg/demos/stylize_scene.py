"""Recover colors, paint order and strokes for decoded geometry from a source image."""
import sys

import numpy as np

from roundpoly.raster import mse, render_scene, write_image
from roundpoly.stylize import StrokeSpec, stylize_scene
from roundpoly.synth import random_scene

out = sys.argv[1] if len(sys.argv) > 1 else None
rng = np.random.default_rng(3)
polys, cols = random_scene(rng, 6)
order = list(rng.permutation(len(polys)))
strokes = [None] * len(polys)
strokes[order[-1]] = StrokeSpec(3.0, (20, 20, 20), True)
src = render_scene(polys, [np.array(c) / 255 for c in cols], order, 256, strokes=strokes)

scene = stylize_scene(polys, src)
print("true order     ", [int(k) for k in order])
print("recovered order", scene.order)
for i, (c, s) in enumerate(zip(scene.colors.colors, scene.strokes)):
    stroke = f"stroke {s.width:.1f}px {s.color}" if s is not None and s.accepted else "no stroke"
    print(f"path {i}: fill {c} (true {tuple(cols[i])}), {stroke}")
# orders that differ only on non-overlapping paths render identically
print("render mse vs source", mse(scene.render(), src))
for d in scene.diagnostics:
    print("diagnostic:", d)
if out:
    write_image(src, f"{out}_source.png")
    write_image(scene.render(), f"{out}_styled.png")
