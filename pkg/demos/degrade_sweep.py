"""Trace error of the degradation pipeline as the reduced resolution grows."""
import math

import numpy as np

from roundpoly.degrade import DegradeConfig, degrade_trace, densify
from roundpoly.raster import chamfer
from roundpoly.rounded_poly import from_rounded
from roundpoly.synth import random_scene

for res in (224, 256, 288, 336):
    dists = []
    for seed in range(20):
        polys, cols = random_scene(np.random.default_rng(seed), 3)
        cfg = DegradeConfig(resolution_range=(res, res), rng_seed=seed, bypass_probability=0.0)
        traced = degrade_trace(list(zip(polys, cols)), cfg)
        if not traced.contours:
            continue
        truth = np.vstack([from_rounded(p, clamp=True).sample(4.0) for p in polys])
        dists.append(chamfer(np.vstack([densify(c, 0.25) for c in traced.contours]), truth))
    print(f"{res}px: mean chamfer {np.mean(dists) if dists else math.nan:.4f} over {len(dists)} scenes")
