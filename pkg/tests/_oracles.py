"""Independent reference computations used by several test modules."""
import itertools

import numpy as np

from roundpoly.stylize import build_overlap_graph, scene_masks


def composite_mse(masks, colors, order, src):
    img = np.ones(src.shape)
    for i in order:
        img[masks[i]] = np.array(colors[i], float) / 255.0
    return float(np.mean((img - src) ** 2))


def subset_valid(order, subset_edges):
    pos = {v: k for k, v in enumerate(order)}
    return all(pos[a] < pos[b] for a, b in subset_edges)


def exhaustive_zorder_mse(masks, colors, src, subset_edges):
    """Best MSE over every global order that respects the subset edges."""
    k = len(masks)
    return min(composite_mse(masks, colors, o, src)
               for o in itertools.permutations(range(k)) if subset_valid(o, subset_edges))


def small_component_scene(rng, k, size, make_scene, max_component=5):
    """Redraw until every overlap component has at most ``max_component`` paths."""
    while True:
        polys, cols = make_scene(rng, k)
        masks = scene_masks(polys, size)
        g = build_overlap_graph(masks)
        if max(map(len, g.components)) <= max_component:
            return polys, cols, masks, g
