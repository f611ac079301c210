"""Rounded-polygon vector graphics: SVG to line-arc chains to (x, y, d)
token text and back, plus degradation, stylization and best-of-N selection."""

from .linearc import ArcPrim, LinePrim, LineArcPath, fit_linearc, subdivide_large_arcs
from .path_model import PathGeometry, SampledPath, normalize_viewbox, parse_svg, sample_equidistant
from .raster import Raster, chamfer, mse, render_fill, render_outline, ssim
from .rounded_poly import RoundedPolygon, deserialize, from_rounded, serialize, to_rounded
from .stylize import StyledScene, optimize_zorder, stylize_scene

__version__ = "0.1.0"
