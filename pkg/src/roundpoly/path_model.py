"""SVG ingestion: parse a practical SVG subset into absolute path commands,
normalize into the canonical 128-unit frame and sample paths equidistantly.
"""
from __future__ import annotations

import math
import re
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
from PIL import ImageColor

from ._curves import ArcLengthTable, CubicSeg, EllipticalArcSeg, LineSeg, QuadSeg, Segment

CANVAS = 128.0
PADDING = 4.0
CANONICAL_VIEWBOX = (0.0, 0.0, CANVAS, CANVAS)
DEFAULT_SPACING = 0.5
CORNER_ANGLE = 0.35

MOVE, LINE, CUBIC, QUAD, ARC, CLOSE = "M", "L", "C", "Q", "A", "Z"

RGB = tuple  # (r, g, b) ints in 0..255


class SvgParseError(ValueError):
    """Malformed XML.  ``offset`` is the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnsupportedFeatureWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PathCommand:
    kind: str
    points: tuple = ()
    rx: float = 0.0
    ry: float = 0.0
    rotation: float = 0.0
    large_arc: bool = False
    sweep: bool = False

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        if not all(math.isfinite(v) for p in pts for v in p):
            raise ValueError(f"non-finite coordinate in {self.kind} command")
        if self.kind == CLOSE and pts:
            raise ValueError("ClosePath carries no coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def end(self):
        return self.points[-1] if self.points else None


@dataclass(frozen=True)
class PathGeometry:
    subpaths: tuple  # tuple of tuples of PathCommand
    closed: tuple  # one bool per subpath
    viewbox: tuple = CANONICAL_VIEWBOX
    fill_rule: str = "nonzero"

    def __post_init__(self):
        subs = tuple(tuple(s) for s in self.subpaths)
        for s in subs:
            if not s or s[0].kind != MOVE:
                raise ValueError("every subpath must start with MoveTo")
        object.__setattr__(self, "subpaths", subs)
        object.__setattr__(self, "closed", tuple(bool(c) for c in self.closed))
        if len(self.closed) != len(subs):
            raise ValueError("closed flags must match subpaths")

    def transformed(self, matrix) -> "PathGeometry":
        return replace(self, subpaths=tuple(_transform_commands(s, matrix) for s in self.subpaths))

    def to_path_data(self, precision: int = 2) -> str:
        """Absolute M/L/A/C/Z path data (quadratics elevated to cubics)."""
        out = []
        for cmds in self.subpaths:
            cur = None
            for c in cmds:
                if c.kind == QUAD:
                    (qx, qy), (ex, ey) = c.points
                    sx, sy = cur
                    p1 = (sx + 2 / 3 * (qx - sx), sy + 2 / 3 * (qy - sy))
                    p2 = (ex + 2 / 3 * (qx - ex), ey + 2 / 3 * (qy - ey))
                    out.append("C " + " ".join(_fmt(v, precision) for v in (*p1, *p2, ex, ey)))
                elif c.kind == ARC:
                    vals = [c.rx, c.ry, c.rotation]
                    out.append(
                        "A " + " ".join(_fmt(v, precision) for v in vals)
                        + f" {int(c.large_arc)} {int(c.sweep)} "
                        + " ".join(_fmt(v, precision) for v in c.points[0])
                    )
                elif c.kind == CLOSE:
                    out.append("Z")
                else:
                    out.append(c.kind + " " + " ".join(_fmt(v, precision) for p in c.points for v in p))
                if c.points:
                    cur = c.points[-1]
        return " ".join(out)


@dataclass(frozen=True)
class SampledPath:
    """Equidistant samples of one subpath.

    ``corners`` holds rows ``(fractional_index, x, y)`` for tangent
    discontinuities of the source curve; the fitter uses them as forced
    breakpoints.
    """

    points: np.ndarray
    closed: bool
    spacing: float
    corners: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self):
        pts = np.asarray(self.points, float)
        need = 3 if self.closed else 2
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < need:
            raise ValueError(f"need at least {need} samples, got {len(pts)}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "corners", np.asarray(self.corners, float).reshape(-1, 3))


class SvgElement(NamedTuple):
    geometry: PathGeometry
    fill: Optional[RGB]
    index: int


# ---------------------------------------------------------------------------
# colors
# ---------------------------------------------------------------------------

_RGB_FUNC = re.compile(r"rgb\(\s*([^,\s]+)\s*[,\s]\s*([^,\s]+)\s*[,\s]\s*([^,\s)]+)\s*\)$", re.I)


def parse_color(text: str) -> Optional[RGB]:
    """Parse a CSS color: ``#rgb``, ``#rrggbb``, ``rgb()`` or a named color.

    Returns ``None`` for ``none``/``transparent``; raises ValueError for
    anything else unparseable.
    """
    t = text.strip().lower()
    if t in ("none", "transparent"):
        return None
    if t.startswith("#"):
        h = t[1:]
        if len(h) == 3:
            h = "".join(ch * 2 for ch in h)
        if len(h) != 6 or not all(ch in "0123456789abcdef" for ch in h):
            raise ValueError(f"bad hex color {text!r}")
        return tuple(int(h[i:i + 2], 16) for i in (0, 2, 4))
    m = _RGB_FUNC.match(t)
    if m:
        vals = []
        for part in m.groups():
            if part.endswith("%"):
                v = float(part[:-1]) * 2.55
            else:
                v = float(part)
            vals.append(int(round(min(max(v, 0.0), 255.0))))
        return tuple(vals)
    if t in ImageColor.colormap:
        return ImageColor.getrgb(t)[:3]
    raise ValueError(f"unknown color {text!r}")


def to_hex(rgb) -> str:
    return "#%02x%02x%02x" % tuple(int(v) for v in rgb)


# ---------------------------------------------------------------------------
# path data
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"([MmLlHhVvCcSsQqTtAaZz])|([-+]?(?:\d*\.\d+|\d+\.?)(?:[eE][-+]?\d+)?)")
_NARGS = {"M": 2, "L": 2, "H": 1, "V": 1, "C": 6, "S": 4, "Q": 4, "T": 2, "A": 7, "Z": 0}


def _tokenize(d: str):
    pos = 0
    tokens = []
    n = len(d)
    while pos < n:
        ch = d[pos]
        if ch.isspace() or ch == ",":
            pos += 1
            continue
        m = _TOKEN.match(d, pos)
        if not m:
            raise ValueError(f"bad path data at {pos}: {d[pos:pos + 10]!r}")
        tokens.append((m.group(1), m.group(2), pos))
        pos = m.end()
    return tokens


def parse_path_data(d: str) -> tuple:
    """Parse SVG path data into absolute subpaths.

    Returns ``(subpaths, closed)``; relative commands and H/V/S/T shorthands
    are resolved to M/L/C/Q/A/Z.
    """
    tokens = _tokenize(d)
    subpaths, closed = [], []
    cmds: list = []
    cur = np.zeros(2)
    start = np.zeros(2)
    last_ctrl = None
    last_kind = None
    i = 0
    cmd = None

    def flush(is_closed):
        nonlocal cmds
        if cmds:
            subpaths.append(tuple(cmds))
            closed.append(is_closed)
        cmds = []

    while i < len(tokens):
        letter, num, pos = tokens[i]
        if letter:
            cmd = letter
            i += 1
            if cmd in "Zz":
                if cmds:
                    cmds.append(PathCommand(CLOSE))
                    flush(True)
                cur = start.copy()
                last_kind, last_ctrl = CLOSE, None
                continue
        elif cmd is None:
            raise ValueError(f"path data must start with a command (offset {pos})")
        up = cmd.upper()
        rel = cmd.islower()
        if up == "Z":
            raise ValueError(f"unexpected number after Z (offset {pos})")
        args = []
        nargs = _NARGS[up]
        while len(args) < nargs:
            if i >= len(tokens) or tokens[i][0]:
                raise ValueError(f"too few arguments for {cmd} (offset {pos})")
            tok = tokens[i][1]
            if up == "A" and len(args) in (3, 4) and len(tok) > 1 and tok[0] in "01":
                # arc flags may be packed: "a1 1 0 0110 10"
                args.append(float(tok[0]))
                rest = tok[1:]
                tokens[i] = (None, rest, tokens[i][2] + 1)
                continue
            args.append(float(tok))
            i += 1
        base = cur if rel else np.zeros(2)
        if up == "M":
            flush(False)
            cur = base + args
            start = cur.copy()
            cmds = [PathCommand(MOVE, (tuple(cur),))]
            cmd = "l" if rel else "L"
            last_kind, last_ctrl = MOVE, None
            continue
        if not cmds:
            # drawing after Z without a MoveTo starts at the subpath origin
            cmds = [PathCommand(MOVE, (tuple(start),))]
        if up in "LHV":
            if up == "L":
                p = base + args
            elif up == "H":
                p = np.array([args[0] + (cur[0] if rel else 0.0), cur[1]])
            else:
                p = np.array([cur[0], args[0] + (cur[1] if rel else 0.0)])
            cmds.append(PathCommand(LINE, (tuple(p),)))
            cur = p
            last_kind, last_ctrl = LINE, None
        elif up in "CS":
            if up == "C":
                c1 = base + args[0:2]
                c2 = base + args[2:4]
                p = base + args[4:6]
            else:
                c1 = 2 * cur - last_ctrl if last_kind == CUBIC else cur.copy()
                c2 = base + args[0:2]
                p = base + args[2:4]
            cmds.append(PathCommand(CUBIC, (tuple(c1), tuple(c2), tuple(p))))
            cur, last_ctrl, last_kind = p, c2, CUBIC
        elif up in "QT":
            if up == "Q":
                c = base + args[0:2]
                p = base + args[2:4]
            else:
                c = 2 * cur - last_ctrl if last_kind == QUAD else cur.copy()
                p = base + args[0:2]
            cmds.append(PathCommand(QUAD, (tuple(c), tuple(p))))
            cur, last_ctrl, last_kind = p, c, QUAD
        elif up == "A":
            p = base + args[5:7]
            cmds.append(PathCommand(ARC, (tuple(p),), rx=abs(args[0]), ry=abs(args[1]),
                                    rotation=args[2], large_arc=bool(args[3]), sweep=bool(args[4])))
            cur = p
            last_kind, last_ctrl = ARC, None
    flush(False)
    return tuple(subpaths), tuple(closed)


def subpath_segments(cmds: Sequence[PathCommand], closed: bool) -> list:
    """Lower one subpath to curve segments (closing line included)."""
    segs: list = []
    cur = np.array(cmds[0].points[0], float)
    start = cur.copy()
    for c in cmds[1:]:
        if c.kind == LINE:
            p = np.array(c.points[0])
            segs.append(LineSeg(cur, p))
        elif c.kind == CUBIC:
            segs.append(CubicSeg(cur, *c.points))
            p = np.array(c.points[-1])
        elif c.kind == QUAD:
            segs.append(QuadSeg(cur, *c.points))
            p = np.array(c.points[-1])
        elif c.kind == ARC:
            p = np.array(c.points[0])
            seg = EllipticalArcSeg.from_endpoints(cur, p, c.rx, c.ry, c.rotation, c.large_arc, c.sweep)
            if seg is not None:
                segs.append(seg)
        elif c.kind == CLOSE:
            break
        else:
            raise ValueError(f"unexpected {c.kind} inside subpath")
        cur = p
    if closed and np.hypot(*(cur - start)) > 1e-12:
        segs.append(LineSeg(cur, start))
    return segs


def _transform_commands(cmds, m):
    m = np.asarray(m, float)
    out = []
    cur = None
    for c in cmds:
        if c.kind == ARC:
            seg = EllipticalArcSeg.from_endpoints(cur, c.points[0], c.rx, c.ry, c.rotation, c.large_arc, c.sweep)
            p = _apply(m, c.points[0])
            if isinstance(seg, EllipticalArcSeg):
                t = seg.transformed(m)
                det = np.linalg.det(m[:2, :2])
                out.append(PathCommand(ARC, (p,), rx=t.rx, ry=t.ry, rotation=math.degrees(t.phi),
                                       large_arc=c.large_arc, sweep=c.sweep if det > 0 else not c.sweep))
            else:
                out.append(PathCommand(ARC, (p,), rx=c.rx, ry=c.ry, rotation=c.rotation,
                                       large_arc=c.large_arc, sweep=c.sweep))
        else:
            out.append(PathCommand(c.kind, tuple(_apply(m, q) for q in c.points)))
        if c.points:
            cur = c.points[-1]
    return tuple(out)


def _apply(m, p):
    v = m[:2, :2] @ np.asarray(p, float) + m[:2, 2]
    return (float(v[0]), float(v[1]))


def _fmt(v: float, precision: int) -> str:
    s = f"{v:.{precision}f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


# ---------------------------------------------------------------------------
# SVG documents
# ---------------------------------------------------------------------------

_TRANSFORM = re.compile(r"(\w+)\s*\(([^)]*)\)")
_NUM = re.compile(r"[-+]?(?:\d*\.\d+|\d+\.?)(?:[eE][-+]?\d+)?")
_SKIP_CONTAINERS = {"defs", "clipPath", "mask", "symbol", "marker", "pattern", "linearGradient",
                    "radialGradient", "filter", "style", "title", "desc", "metadata", "text"}
_SHAPES = {"path", "rect", "circle", "ellipse", "line", "polyline", "polygon"}


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_transform(text: str) -> np.ndarray:
    m = np.eye(3)
    for name, args in _TRANSFORM.findall(text or ""):
        a = [float(v) for v in _NUM.findall(args)]
        if name == "translate":
            t = np.array([[1, 0, a[0]], [0, 1, a[1] if len(a) > 1 else 0.0], [0, 0, 1]])
        elif name == "scale":
            sx = a[0]
            sy = a[1] if len(a) > 1 else sx
            t = np.diag([sx, sy, 1.0])
        elif name == "rotate":
            th = math.radians(a[0])
            c, s = math.cos(th), math.sin(th)
            t = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])
            if len(a) == 3:
                cx, cy = a[1], a[2]
                t = np.array([[1, 0, cx], [0, 1, cy], [0, 0, 1.0]]) @ t @ np.array([[1, 0, -cx], [0, 1, -cy], [0, 0, 1.0]])
        elif name == "matrix":
            t = np.array([[a[0], a[2], a[4]], [a[1], a[3], a[5]], [0, 0, 1.0]])
        else:
            raise NotImplementedError(f"transform {name}")
        m = m @ t
    return m


def _style(el) -> dict:
    out = {}
    for part in (el.get("style") or "").split(";"):
        if ":" in part:
            k, v = part.split(":", 1)
            out[k.strip()] = v.strip()
    return out


def _length(text, default=0.0) -> float:
    if text is None:
        return default
    m = _NUM.match(text.strip())
    return float(m.group(0)) if m else default


def _shape_commands(el, tag):
    """Lower a basic shape to ``(subpaths, closed)``."""
    f = lambda k: _length(el.get(k))
    if tag == "path":
        return parse_path_data(el.get("d") or "")
    if tag == "rect":
        x, y, w, h = f("x"), f("y"), f("width"), f("height")
        if w <= 0 or h <= 0:
            return (), ()
        rx, ry = el.get("rx"), el.get("ry")
        if rx is None and ry is None:
            rx = ry = 0.0
        else:
            rx, ry = _length(rx if rx is not None else ry), _length(ry if ry is not None else rx)
        rx, ry = min(abs(rx), w / 2), min(abs(ry), h / 2)
        if rx == 0 or ry == 0:
            pts = [(x, y), (x + w, y), (x + w, y + h), (x, y + h)]
            return (tuple([PathCommand(MOVE, (pts[0],))] + [PathCommand(LINE, (p,)) for p in pts[1:]] + [PathCommand(CLOSE)]),), (True,)
        arc = lambda p: PathCommand(ARC, (p,), rx=rx, ry=ry, sweep=True)
        cmds = [
            PathCommand(MOVE, ((x + rx, y),)),
            PathCommand(LINE, ((x + w - rx, y),)), arc((x + w, y + ry)),
            PathCommand(LINE, ((x + w, y + h - ry),)), arc((x + w - rx, y + h)),
            PathCommand(LINE, ((x + rx, y + h),)), arc((x, y + h - ry)),
            PathCommand(LINE, ((x, y + ry),)), arc((x + rx, y)),
            PathCommand(CLOSE),
        ]
        cmds = [c for i, c in enumerate(cmds) if not (c.kind == LINE and c.points[0] == cmds[i - 1].end)]
        return (tuple(cmds),), (True,)
    if tag in ("circle", "ellipse"):
        cx, cy = f("cx"), f("cy")
        if tag == "circle":
            rx = ry = f("r")
        else:
            rx, ry = f("rx"), f("ry")
        if rx <= 0 or ry <= 0:
            return (), ()
        pts = [(cx, cy + ry), (cx - rx, cy), (cx, cy - ry), (cx + rx, cy)]
        cmds = [PathCommand(MOVE, ((cx + rx, cy),))]
        cmds += [PathCommand(ARC, (p,), rx=rx, ry=ry, sweep=True) for p in pts]
        cmds.append(PathCommand(CLOSE))
        return (tuple(cmds),), (True,)
    if tag == "line":
        return (((PathCommand(MOVE, ((f("x1"), f("y1")),)), PathCommand(LINE, ((f("x2"), f("y2")),))),), (False,))
    if tag in ("polyline", "polygon"):
        nums = [float(v) for v in _NUM.findall(el.get("points") or "")]
        pts = list(zip(nums[0::2], nums[1::2]))
        if len(pts) < 2:
            return (), ()
        cmds = [PathCommand(MOVE, (pts[0],))] + [PathCommand(LINE, (p,)) for p in pts[1:]]
        if tag == "polygon":
            cmds.append(PathCommand(CLOSE))
        return (tuple(cmds),), (tag == "polygon",)
    return (), ()


def _viewbox(root, elements) -> tuple:
    vb = root.get("viewBox")
    if vb:
        vals = [float(v) for v in _NUM.findall(vb)]
        if len(vals) == 4:
            return tuple(vals)
    w, h = root.get("width"), root.get("height")
    if w and h and not w.endswith("%") and not h.endswith("%"):
        return (0.0, 0.0, _length(w), _length(h))
    pts = [p for g in elements for s in g.subpaths for c in s for p in c.points]
    if not pts:
        return CANONICAL_VIEWBOX
    arr = np.array(pts)
    lo, hi = arr.min(0), arr.max(0)
    return (float(lo[0]), float(lo[1]), float(max(hi[0] - lo[0], 1e-9)), float(max(hi[1] - lo[1], 1e-9)))


def _byte_offset(text: str, line: int, col: int) -> int:
    lines = text.splitlines(keepends=True)
    prefix = "".join(lines[: max(line - 1, 0)])
    tail = lines[line - 1][:col] if 0 < line <= len(lines) else ""
    return len((prefix + tail).encode("utf-8"))


def parse_svg(document: str) -> list:
    """Parse an SVG document into ``SvgElement(geometry, fill, index)`` entries.

    One entry per visible geometry element in document order.  Unsupported
    features (gradient fills, clip paths, ``use``, skew transforms) skip the
    element with an ``UnsupportedFeatureWarning``.  Malformed XML raises
    ``SvgParseError`` carrying the byte offset.
    """
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        line, col = exc.position
        raise SvgParseError(str(exc), _byte_offset(document, line, col)) from None
    if _local(root.tag) != "svg":
        raise SvgParseError("root element is not <svg>", 0)

    found = []

    def visit(el, matrix, inherited):
        tag = _local(el.tag)
        if tag in _SKIP_CONTAINERS:
            return
        style = _style(el)
        attrs = dict(inherited)
        for key in ("fill", "fill-rule", "display", "visibility"):
            val = style.get(key, el.get(key))
            if val is not None and val != "inherit":
                attrs[key] = val
        if attrs.get("display") == "none" and tag != "svg":
            return
        if tag == "use":
            warnings.warn("<use> is not supported; element skipped", UnsupportedFeatureWarning, stacklevel=3)
            return
        if el.get("clip-path") or style.get("clip-path") or el.get("mask") or style.get("mask"):
            warnings.warn(f"<{tag}> with clip-path/mask skipped", UnsupportedFeatureWarning, stacklevel=3)
            return
        try:
            local = parse_transform(el.get("transform")) if el.get("transform") else np.eye(3)
        except NotImplementedError as exc:
            warnings.warn(f"unsupported {exc}; <{tag}> skipped", UnsupportedFeatureWarning, stacklevel=3)
            return
        m = matrix @ local
        if tag in _SHAPES:
            if attrs.get("visibility") in ("hidden", "collapse"):
                return
            fill_text = attrs.get("fill", "black")
            if fill_text.strip().startswith("url("):
                warnings.warn(f"paint server fill on <{tag}> skipped", UnsupportedFeatureWarning, stacklevel=3)
                return
            try:
                fill = parse_color(fill_text)
            except ValueError:
                warnings.warn(f"unparseable fill {fill_text!r}; <{tag}> skipped", UnsupportedFeatureWarning, stacklevel=3)
                return
            try:
                subs, closed = _shape_commands(el, tag)
            except ValueError as exc:
                warnings.warn(f"bad geometry on <{tag}>: {exc}", UnsupportedFeatureWarning, stacklevel=3)
                return
            if not subs:
                return
            geom = PathGeometry(subs, closed, fill_rule=attrs.get("fill-rule", "nonzero"))
            if not np.allclose(m, np.eye(3)):
                geom = geom.transformed(m)
            found.append((geom, fill))
            return
        if tag not in ("svg", "g", "a", "switch"):
            return
        for child in el:
            visit(child, m, attrs)

    visit(root, np.eye(3), {})
    vb = _viewbox(root, [g for g, _ in found])
    return [SvgElement(replace(g, viewbox=vb), fill, i) for i, (g, fill) in enumerate(found)]


# ---------------------------------------------------------------------------
# normalization and sampling
# ---------------------------------------------------------------------------

def viewbox_matrix(viewbox) -> np.ndarray:
    """Affine map from ``viewbox`` into the padded canonical square."""
    x, y, w, h = (float(v) for v in viewbox)
    if not (w > 0 and h > 0):
        raise ValueError(f"degenerate viewbox {viewbox}")
    if np.allclose((x, y, w, h), CANONICAL_VIEWBOX, rtol=0, atol=1e-12):
        return np.eye(3)
    span = CANVAS - 2 * PADDING
    s = span / max(w, h)
    ox = PADDING + (span - w * s) / 2 - x * s
    oy = PADDING + (span - h * s) / 2 - y * s
    return np.array([[s, 0, ox], [0, s, oy], [0, 0, 1.0]])


def normalize_viewbox(scene: Sequence[PathGeometry], source_viewbox=None) -> list:
    """Map every geometry into the 128-unit frame with 4-unit padding.

    The longer viewbox side spans 120 units and the shorter axis is centered.
    A source viewbox equal to ``(0, 0, 128, 128)`` is taken as already
    canonical, which makes the operation idempotent.
    """
    out = []
    for g in scene:
        vb = source_viewbox if source_viewbox is not None else g.viewbox
        m = viewbox_matrix(vb)
        out.append(replace(g.transformed(m), viewbox=CANONICAL_VIEWBOX))
    return out


def _unit(v):
    n = math.hypot(v[0], v[1])
    return v / n if n > 0 else v


def _end_tangents(seg: Segment):
    d0 = seg.deriv(np.array([0.0, 1e-7]))
    d1 = seg.deriv(np.array([1.0, 1.0 - 1e-7]))
    t0 = d0[0] if np.hypot(*d0[0]) > 1e-12 else d0[1]
    t1 = d1[0] if np.hypot(*d1[0]) > 1e-12 else d1[1]
    return _unit(t0), _unit(t1)


def _turn(a, b) -> float:
    return abs(math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1]))


def sample_segments(segs: Sequence[Segment], closed: bool, spacing: float = DEFAULT_SPACING,
                    corner_angle: float = CORNER_ANGLE) -> SampledPath:
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    tables = [ArcLengthTable(s) for s in segs]
    tables = [t for t in tables if t.length > 1e-12]
    lengths = np.array([t.length for t in tables])
    total = float(lengths.sum()) if len(lengths) else 0.0
    if total <= 1e-12:
        raise ValueError("degenerate path")
    if closed:
        n = max(3, int(math.floor(total / spacing + 1e-9)))
        step = total / n
        s = np.arange(n) * step
    else:
        step = spacing
        n = int(math.floor(total / spacing + 1e-9))
        s = np.arange(n + 1) * step
        if total - s[-1] > 1e-9 * total:
            s = np.append(s, total)
        if len(s) < 2:
            s = np.array([0.0, total])
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(tables) - 1)
    pts = np.empty((len(s), 2))
    for k, tab in enumerate(tables):
        sel = idx == k
        if np.any(sel):
            pts[sel] = tab.seg.point(tab.t_at(s[sel] - cum[k]))
    if not closed:
        pts[-1] = tables[-1].seg.end if abs(s[-1] - total) < 1e-12 else pts[-1]
    corners = []
    njoin = len(tables) if closed else len(tables) - 1
    for k in range(njoin):
        a, b = tables[k].seg, tables[(k + 1) % len(tables)].seg
        if _turn(_end_tangents(a)[1], _end_tangents(b)[0]) > corner_angle:
            pos = cum[k + 1] % total
            corners.append((pos / step, *b.start))
    return SampledPath(pts, closed, step, np.array(corners).reshape(-1, 3))


def sample_equidistant(path: PathGeometry, spacing: float = DEFAULT_SPACING) -> list:
    """Equidistant arc-length samples, one ``SampledPath`` per subpath.

    Closed subpaths use ``floor(L / spacing)`` samples with the spacing
    stretched to ``L / n`` so the seam gap matches; open subpaths keep the
    exact spacing and include both endpoints.
    """
    return [sample_segments(subpath_segments(cmds, closed), closed, spacing)
            for cmds, closed in zip(path.subpaths, path.closed)]
