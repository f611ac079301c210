"""Command-line entry point: ``roundpoly {encode|decode|degrade|select|metrics|roundtrip}``.

Exit status is 0 on success, 1 on usage or input errors and 2 when a
degraded render traces to nothing.
"""
from __future__ import annotations

import argparse
import json
import math
import shlex
import subprocess
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import SCORERS, RunConfig
from .degrade import DegradedToBlank, degrade_outline
from .path_model import SvgParseError
from .pipeline import decode_doc, encode_svg, roundtrip
from .raster import Raster, chamfer, mse, read_image, ssim, write_image
from .rounded_poly import TokenError
from .stylize import ColorAssignment, StyledScene, stylize_scene

EXIT_OK, EXIT_INPUT, EXIT_BLANK = 0, 1, 2
MID_GRAY = (128, 128, 128)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for blank degradation
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _read_text(path) -> str:
    if str(path) == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write_text(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    return cfg.with_overrides(rng_seed=args.seed)


def _info(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_encode(args, cfg: RunConfig) -> int:
    enc = encode_svg(_read_text(args.input), cfg)
    _write_text(args.output, enc.doc if args.output else enc.doc + "\n")
    for w in enc.warnings:
        _info(f"warning: {w}")
    for k, p in enumerate(enc.paths, start=1):
        _info(f"path {k}: {p.n_lines} lines, {p.n_arcs} arcs, {len(p.polygon)} vertices")
    _info(f"tokens {enc.tokens} (raw {enc.raw_tokens}), savings {enc.savings:.1%}")
    return EXIT_OK


def _gray_scene(polys) -> StyledScene:
    n = len(polys)
    colors = ColorAssignment([MID_GRAY] * n, ["default"] * n, [])
    return StyledScene(list(polys), colors, list(range(n)), [None] * n)


def _styled(doc: str, source, cfg: RunConfig, strict: bool):
    dec = decode_doc(doc, strict=strict)
    if not dec.polygons:
        raise ValueError("no decodable paths")
    if source is None:
        scene = _gray_scene(dec.polygons)
    else:
        scene = stylize_scene(dec.polygons, source, cfg.eval_cap, epsilon=cfg.stroke_epsilon,
                              delta=cfg.color_delta)
    scene.diagnostics[:0] = dec.diagnostics
    return scene


def cmd_decode(args, cfg: RunConfig) -> int:
    source = read_image(args.source) if args.source else None
    scene = _styled(_read_text(args.input), source, cfg, args.strict)
    for d in scene.diagnostics:
        _info(f"diagnostic: {d}")
    _write_text(args.output, scene.to_svg())
    return EXIT_OK


def cmd_degrade(args, cfg: RunConfig) -> int:
    enc = encode_svg(_read_text(args.input), cfg)
    scene = [(p.chain, p.fill if p.fill is not None else (0, 0, 0)) for p in enc.paths]
    dcfg = cfg.degrade_config()
    if args.bypass:
        dcfg = type(dcfg)(**{**dcfg.__dict__, "bypass_probability": 1.0})
    try:
        raster, record = degrade_outline(scene, dcfg)
    except DegradedToBlank as exc:
        _info(str(exc))
        return EXIT_BLANK
    write_image(raster, args.output)
    _info(json.dumps(record, sort_keys=True))
    return EXIT_OK


def external_score(command: str, rendered: Raster, source: Raster, timeout: float = 60.0) -> float:
    """Run ``command`` with the two PNG paths appended (or substituted for
    ``{a}`` / ``{b}``); it must print one decimal number."""
    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp) / "candidate.png", Path(tmp) / "source.png"
        write_image(rendered, a)
        write_image(source, b)
        argv = shlex.split(command)
        if any("{a}" in t or "{b}" in t for t in argv):
            argv = [t.replace("{a}", str(a)).replace("{b}", str(b)) for t in argv]
        else:
            argv += [str(a), str(b)]
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    if proc.returncode != 0:
        raise ValueError(f"scorer exited with status {proc.returncode}")
    value = float(proc.stdout.strip())
    if math.isnan(value):
        raise ValueError("scorer printed nan")
    return value


def score(rendered: Raster, source: Raster, scorer: str, command: str = "") -> float:
    """Higher is better for every scorer."""
    if rendered.channels != source.channels:
        rendered, source = rendered.rgb(), source.rgb()
    if scorer == "neg-mse":
        return -mse(rendered, source)
    if scorer == "ssim":
        return ssim(rendered, source)
    if scorer == "external":
        return external_score(command, rendered, source)
    raise ValueError(f"unknown scorer {scorer!r}")


def _evaluate(doc: str, source: Raster, cfg: RunConfig, scorer: str, command: str):
    """``(score, scene, message)``; failures score -inf instead of raising."""
    try:
        scene = _styled(doc, source, cfg, strict=False)
    except (ValueError, TokenError) as exc:
        return -math.inf, None, f"decode failed: {exc}"
    rendered = scene.render(source.width)
    try:
        return score(rendered, source, scorer, command), scene, ""
    except (ValueError, OSError, subprocess.SubprocessError) as exc:
        return -math.inf, scene, f"scorer failed: {exc}"


def select_best(docs, source: Raster, cfg: RunConfig, scorer=None, command=None, workers=None):
    """Score every candidate concurrently; returns ``(best index or None,
    rows)`` with rows in candidate order.  Ties go to the earliest index."""
    scorer = scorer or cfg.scorer
    command = cfg.scorer_command if command is None else command
    if not docs:
        raise UsageError("select needs at least one candidate")
    with ThreadPoolExecutor(max_workers=workers or min(4, len(docs))) as pool:
        rows = list(pool.map(lambda d: _evaluate(d, source, cfg, scorer, command), docs))
    best = None
    for k, (s, scene, _) in enumerate(rows):
        if scene is not None and (best is None or s > rows[best][0]):
            best = k
    return best, rows


def cmd_select(args, cfg: RunConfig) -> int:
    source = read_image(args.source)
    scorer = args.scorer or cfg.scorer
    command = args.scorer_command if args.scorer_command is not None else cfg.scorer_command
    if scorer == "external" and not command:
        raise UsageError("external scorer needs --scorer-command")
    docs = [_read_text(p) for p in args.candidates]
    best, rows = select_best(docs, source, cfg, scorer, command)
    print(f"{'index':>5}  {'score':>14}  candidate")
    for k, (s, _, msg) in enumerate(rows):
        mark = "*" if k == best else " "
        note = f"  ({msg})" if msg else ""
        print(f"{k:>5}{mark} {s + 0.0:>14.8g}  {args.candidates[k]}{note}")
    if best is None:
        _info("no candidate could be decoded")
        return EXIT_INPUT
    svg = rows[best][1].to_svg()
    if args.output:
        Path(args.output).write_text(svg, encoding="utf-8")
    return EXIT_OK


def load_points(path) -> np.ndarray:
    """Control points, one ``x y`` (or ``x,y``) pair per line."""
    text = _read_text(path).replace(",", " ")
    pts = np.array([float(t) for t in text.split()], float)
    if len(pts) == 0 or len(pts) % 2:
        raise ValueError(f"{path}: expected x y pairs")
    return pts.reshape(-1, 2)


def cmd_metrics(args, cfg: RunConfig) -> int:
    a, b = read_image(args.a), read_image(args.b)
    if a.channels != b.channels:
        a, b = a.rgb(), b.rgb()
    report = {"mse": mse(a, b), "ssim": ssim(a, b)}
    if args.points_a or args.points_b:
        if not (args.points_a and args.points_b):
            raise UsageError("chamfer needs both --points-a and --points-b")
        report["chamfer"] = chamfer(load_points(args.points_a), load_points(args.points_b))
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_roundtrip(args, cfg: RunConfig) -> int:
    report = roundtrip(_read_text(args.input), cfg)
    _write_text(args.output, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value run configuration")
    common.add_argument("--seed", type=int, help="override rng_seed")

    parser = _Parser(prog="roundpoly", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--dump-config", action="store_true",
                        help="print the effective configuration and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("encode", parents=[common], help="SVG to token text")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", parents=[common], help="token text to SVG")
    p.add_argument("input")
    p.add_argument("--source", help="image to recover colors, order and strokes from")
    p.add_argument("--strict", action="store_true", help="fail on the first malformed token")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("degrade", parents=[common], help="SVG to degraded outline PNG")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--bypass", action="store_true", help="clean outline render, no degradation")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("select", parents=[common], help="best-of-N candidate selection")
    p.add_argument("candidates", nargs="+")
    p.add_argument("--source", required=True)
    p.add_argument("--scorer", choices=SCORERS)
    p.add_argument("--scorer-command")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("metrics", parents=[common], help="MSE / SSIM / chamfer report")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--points-a")
    p.add_argument("--points-b")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("roundtrip", parents=[common], help="encode, decode and compare")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_roundtrip)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        if args.dump_config:
            sys.stdout.write(cfg.dumps())
            return EXIT_OK
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_INPUT
        return args.func(args, cfg)
    except (UsageError, SvgParseError, TokenError, ValueError, OSError) as exc:
        _info(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
