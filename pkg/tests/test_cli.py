import json
import re
import sys

import numpy as np
import pytest

from roundpoly.cli import main, select_best
from roundpoly.config import RunConfig
from roundpoly.pipeline import decode_doc, encode_svg
from roundpoly.raster import read_image, render_fill, render_outline, write_image
from roundpoly.rounded_poly import RoundedPolygon, serialize
from roundpoly.synth import rounded_rect_svg

TWO_RECTS = ('<svg viewBox="0 0 128 128"><rect x="10" y="10" width="60" height="50" rx="6" fill="#ff0000"/>'
             '<rect x="40" y="40" width="70" height="70" fill="#0000ff"/></svg>')
SQUARE = '<svg viewBox="0 0 10 10"><rect x="1" y="1" width="8" height="8"/></svg>'


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def _ground_truth(tmp_path, svg=TWO_RECTS, size=256):
    enc = encode_svg(svg)
    dec = decode_doc(enc.doc)
    src = render_fill([(c, p.fill) for c, p in zip(dec.chains, enc.paths)], size=size)
    path = tmp_path / "src.png"
    write_image(src, path)
    return enc, str(path)


def test_encode_rounded_rect(files, capsys):
    out = files("rr.tok", "")
    assert main(["encode", files("rr.svg", rounded_rect_svg(10, 10, 80, 60, 10)), "-o", out]) == 0
    triples = [t.split(",") for t in open(out).read().split()]
    assert len(triples) == 4 and all(float(t[2]) > 0 for t in triples)
    err = capsys.readouterr().err
    assert "4 arcs" in err and "savings" in err


def test_encode_square(files, capsys):
    assert main(["encode", files("sq.svg", SQUARE)]) == 0
    assert capsys.readouterr().out.strip() == "16,16,-1 112,16,-1 112,112,-1 16,112,-1"


def test_encode_invalid_xml(files, capsys):
    assert main(["encode", files("bad.svg", "<svg><path d=")]) == 1
    assert "error" in capsys.readouterr().err


def test_decode_without_source(files, capsys):
    assert main(["decode", files("a.tok", "16,16,-1 112,16,-1 112,112,8 16,112,-1")]) == 0
    out = capsys.readouterr().out
    assert out.count("<path") == 1 and 'fill="#808080"' in out and " A " in out


def test_decode_with_source_recovers_colors(tmp_path, files, capsys):
    enc, src = _ground_truth(tmp_path)
    out = str(tmp_path / "o.svg")
    assert main(["decode", files("gt.tok", enc.doc), "--source", src, "-o", out]) == 0
    fills = re.findall(r'fill="(#[0-9a-f]{6})"', open(out).read())
    assert fills == ["#ff0000", "#0000ff"]


def test_decode_strict(files, capsys):
    doc = files("t.tok", "4,4,-1 124,4,-1 64,108,-1\n4,4,-1 124,4")
    assert main(["decode", doc, "--strict"]) == 1
    assert "line 2" in capsys.readouterr().err
    assert main(["decode", doc]) == 0


def test_degrade_deterministic(tmp_path, files):
    svg = files("in.svg", TWO_RECTS)
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    assert main(["degrade", svg, "-o", str(a), "--seed", "5"]) == 0
    assert main(["degrade", svg, "-o", str(b), "--seed", "5"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_degrade_bypass(tmp_path, files):
    svg = files("in.svg", TWO_RECTS)
    out = tmp_path / "o.png"
    assert main(["degrade", svg, "-o", str(out), "--bypass"]) == 0
    clean = render_outline([p.chain for p in encode_svg(TWO_RECTS).paths])
    assert np.array_equal(read_image(out).data, clean.data)


def test_degrade_blank_exit(tmp_path, files, capsys):
    svg = files("sliver.svg", '<svg viewBox="0 0 128 128"><rect x="20" y="90" width="80" height="1"/></svg>')
    cfg = files("c.txt", "resolution_min = 224\nresolution_max = 224\nblur_min = 1.5\nblur_max = 1.5\n"
                         "bypass_probability = 0\n")
    assert main(["degrade", svg, "-o", str(tmp_path / "o.png"), "--config", cfg]) == 2
    assert "degraded to blank" in capsys.readouterr().err


def _corrupt(doc, shift=10.0):
    out = []
    for poly in decode_doc(doc).polygons:
        v = poly.vertices.copy()
        v[:, :2] = np.clip(v[:, :2] + shift, 0, 128)
        out.append(RoundedPolygon(v))
    return serialize(out)


def test_select_single_and_ground_truth(tmp_path, files, capsys):
    enc, src = _ground_truth(tmp_path)
    gt, bad = files("gt.tok", enc.doc), files("bad.tok", _corrupt(enc.doc))
    assert main(["select", gt, "--source", src]) == 0
    out = str(tmp_path / "best.svg")
    assert main(["select", bad, gt, "--source", src, "-o", out]) == 0
    table = capsys.readouterr().out.splitlines()
    assert table[-1].startswith("    1*")
    assert 'fill="#ff0000"' in open(out).read()


def test_select_tie_goes_to_earliest(tmp_path, files, capsys):
    enc, src = _ground_truth(tmp_path)
    best, rows = select_best([enc.doc, enc.doc, enc.doc], read_image(src), RunConfig())
    assert best == 0 and rows[0][0] == rows[2][0]


def test_select_external_scorer(tmp_path, files, capsys):
    enc, src = _ground_truth(tmp_path)
    gt, bad = files("gt.tok", enc.doc), files("bad.tok", _corrupt(enc.doc))
    good = files("s.py", "import sys\nprint(2.5 if 'x' else 0)\n")
    assert main(["select", gt, "--source", src, "--scorer", "external",
                 "--scorer-command", f"{sys.executable} {good}"]) == 0
    assert "2.5" in capsys.readouterr().out
    junk = files("j.py", "print('not a number')\n")
    assert main(["select", gt, bad, "--source", src, "--scorer", "external",
                 "--scorer-command", f"{sys.executable} {junk}"]) == 0
    out = capsys.readouterr().out
    assert out.count("-inf") == 2 and "scorer failed" in out


def test_select_all_fail(tmp_path, files, capsys):
    _, src = _ground_truth(tmp_path)
    assert main(["select", files("j.tok", "garbage"), "--source", src]) == 1


def test_metrics(tmp_path, files, capsys):
    img = render_fill([], size=32)
    a, b, c = tmp_path / "a.png", tmp_path / "b.png", tmp_path / "c.png"
    write_image(img, a)
    write_image(img, b)
    write_image(render_fill([], size=40), c)
    pa, pb = files("pa.txt", "0 0\n"), files("pb.txt", "12.8,0\n")
    assert main(["metrics", str(a), str(b), "--points-a", pa, "--points-b", pb]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["mse"] == 0.0 and rep["ssim"] == 1.0 and rep["chamfer"] == pytest.approx(0.1)
    assert main(["metrics", str(a), str(c)]) == 1


def test_roundtrip_json(files, capsys):
    assert main(["roundtrip", files("rr.svg", rounded_rect_svg(10, 10, 80, 60, 10))]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["iou"] >= 0.98 and rep["savings"] > 0
    assert main(["roundtrip", files("e.svg", '<svg viewBox="0 0 1 1"></svg>')]) == 1
    assert "no paths" in capsys.readouterr().err


def test_config_dump_round_trip(files, capsys):
    assert main(["--dump-config"]) == 0
    text = capsys.readouterr().out
    assert main(["--config", files("c.txt", text), "--dump-config"]) == 0
    assert capsys.readouterr().out == text


@pytest.mark.parametrize("argv", [["bogus"], ["encode"], ["select", "x.tok"]])
def test_usage_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


def test_no_command_exit_1(capsys):
    assert main([]) == 1
