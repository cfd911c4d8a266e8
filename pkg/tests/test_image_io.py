import numpy as np
import pytest
from PIL import Image

from wake_radon.errors import ImageIOError
from wake_radon.image_io import OVERLAY_COLORS, read_image, write_image, write_overlay
from wake_radon.detection import WakeCandidate, WakeReport


def test_raw_roundtrip_is_lossless(tmp_path, rng):
    img = rng.standard_normal((16, 16)).astype(np.float32).astype(np.float64)
    p = tmp_path / "a.raw"
    write_image(p, img)
    assert p.read_bytes().startswith(b"M 16\n")
    np.testing.assert_array_equal(read_image(p), img)


@pytest.mark.parametrize("bits", [8, 16])
def test_pgm_roundtrip(tmp_path, bits):
    img = np.arange(64.0).reshape(8, 8)
    p = tmp_path / "a.pgm"
    write_image(p, img, bits=bits)
    back = read_image(p)
    top = (1 << bits) - 1
    np.testing.assert_allclose(back, np.rint(img / 63 * top))


def test_pgm_with_comment(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n2 2\n255\n" + bytes([0, 10, 20, 255]))
    np.testing.assert_array_equal(read_image(p), [[0, 10], [20, 255]])


@pytest.mark.parametrize("bits", [8, 16])
def test_png_roundtrip(tmp_path, bits):
    img = np.arange(64.0).reshape(8, 8)
    p = tmp_path / "a.png"
    write_image(p, img, bits=bits)
    back = read_image(p)
    top = (1 << bits) - 1
    np.testing.assert_allclose(back, np.rint(img / 63 * top))


def test_color_png_rejected(tmp_path):
    p = tmp_path / "rgb.png"
    Image.new("RGB", (4, 4)).save(p)
    with pytest.raises(ImageIOError, match="grayscale"):
        read_image(p)


@pytest.mark.parametrize("name,payload", [
    ("t.raw", b"M 8\n" + b"\x00" * 10),
    ("t.pgm", b"P5\n8 8\n255\n" + b"\x00" * 10),
    ("t.pgm", b"P5\n8"),
    ("t.raw", b"M eight\n"),
])
def test_truncated_or_malformed(tmp_path, name, payload):
    p = tmp_path / name
    p.write_bytes(payload)
    with pytest.raises(ImageIOError):
        read_image(p)


def test_truncated_png(tmp_path):
    p = tmp_path / "a.png"
    write_image(p, np.random.default_rng(0).standard_normal((64, 64)))
    data = p.read_bytes()
    p.write_bytes(data[: len(data) // 2])
    with pytest.raises(ImageIOError):
        read_image(p)


def test_unknown_format(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"GIF89a....")
    with pytest.raises(ImageIOError, match="unrecognised"):
        read_image(p)


def test_missing_file(tmp_path):
    with pytest.raises(ImageIOError):
        read_image(tmp_path / "nope.png")


def test_unwritable(tmp_path):
    with pytest.raises(ImageIOError):
        write_image(tmp_path / "no" / "dir" / "a.raw", np.ones((4, 4)))


def test_overlay_colors(tmp_path):
    rep = WakeReport()
    rep.slots["turbulent"] = WakeCandidate("turbulent", 0, 0, 0.5, 0.0, -1.0, 1, -0.3, True)
    rep.slots["narrow_v_1"] = WakeCandidate("narrow_v", 0, 0, 10.5, 0.0, 1.0, 1, 0.3, True)
    rep.slots["kelvin_1"] = WakeCandidate("kelvin", 0, 90, 20.0, 90.0, 1.0, 1, 0.3, True)
    rep.slots["narrow_v_2"] = WakeCandidate("narrow_v", 0, 0, -20.5, 0.0, 1.0, 1, 0.01, False)
    p = tmp_path / "ov.png"
    write_overlay(p, np.ones((64, 64)), rep)
    arr = np.array(Image.open(p))
    for kind, color in OVERLAY_COLORS.items():
        assert (arr == color).all(-1).sum() > 10, kind
    # the unconfirmed candidate is not drawn
    assert not (arr[:, 11] == OVERLAY_COLORS["narrow_v"]).all(-1).any()
