"""Image files: grayscale PNG, binary PGM (P5) and raw float32.

The raw format is a one-line ASCII header ``M <side>\\n`` followed by
``side * side`` little-endian float32 values in row-major order. It is the
only lossless way to move simulated scenes through the command line.
"""

import math
import os

import numpy as np
from PIL import Image, ImageDraw

from .errors import ImageIOError

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
OVERLAY_COLORS = {
    "turbulent": (255, 255, 0),
    "narrow_v": (0, 255, 0),
    "kelvin": (255, 0, 0),
}


def sniff_format(head: bytes):
    if head.startswith(PNG_MAGIC):
        return "png"
    if head.startswith(b"P5"):
        return "pgm"
    if head.startswith(b"M "):
        return "raw"
    return None


def read_image(path):
    """Load a grayscale image as float64, whatever the supported format."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ImageIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    fmt = sniff_format(data[:16])
    if fmt == "png":
        return _read_png(path)
    if fmt == "pgm":
        return _parse_pgm(data, path)
    if fmt == "raw":
        return _parse_raw(data, path)
    raise ImageIOError(
        f"{path}: unrecognised format (leading bytes {data[:8]!r}); "
        "expected PNG, binary PGM (P5) or raw float32 with an 'M <side>' header"
    )


def _read_png(path):
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode not in ("L", "I;16", "I;16B", "I", "I;16L"):
                raise ImageIOError(f"{path}: PNG mode {mode!r} is not 8/16-bit grayscale")
            arr = np.array(im)
    except ImageIOError:
        raise
    except (OSError, ValueError, SyntaxError) as exc:
        raise ImageIOError(f"{path}: damaged or truncated PNG ({exc})") from exc
    return arr.astype(np.float64)


def _pgm_tokens(data, count):
    """First ``count`` header tokens of a PGM plus the offset of the pixel data."""
    tokens, pos, n = [], 0, len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageIOError("truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the pixels
    return tokens, pos + 1


def _parse_pgm(data, path="<bytes>"):
    try:
        tokens, offset = _pgm_tokens(data, 4)
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ImageIOError(f"{path}: malformed PGM header") from exc
    except ImageIOError as exc:
        raise ImageIOError(f"{path}: {exc}") from exc
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise ImageIOError(f"{path}: invalid PGM header {width}x{height} maxval {maxval}")
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    need = width * height * dtype.itemsize
    pixels = data[offset:offset + need]
    if len(pixels) < need:
        raise ImageIOError(f"{path}: truncated PGM, {len(pixels)} of {need} pixel bytes")
    return np.frombuffer(pixels, dtype=dtype).reshape(height, width).astype(np.float64)


def _parse_raw(data, path="<bytes>"):
    nl = data.find(b"\n")
    if nl < 0:
        raise ImageIOError(f"{path}: raw header line is missing")
    try:
        tag, side = data[:nl].decode("ascii").split()
        side = int(side)
    except (UnicodeDecodeError, ValueError) as exc:
        raise ImageIOError(f"{path}: raw header must read 'M <side>'") from exc
    if tag != "M" or side <= 0:
        raise ImageIOError(f"{path}: raw header must read 'M <side>'")
    need = side * side * 4
    body = data[nl + 1:]
    if len(body) < need:
        raise ImageIOError(f"{path}: truncated raw image, {len(body)} of {need} bytes")
    return np.frombuffer(body[:need], dtype="<f4").reshape(side, side).astype(np.float64)


def format_for(path, fmt=None):
    if fmt:
        return fmt
    ext = os.path.splitext(str(path))[1].lower()
    return {".png": "png", ".pgm": "pgm", ".raw": "raw", ".f32": "raw"}.get(ext, "raw")


def _to_uint(img, bits):
    """Scale to the full integer range; returns the array and (lo, hi)."""
    lo, hi = float(np.min(img)), float(np.max(img))
    top = (1 << bits) - 1
    if hi > lo:
        scaled = np.rint((img - lo) / (hi - lo) * top)
    else:
        scaled = np.zeros_like(img)
    return scaled.astype(np.uint16 if bits > 8 else np.uint8), (lo, hi)


def write_image(path, img, fmt=None, bits=16):
    """Write ``img``. PNG and PGM are min/max scaled; raw keeps float32 values."""
    img = np.asarray(img, dtype=np.float64)
    fmt = format_for(path, fmt)
    try:
        if fmt == "raw":
            if img.ndim != 2 or img.shape[0] != img.shape[1]:
                raise ImageIOError("raw format stores square images only")
            with open(path, "wb") as fh:
                fh.write(f"M {img.shape[0]}\n".encode("ascii"))
                fh.write(img.astype("<f4").tobytes())
        elif fmt == "pgm":
            arr, _ = _to_uint(img, bits)
            maxval = (1 << bits) - 1
            with open(path, "wb") as fh:
                fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode("ascii"))
                fh.write(arr.astype(">u2" if bits > 8 else np.uint8).tobytes())
        elif fmt == "png":
            arr, _ = _to_uint(img, bits)
            Image.fromarray(arr).save(path, format="PNG")
        else:
            raise ImageIOError(f"unknown output format {fmt!r}")
    except ImageIOError:
        raise
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _segment(size, cand):
    """End points (col, row) of the candidate half-line inside the image."""
    from .detection import half_line_pixels

    rows, cols = half_line_pixels(size, cand.r, cand.theta, cand.half_sign)
    if rows.size == 0:
        return None
    return (int(cols[0]), int(rows[0])), (int(cols[-1]), int(rows[-1]))


def write_overlay(path, img, report, width=1):
    """Save ``img`` as RGB with the confirmed wakes drawn on top.

    Yellow marks the turbulent wake, green the narrow-V arms, red the
    Kelvin arms. Unconfirmed candidates are not drawn.
    """
    img = np.asarray(img, dtype=np.float64)
    gray, _ = _to_uint(img, 8)
    canvas = Image.fromarray(gray).convert("RGB")
    draw = ImageDraw.Draw(canvas)
    for cand in report.slots.values():
        if cand is None or not cand.confirmed or not math.isfinite(cand.F_I):
            continue
        seg = _segment(img.shape[0], cand)
        if seg is not None:
            draw.line(seg, fill=OVERLAY_COLORS[cand.kind], width=width)
    try:
        canvas.save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return canvas
