"""Grayscale raster IO (binary PGM, optional PNG) and bilinear resampling."""

import numpy as np

__all__ = ["as_gray_image", "read_pgm", "write_pgm", "load_image", "resize_bilinear"]


def as_gray_image(arr) -> np.ndarray:
    """Validate *arr* as a non-empty 2-D uint8 intensity grid and return it."""
    a = np.asarray(arr)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("expected a non-empty 2-D intensity grid")
    if a.dtype != np.uint8:
        if not np.issubdtype(a.dtype, np.integer):
            raise ValueError("intensities must be integers in [0, 255]")
        if a.min() < 0 or a.max() > 255:
            raise ValueError("intensities must be integers in [0, 255]")
        a = a.astype(np.uint8)
    return a


def _parse_pgm_header(data: bytes):
    # Returns (width, height, maxval, raster_offset). Tokens may be separated
    # by any whitespace; '#' starts a comment running to end of line.
    if len(data) < 2 or data[:1] != b"P":
        raise ValueError("unsupported format: not a PGM file")
    if data[:2] != b"P5":
        raise ValueError(
            "unsupported format: expected binary PGM (P5), got %r" % data[:2].decode("ascii", "replace")
        )
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if pos == start:
            raise ValueError("corrupt PGM header")
        try:
            fields.append(int(data[start:pos]))
        except ValueError:
            raise ValueError("corrupt PGM header: non-numeric field %r" % data[start:pos]) from None
    if pos >= len(data):
        raise ValueError("corrupt PGM header: missing raster")
    pos += 1  # single whitespace byte separates maxval from the raster
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ValueError("corrupt PGM header: bad dimensions %dx%d" % (width, height))
    if maxval > 255:
        raise ValueError("unsupported PGM bit depth: maxval %d needs 2 bytes per sample" % maxval)
    if maxval < 1:
        raise ValueError("corrupt PGM header: maxval %d" % maxval)
    return width, height, maxval, pos


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM file into a 2-D uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    width, height, _maxval, offset = _parse_pgm_header(data)
    raster = data[offset : offset + width * height]
    if len(raster) != width * height:
        raise ValueError(
            "corrupt PGM raster: expected %d bytes, found %d" % (width * height, len(raster))
        )
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(path, img) -> None:
    """Write a 2-D uint8 array as a binary (P5) PGM file with maxval 255."""
    a = as_gray_image(img)
    header = b"P5\n%d %d\n255\n" % (a.shape[1], a.shape[0])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(a.tobytes())


def _load_png(path) -> np.ndarray:
    try:
        from PIL import Image
    except ImportError:
        raise ValueError("PNG support requires the optional Pillow dependency") from None
    with Image.open(path) as im:
        if im.mode != "L":
            raise ValueError(
                "unsupported PNG bit depth or mode %r: expected 8-bit grayscale (mode L)" % im.mode
            )
        return np.asarray(im, dtype=np.uint8).copy()


def load_image(path) -> np.ndarray:
    """Load a grayscale image. Binary PGM is always supported; 8-bit grayscale
    PNG works when Pillow is installed."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
    if magic[:2] == b"P5":
        return read_pgm(path)
    if magic == b"\x89PNG\r\n\x1a\n":
        return _load_png(path)
    raise ValueError("unsupported format for %s: expected binary PGM (P5) or 8-bit PNG" % path)


def resize_bilinear(img, out_w: int, out_h: int) -> np.ndarray:
    """Resize with bilinear sampling on the half-pixel-centre grid.

    Source coordinates follow src = (dst + 0.5) * (src_size / dst_size) - 0.5,
    clamped to the source extent; blended values are rounded half-up back to
    [0, 255]. Identity sizes return a bit-identical copy.
    """
    a = as_gray_image(img)
    if out_w < 1 or out_h < 1:
        raise ValueError("target size must be at least 1x1")
    src_h, src_w = a.shape
    if (out_w, out_h) == (src_w, src_h):
        return a.copy()
    xs = np.clip((np.arange(out_w) + 0.5) * (src_w / out_w) - 0.5, 0.0, src_w - 1.0)
    ys = np.clip((np.arange(out_h) + 0.5) * (src_h / out_h) - 0.5, 0.0, src_h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, src_w - 1)
    y1 = np.minimum(y0 + 1, src_h - 1)
    fx = xs - x0
    fy = ys - y0
    f = a.astype(np.float64)
    top = f[np.ix_(y0, x0)] * (1.0 - fx) + f[np.ix_(y0, x1)] * fx
    bot = f[np.ix_(y1, x0)] * (1.0 - fx) + f[np.ix_(y1, x1)] * fx
    blended = top * (1.0 - fy)[:, None] + bot * fy[:, None]
    return np.clip(np.floor(blended + 0.5), 0, 255).astype(np.uint8)
