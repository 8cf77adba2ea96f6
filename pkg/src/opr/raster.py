"""Binary PPM (P6) decoding and the crop/resize primitives.

Images are immutable uint8 RGB grids. The only mandatory on-disk format
is P6 with maxval 255, parsed bit-exactly so fixtures round-trip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, DecodeError

_WHITESPACE = b" \t\n\r\x0b\x0c"


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel box: top-left corner (x, y), extent (w, h)."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box corner must be non-negative, got ({self.x}, {self.y})")
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box extent must be at least 1x1, got {self.w}x{self.h}")

    @property
    def area(self) -> int:
        return self.w * self.h

    def union(self, other: "BoundingBox") -> "BoundingBox":
        x0 = min(self.x, other.x)
        y0 = min(self.y, other.y)
        x1 = max(self.x + self.w, other.x + other.w)
        y1 = max(self.y + self.h, other.y + other.h)
        return BoundingBox(x0, y0, x1 - x0, y1 - y0)


@dataclass(frozen=True)
class RasterImage:
    """Decoded RGB image; `pixels` is (height, width, 3) uint8, row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ValueError(f"pixels must be (h, w, 3) uint8, got {p.shape} {p.dtype}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        p.flags.writeable = False

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def area(self) -> int:
        return self.width * self.height

    def full_box(self) -> BoundingBox:
        return BoundingBox(0, 0, self.width, self.height)


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # Skips whitespace and '#' comments, then reads one non-whitespace token.
    n = len(data)
    while pos < n:
        if data[pos : pos + 1] in _WHITESPACE:
            pos += 1
        elif data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise DecodeError("unexpected end of header", pos)
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE:
        pos += 1
    return data[start:pos], pos


def _read_header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    token, end = _read_token(data, pos)
    if not token.isdigit():
        raise DecodeError(f"expected {what}, got {token!r}", end - len(token))
    return int(token), end


def decode_ppm(data: bytes) -> RasterImage:
    """Decode binary PPM (P6, maxval 255) bytes into a RasterImage.

    Raises DecodeError naming the byte offset on any malformation:
    wrong magic, non-numeric header fields, maxval other than 255,
    truncated or oversized pixel payload.
    """
    if data[:2] != b"P6":
        raise DecodeError(f"not a P6 PPM (magic {data[:2]!r})", 0)
    width, pos = _read_header_int(data, 2, "width")
    height, pos = _read_header_int(data, pos, "height")
    maxval, pos = _read_header_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise DecodeError(f"invalid dimensions {width}x{height}", 2)
    if maxval != 255:
        raise DecodeError(f"unsupported maxval {maxval}, only 255", pos - len(str(maxval)))
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise DecodeError("expected single whitespace before pixel payload", pos)
    pos += 1
    expected = width * height * 3
    payload = data[pos:]
    if len(payload) < expected:
        raise DecodeError(
            f"truncated pixel payload: expected {expected} bytes, got {len(payload)}",
            pos + len(payload),
        )
    if len(payload) > expected:
        raise DecodeError(
            f"{len(payload) - expected} trailing bytes after pixel payload",
            pos + expected,
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()
    return RasterImage(pixels)


def encode_ppm(img: RasterImage) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def crop(img: RasterImage, box: BoundingBox) -> RasterImage:
    """Extract the sub-image under `box`; the box must lie inside the image."""
    if box.x + box.w > img.width or box.y + box.h > img.height:
        raise BoundsError(
            f"box ({box.x},{box.y},{box.w},{box.h}) exceeds image {img.width}x{img.height}"
        )
    return RasterImage(img.pixels[box.y : box.y + box.h, box.x : box.x + box.w].copy())


def resize_bilinear(img: RasterImage, out_w: int, out_h: int) -> RasterImage:
    """Resample to out_w x out_h with bilinear interpolation.

    Source coordinate for destination index i is (i + 0.5) * scale - 0.5,
    clamped to the source range; interpolated values round half up.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target dimensions must be positive, got {out_w}x{out_h}")
    h, w = img.height, img.width
    sx = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    sy = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    np.clip(sx, 0.0, w - 1.0, out=sx)
    np.clip(sy, 0.0, h - 1.0, out=sy)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[np.newaxis, :, np.newaxis]
    fy = (sy - y0)[:, np.newaxis, np.newaxis]
    src = img.pixels.astype(np.float64)
    top = src[np.ix_(y0, x0)] * (1.0 - fx) + src[np.ix_(y0, x1)] * fx
    bottom = src[np.ix_(y1, x0)] * (1.0 - fx) + src[np.ix_(y1, x1)] * fx
    blended = top * (1.0 - fy) + bottom * fy
    out = np.floor(blended + 0.5)
    np.clip(out, 0.0, 255.0, out=out)
    return RasterImage(out.astype(np.uint8))
