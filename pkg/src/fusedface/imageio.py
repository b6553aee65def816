"""Grayscale raster type and binary PGM (P5) reading/writing."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from fusedface.errors import (
    DataError,
    MalformedHeaderError,
    TruncatedDataError,
    UnsupportedFormatError,
)

_WHITESPACE = b" \t\n\r\v\f"


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable grayscale image with intensities normalized to [0, 1].

    ``pixels`` has shape ``(height, width)``; its row-major ravel is the
    flat pixel vector used by the eigenspace code.
    """

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DataError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        px = np.array(self.pixels, dtype=np.float64).reshape(self.height, self.width)
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise DataError("pixel values must lie in [0, 1]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr) -> GrayImage:
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise DataError(f"expected a 2-D array, got shape {arr.shape}")
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)

    @property
    def size(self) -> tuple[int, int]:
        return (self.width, self.height)

    def vector(self) -> np.ndarray:
        return self.pixels.ravel()

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.size == other.size and np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


def _read_header(data: bytes):
    """Parse ``magic width height maxval`` and return them with the raster offset."""
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < 4:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise MalformedHeaderError("header ended before width, height and maxval were read")
        tokens.append(data[start:pos])
        if len(tokens) == 1 and tokens[0] != b"P5":
            raise UnsupportedFormatError(f"unsupported magic number {tokens[0]!r}; only P5 is read")
    if pos >= n or data[pos] not in _WHITESPACE:
        raise MalformedHeaderError("missing whitespace after maxval")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise MalformedHeaderError(f"non-integer header field: {exc}") from None
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"bad dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise MalformedHeaderError(f"maxval {maxval} outside 1..65535")
    return width, height, maxval, pos + 1


def load_image(path) -> GrayImage:
    """Read a binary PGM file; sample ``s`` becomes ``s / maxval``."""
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such image file: {path}")
    with open(path, "rb") as fh:
        data = fh.read()
    width, height, maxval, offset = _read_header(data)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    raw = data[offset:offset + need]
    if len(raw) < need:
        raise TruncatedDataError(f"{path}: expected {need} bytes of pixel data, found {len(raw)}")
    samples = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    if samples.max(initial=0) > maxval:
        raise MalformedHeaderError(f"{path}: sample exceeds maxval {maxval}")
    return GrayImage(width, height, (samples / maxval).reshape(height, width))


def to_bytes(img: GrayImage) -> np.ndarray:
    """8-bit samples using round-half-up."""
    return np.floor(img.pixels * 255.0 + 0.5).astype(np.uint8)


def save_image(img: GrayImage, path) -> None:
    """Write ``img`` as P5 with maxval 255."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(to_bytes(img).tobytes())


def _axis_weights(src: int, dst: int):
    # align-corners mapping; a single target sample sits at the source centre
    if dst == 1:
        coords = np.array([(src - 1) / 2.0])
    else:
        coords = np.arange(dst) * ((src - 1) / (dst - 1))
    lo = np.clip(np.floor(coords).astype(int), 0, src - 1)
    hi = np.minimum(lo + 1, src - 1)
    frac = coords - lo
    return lo, hi, frac


def resize_bilinear(img: GrayImage, new_width: int, new_height: int) -> GrayImage:
    if new_width < 1 or new_height < 1:
        raise DataError(f"cannot resize to {new_width}x{new_height}")
    if (new_width, new_height) == img.size:
        return img
    px = img.pixels
    x0, x1, fx = _axis_weights(img.width, new_width)
    y0, y1, fy = _axis_weights(img.height, new_height)
    rows = px[:, x0] * (1.0 - fx) + px[:, x1] * fx
    out = rows[y0, :] * (1.0 - fy)[:, None] + rows[y1, :] * fy[:, None]
    # convex combinations can overshoot by an ulp
    out = np.clip(out, px.min(), px.max())
    return GrayImage(new_width, new_height, out)
