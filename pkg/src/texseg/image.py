"""Grey-level rasters, quantization, PGM/PNG I/O and sliding windows.

Two views of every image are carried around.  ``GrayImage.pixels`` holds the
quantized grey levels in ``[0, levels - 1]`` used by the co-occurrence and
run-length extractors; ``GrayImage.intensity`` keeps the full-range values
normalized to ``[0, 1]`` for the GMRF and Gabor extractors.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DataError

PADDING_MODES = ("mirror", "clamp", None)
_NP_PAD_MODE = {"mirror": "reflect", "clamp": "edge"}


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GrayImage:
    pixels: np.ndarray
    levels: int
    intensity: np.ndarray | None = None
    source_maxval: int | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise DataError(f"expected a non-empty 2-D raster, got shape {px.shape}")
        if self.levels < 2:
            raise DataError(f"levels must be >= 2, got {self.levels}")
        if not np.issubdtype(px.dtype, np.integer):
            raise DataError("pixels must be integers")
        if px.min() < 0 or px.max() >= self.levels:
            raise DataError(f"pixel values must lie in [0, {self.levels - 1}]")
        object.__setattr__(self, "pixels", _readonly(px.astype(np.int64)))
        if self.intensity is None:
            inten = px / float(self.levels - 1)
        else:
            inten = np.asarray(self.intensity, dtype=np.float64)
            if inten.shape != px.shape:
                raise DataError("intensity and pixels must have the same shape")
        object.__setattr__(self, "intensity", _readonly(inten))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @classmethod
    def from_intensity(cls, intensity, levels: int = 32) -> "GrayImage":
        """Build an image from real intensities in [0, 1] (values are clipped)."""
        inten = np.clip(np.asarray(intensity, dtype=np.float64), 0.0, 1.0)
        return cls(quantize(inten, levels), levels, intensity=inten)


@dataclass(frozen=True, eq=False)
class LabelMap:
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise DataError("label map must be 2-D")
        if self.num_classes < 1:
            raise DataError("num_classes must be >= 1")
        if lab.size and (lab.min() < 0 or lab.max() >= self.num_classes):
            raise DataError(f"labels must lie in [0, {self.num_classes - 1}]")
        object.__setattr__(self, "labels", _readonly(lab.astype(np.int64)))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape


@dataclass(frozen=True)
class WindowSpec:
    """Square sliding window.  ``padding`` is ``"mirror"``, ``"clamp"`` or None."""

    size: int = 32
    step: int = 1
    padding: str | None = "mirror"

    def __post_init__(self):
        if self.size < 3:
            raise DataError(f"window size must be >= 3, got {self.size}")
        if self.step < 1:
            raise DataError(f"window step must be >= 1, got {self.step}")
        if self.padding not in PADDING_MODES:
            raise DataError(f"unknown padding {self.padding!r}")

    @property
    def pad_before(self) -> int:
        return self.size // 2 if self.padding else 0

    @property
    def pad_after(self) -> int:
        return self.size - 1 - self.size // 2 if self.padding else 0

    @property
    def is_even(self) -> bool:
        return self.size % 2 == 0


# -- quantization -----------------------------------------------------------

def quantize(intensity, levels: int) -> np.ndarray:
    """Map real intensities in [0, 1] to grey levels ``floor(x * levels)``."""
    if levels < 2:
        raise DataError(f"levels must be >= 2, got {levels}")
    q = np.floor(np.asarray(intensity, dtype=np.float64) * levels)
    return np.clip(q, 0, levels - 1).astype(np.int64)


def requantize(values, maxval: int, levels: int) -> np.ndarray:
    """Integer requantization ``floor(v * levels / (maxval + 1))``, clamped.

    For 8-bit data this is ``floor(v * G / 256)``.
    """
    if levels < 2:
        raise DataError(f"levels must be >= 2, got {levels}")
    v = np.asarray(values, dtype=np.int64)
    return np.minimum(v * levels // (maxval + 1), levels - 1)


# -- file I/O ---------------------------------------------------------------

def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace separated header tokens, skipping comments."""
    tokens: list[bytes] = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise DataError("truncated PGM header")
        if data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a P2 or P5 PGM file.  Returns ``(values, maxval)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise DataError(f"{path}: not a P2/P5 PGM file")
    try:
        (w, h, maxval), pos = _pgm_tokens(data[2:], 3)
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise DataError(f"{path}: malformed PGM header") from exc
    pos += 2
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise DataError(f"{path}: invalid PGM dimensions or maxval")
    if magic == b"P5":
        # exactly one whitespace byte separates header and raster
        body = data[pos + 1:]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = width * height * dtype.itemsize
        if len(body) < need:
            raise DataError(f"{path}: truncated PGM raster")
        values = np.frombuffer(body[:need], dtype=dtype).astype(np.int64)
    else:
        try:
            values = np.array(data[pos:].split(), dtype=np.int64)
        except ValueError as exc:
            raise DataError(f"{path}: malformed P2 raster") from exc
        if values.size < width * height:
            raise DataError(f"{path}: truncated PGM raster")
        values = values[: width * height]
    values = values.reshape(height, width)
    if values.max() > maxval:
        raise DataError(f"{path}: pixel exceeds maxval {maxval}")
    return values, maxval


def write_pgm(path, values, maxval: int | None = None, plain: bool = False) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise DataError("PGM rasters must be 2-D")
    if maxval is None:
        maxval = max(int(values.max()), 1)
    if values.min() < 0 or values.max() > maxval or maxval > 65535:
        raise DataError("pixel values out of range for PGM")
    h, w = values.shape
    with open(path, "wb") as fh:
        if plain:
            fh.write(f"P2\n{w} {h}\n{maxval}\n".encode())
            for row in values:
                fh.write((" ".join(str(int(v)) for v in row) + "\n").encode())
        else:
            fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
            dtype = ">u2" if maxval > 255 else "u1"
            fh.write(values.astype(dtype).tobytes())


def read_raster(path) -> tuple[np.ndarray, int]:
    """Read a PGM or 8-bit grayscale PNG as ``(integer values, maxval)``."""
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise DataError(f"{path}: no such file")
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head[:2] in (b"P2", b"P5"):
        return read_pgm(path)
    if head == b"\x89PNG\r\n\x1a\n":
        from PIL import Image

        with Image.open(path) as im:
            if im.mode != "L":
                raise DataError(f"{path}: only 8-bit grayscale PNG is supported (mode {im.mode})")
            return np.asarray(im, dtype=np.int64), 255
    raise DataError(f"{path}: unsupported image format")


def load_image(path, levels: int = 32) -> GrayImage:
    if levels < 2:
        raise DataError(f"levels must be >= 2, got {levels}")
    values, maxval = read_raster(path)
    return GrayImage(
        requantize(values, maxval, levels),
        levels,
        intensity=values / float(maxval),
        source_maxval=maxval,
    )


def save_image(path, img: GrayImage) -> None:
    """Write the intensity channel as an 8-bit PGM."""
    write_pgm(path, np.rint(img.intensity * 255).astype(np.int64), maxval=255)


def save_label_map(path, labels: LabelMap) -> None:
    """Write a label map as PGM with pixel value == class index."""
    write_pgm(path, labels.labels, maxval=max(labels.num_classes - 1, 1))


def load_label_map(path, num_classes: int | None = None) -> LabelMap:
    values, maxval = read_pgm(path)
    return LabelMap(values, num_classes if num_classes is not None else int(values.max()) + 1)


def save_label_png(path, labels: LabelMap) -> None:
    """Colour-mapped PNG of a label map, for viewing only."""
    from PIL import Image

    golden = 0.6180339887498949
    palette = []
    for k in range(256):
        hue = (k * golden) % 1.0
        r, g, b = _hsv_to_rgb(hue, 0.65, 0.95)
        palette += [r, g, b]
    im = Image.fromarray(labels.labels.astype(np.uint8), mode="P")
    im.putpalette(palette)
    im.save(path)


def _hsv_to_rgb(h, s, v):
    import colorsys

    return tuple(int(round(255 * c)) for c in colorsys.hsv_to_rgb(h, s, v))


# -- windows ----------------------------------------------------------------

def pad_array(a: np.ndarray, spec: WindowSpec) -> np.ndarray:
    if not spec.padding:
        return np.asarray(a)
    return np.pad(a, ((spec.pad_before, spec.pad_after),) * 2, mode=_NP_PAD_MODE[spec.padding])


def window_origins(shape: tuple[int, int], spec: WindowSpec) -> tuple[np.ndarray, np.ndarray]:
    """Top-left corners (in padded coordinates) of every window position."""
    hp = shape[0] + spec.pad_before + spec.pad_after
    wp = shape[1] + spec.pad_before + spec.pad_after
    if spec.size > min(hp, wp):
        raise DataError(f"window of size {spec.size} does not fit a {hp}x{wp} padded image")
    return np.arange(0, hp - spec.size + 1, spec.step), np.arange(0, wp - spec.size + 1, spec.step)


def window_centers(shape: tuple[int, int], spec: WindowSpec) -> tuple[np.ndarray, np.ndarray]:
    """Centre pixel (unpadded coordinates) of every window position.

    For even sizes the centre is the pixel just below/right of the middle.
    """
    rows, cols = window_origins(shape, spec)
    off = spec.size // 2 - spec.pad_before
    return rows + off, cols + off


def window_count(shape: tuple[int, int], spec: WindowSpec) -> int:
    rows, cols = window_origins(shape, spec)
    return len(rows) * len(cols)


def windows(img, spec: WindowSpec) -> Iterator[tuple[tuple[int, int], np.ndarray]]:
    """Yield ``((row, col), view)`` for every window, centre in image coordinates.

    ``img`` may be a GrayImage (its quantized pixels are windowed) or any 2-D
    array.  Views are read-only.
    """
    a = img.pixels if isinstance(img, GrayImage) else np.asarray(img)
    padded = pad_array(a, spec)
    rows, cols = window_origins(a.shape, spec)
    view = np.lib.stride_tricks.sliding_window_view(padded, (spec.size, spec.size))
    view.setflags(write=False)
    off = spec.size // 2 - spec.pad_before
    for r in rows:
        for c in cols:
            yield (int(r + off), int(c + off)), view[r, c]


def integral_image(a: np.ndarray) -> np.ndarray:
    """Summed-area table with a leading row and column of zeros."""
    a = np.asarray(a)
    dtype = np.int64 if np.issubdtype(a.dtype, np.integer) or a.dtype == bool else np.float64
    out = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=dtype)
    np.cumsum(a, axis=0, dtype=dtype, out=out[1:, 1:])
    np.cumsum(out[1:, 1:], axis=1, out=out[1:, 1:])
    return out


def rect_sums(table: np.ndarray, rows: np.ndarray, cols: np.ndarray, height: int, width: int) -> np.ndarray:
    """Sums of ``height x width`` rectangles with top-left corners on a grid."""
    r0 = rows[:, None]
    c0 = cols[None, :]
    return (table[r0 + height, c0 + width] - table[r0, c0 + width]
            - table[r0 + height, c0] + table[r0, c0])


def window_means(a: np.ndarray, spec: WindowSpec) -> np.ndarray:
    """Mean of ``a`` over every window footprint (dense, integral-image based)."""
    padded = pad_array(np.asarray(a, dtype=np.float64), spec)
    rows, cols = window_origins(a.shape, spec)
    return rect_sums(integral_image(padded), rows, cols, spec.size, spec.size) / spec.size ** 2


def boundary_mask(labels, width: int) -> np.ndarray:
    """True for pixels within ``width`` (Chebyshev) of a differently labelled pixel."""
    from scipy import ndimage

    lab = np.asarray(labels.labels if isinstance(labels, LabelMap) else labels)
    footprint = np.ones((2 * width + 1, 2 * width + 1), dtype=bool)
    hi = ndimage.maximum_filter(lab, footprint=footprint, mode="nearest")
    lo = ndimage.minimum_filter(lab, footprint=footprint, mode="nearest")
    return hi != lo


__all__ = [
    "GrayImage", "LabelMap", "WindowSpec", "quantize", "requantize", "read_pgm", "write_pgm",
    "read_raster", "load_image", "save_image", "save_label_map", "load_label_map",
    "save_label_png", "pad_array", "window_origins", "window_centers", "window_count",
    "windows", "integral_image", "rect_sums", "window_means", "boundary_mask",
]
