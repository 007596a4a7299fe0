"""Dyadic bank of real (even-symmetric) Gabor filters and energy features.

Impulse response of one filter, with ``x`` the column and ``y`` the row offset::

    h(x, y) = exp(-(x'^2 / sx^2 + y'^2 / sy^2) / 2) * cos(2 pi f0 x')
    x' =  x cos(theta) + y sin(theta)
    y' = -x sin(theta) + y cos(theta)

Envelope widths give a one-octave radial bandwidth and a 45 degree angular
bandwidth, both measured at half peak of the frequency response::

    sx = sqrt(2 ln 2) / (2 pi f0 (2^B - 1) / (2^B + 1)),  B = 1
    sy = sqrt(2 ln 2) / (2 pi f0 tan(22.5 deg))

Kernels are truncated at radius ``ceil(3 max(sx, sy))``, made zero-mean and
scaled to unit gain at their own centre frequency and orientation, so that
energies are comparable across the bank.
The bank holds 5 radial frequencies ``sqrt(2) / 2^k`` (k = 6..2, cycles per
pixel) times 4 orientations, frequency-major.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .errors import DataError
from .image import WindowSpec, window_means

FREQUENCIES = tuple(math.sqrt(2) / 2 ** k for k in (6, 5, 4, 3, 2))
ORIENTATIONS = tuple(math.radians(d) for d in (0, 45, 90, 135))
BANDWIDTH_OCTAVES = 1.0
ANGULAR_BANDWIDTH = math.radians(45)
MIN_IMAGE_SIZE = 64
_HALF_PEAK = math.sqrt(2 * math.log(2))


def column_names() -> list[str]:
    return [f"gabor_f{f:.4f}_o{round(math.degrees(t))}" for f in FREQUENCIES for t in ORIENTATIONS]


def envelope_sigmas(f0: float) -> tuple[float, float]:
    ratio = (2 ** BANDWIDTH_OCTAVES - 1) / (2 ** BANDWIDTH_OCTAVES + 1)
    sx = _HALF_PEAK / (2 * math.pi * f0 * ratio)
    sy = _HALF_PEAK / (2 * math.pi * f0 * math.tan(ANGULAR_BANDWIDTH / 2))
    return sx, sy


@dataclass(frozen=True, eq=False)
class GaborFilter:
    f0: float
    theta: float
    sigma_x: float
    sigma_y: float
    kernel: np.ndarray

    @property
    def radius(self) -> int:
        return self.kernel.shape[0] // 2


def gabor_kernel(f0: float, theta: float, sigma_x: float | None = None,
                 sigma_y: float | None = None, radius: int | None = None,
                 zero_mean: bool = True, unit_gain: bool = True) -> np.ndarray:
    if not 0 < f0 < 0.5:
        raise DataError(f"centre frequency must lie in (0, 0.5), got {f0}")
    if sigma_x is None or sigma_y is None:
        sx, sy = envelope_sigmas(f0)
        sigma_x = sx if sigma_x is None else sigma_x
        sigma_y = sy if sigma_y is None else sigma_y
    if sigma_x <= 0 or sigma_y <= 0:
        raise DataError("envelope widths must be positive")
    if radius is None:
        radius = math.ceil(3 * max(sigma_x, sigma_y))
    y, x = np.mgrid[-radius:radius + 1, -radius:radius + 1].astype(np.float64)
    xr = x * math.cos(theta) + y * math.sin(theta)
    yr = -x * math.sin(theta) + y * math.cos(theta)
    k = np.exp(-0.5 * (xr ** 2 / sigma_x ** 2 + yr ** 2 / sigma_y ** 2)) * np.cos(2 * math.pi * f0 * xr)
    if zero_mean:
        k -= k.mean()
    if unit_gain:
        k /= (k * np.cos(2 * math.pi * f0 * xr)).sum()
    return k


@dataclass(frozen=True, eq=False)
class GaborBank:
    filters: tuple[GaborFilter, ...]

    def __len__(self):
        return len(self.filters)

    @property
    def frequencies(self) -> list[float]:
        return sorted({f.f0 for f in self.filters})

    @property
    def orientations(self) -> list[float]:
        return sorted({f.theta for f in self.filters})

    def index(self, f0: float, theta: float) -> int:
        for k, flt in enumerate(self.filters):
            if math.isclose(flt.f0, f0) and math.isclose(flt.theta, theta, abs_tol=1e-12):
                return k
        raise KeyError((f0, theta))


def build_bank(image_size: int = 256) -> GaborBank:
    """The 20-filter bank.  Frequencies do not depend on size once size >= 64."""
    if image_size < MIN_IMAGE_SIZE:
        raise DataError(f"image size {image_size} is below {MIN_IMAGE_SIZE}, too small for the lowest frequency")
    filters = []
    for f0 in FREQUENCIES:
        sx, sy = envelope_sigmas(f0)
        for theta in ORIENTATIONS:
            k = gabor_kernel(f0, theta, sx, sy)
            k.setflags(write=False)
            filters.append(GaborFilter(f0, theta, sx, sy, k))
    return GaborBank(tuple(filters))


@dataclass(frozen=True, eq=False)
class ResponseStack:
    responses: np.ndarray  # (n_filters, H, W)

    def __len__(self):
        return self.responses.shape[0]


def convolve(img: np.ndarray, kernel: np.ndarray, method: str = "auto") -> np.ndarray:
    """Same-size 2-D convolution with mirror (reflect, edge not repeated) borders."""
    img = np.asarray(img, dtype=np.float64)
    if method == "auto":
        method = "spatial" if max(kernel.shape) <= 31 else "fft"
    if method == "spatial":
        return ndimage.convolve(img, kernel, mode="mirror")
    if method == "fft":
        ry, rx = kernel.shape[0] // 2, kernel.shape[1] // 2
        padded = np.pad(img, ((ry, ry), (rx, rx)), mode="reflect")
        return signal.fftconvolve(padded, kernel, mode="valid")
    raise ValueError(f"unknown convolution method {method!r}")


def apply_bank(img, bank: GaborBank, method: str = "auto") -> ResponseStack:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise DataError("Gabor filtering needs a 2-D image")
    if min(img.shape) < 2:
        raise DataError("image too small to filter")
    return ResponseStack(np.stack([convolve(img, f.kernel, method) for f in bank.filters]))


def _footprint(center: int, size: int, n: int, padding: str | None) -> np.ndarray:
    idx = np.arange(center - size // 2, center - size // 2 + size)
    if padding is None:
        if idx[0] < 0 or idx[-1] >= n:
            raise DataError("window extends outside the image")
        return idx
    if padding == "clamp":
        return np.clip(idx, 0, n - 1)
    period = 2 * (n - 1)
    idx = np.abs(idx) % period
    return np.where(idx >= n, period - idx, idx)


def gabor_feature_vector(stack: ResponseStack, center: tuple[int, int], spec: WindowSpec) -> np.ndarray:
    """Mean squared response of each filter over the window around ``center``."""
    _, h, w = stack.responses.shape
    r, c = center
    if not (0 <= r < h and 0 <= c < w):
        raise DataError(f"window centre {center} outside a {h}x{w} image")
    rows = _footprint(r, spec.size, h, spec.padding)
    cols = _footprint(c, spec.size, w, spec.padding)
    patch = stack.responses[:, rows][:, :, cols]
    return (patch ** 2).mean(axis=(1, 2))


def gabor_feature_image(stack: ResponseStack, spec: WindowSpec) -> np.ndarray:
    """Energy features at every window position, shape ``(n_rows, n_cols, n_filters)``."""
    return np.stack([window_means(r ** 2, spec) for r in stack.responses], axis=-1)
