"""Procedural texture mosaics with ground-truth label maps.

Synthetic stand-ins for photographic texture albums.  Each generator renders a
full-size texture in intensity units (nominally ``[0, 1]``); a mosaic takes
each region's pixels from its own generator and clips the result to ``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError
from .image import GrayImage, LabelMap

# (row, col) offsets of the six symmetric neighbour pairs, in the order used by
# the GMRF feature module.
GMRF_OFFSETS = ((1, 0), (0, 1), (2, 0), (0, 2), (1, 1), (1, -1))


@dataclass(frozen=True)
class Sinusoid:
    """Oriented cosine grating.  ``orientation`` in degrees, ``frequency`` in cycles/pixel.

    The wave runs along ``x cos(theta) + y sin(theta)`` with x the column and
    y the row index.  ``phase=None`` draws a random phase from the region RNG.
    """

    frequency: float
    orientation: float = 0.0
    amplitude: float = 0.35
    mean: float = 0.5
    phase: float | None = None
    noise: float = 0.0
    kind: str = field(default="sinusoid", init=False)

    def render(self, shape, rng: np.random.Generator) -> np.ndarray:
        if not 0 < self.frequency < 0.5:
            raise DataError(f"grating frequency must be in (0, 0.5), got {self.frequency}")
        phase = rng.uniform(0, 2 * math.pi) if self.phase is None else self.phase
        y, x = np.mgrid[0:shape[0], 0:shape[1]].astype(np.float64)
        t = math.radians(self.orientation)
        u = x * math.cos(t) + y * math.sin(t)
        out = self.mean + self.amplitude * np.cos(2 * math.pi * self.frequency * u + phase)
        if self.noise:
            out = out + rng.normal(0.0, self.noise, size=shape)
        return out


@dataclass(frozen=True)
class GaussianNoise:
    mean: float = 0.5
    std: float = 0.1
    kind: str = field(default="noise", init=False)

    def render(self, shape, rng: np.random.Generator) -> np.ndarray:
        if self.std < 0:
            raise DataError("noise std must be >= 0")
        if self.std == 0:
            return np.full(shape, float(self.mean))
        return rng.normal(self.mean, self.std, size=shape)


@dataclass(frozen=True)
class Checkerboard:
    cell: int = 4
    low: float = 0.3
    high: float = 0.7
    noise: float = 0.0
    kind: str = field(default="checkerboard", init=False)

    def render(self, shape, rng: np.random.Generator) -> np.ndarray:
        if self.cell < 1:
            raise DataError("checkerboard cell must be >= 1")
        y, x = np.mgrid[0:shape[0], 0:shape[1]]
        parity = ((y // self.cell) + (x // self.cell)) % 2
        out = np.where(parity == 0, self.low, self.high).astype(np.float64)
        if self.noise:
            out = out + rng.normal(0.0, self.noise, size=shape)
        return out


@dataclass(frozen=True)
class GmrfTexture:
    """Stationary Gaussian Markov random field sampled on a torus.

    ``alpha`` are the six neighbour-pair interaction weights and ``sigma`` the
    conditional standard deviation, i.e. each pixel given all others is normal
    with mean ``sum(alpha_l * s_l)`` and variance ``sigma**2``.
    """

    alpha: tuple[float, ...] = (0.2, 0.2, 0.0, 0.0, 0.0, 0.0)
    sigma: float = 0.05
    mean: float = 0.5
    kind: str = field(default="gmrf", init=False)

    def render(self, shape, rng: np.random.Generator) -> np.ndarray:
        return self.mean + sample_gmrf(shape, self.alpha, self.sigma, rng)


GENERATORS = {cls.__dataclass_fields__["kind"].default: cls
              for cls in (Sinusoid, GaussianNoise, Checkerboard, GmrfTexture)}


def gmrf_spectrum(shape, alpha: Sequence[float]) -> np.ndarray:
    """``1 - sum_l 2 alpha_l cos(w . d_l)`` on the DFT grid of ``shape``."""
    if len(alpha) != len(GMRF_OFFSETS):
        raise DataError("GMRF alpha must have 6 components")
    wr = 2 * np.pi * np.fft.fftfreq(shape[0])[:, None]
    wc = 2 * np.pi * np.fft.fftfreq(shape[1])[None, :]
    out = np.ones(shape)
    for a, (dr, dc) in zip(alpha, GMRF_OFFSETS):
        out = out - 2 * a * np.cos(wr * dr + wc * dc)
    return out


def sample_gmrf(shape, alpha: Sequence[float], sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean conditional-autoregressive field with periodic boundaries."""
    spec = gmrf_spectrum(shape, alpha)
    if spec.min() <= 0:
        raise DataError(f"GMRF parameters {tuple(alpha)} are not positive definite")
    white = rng.standard_normal(shape)
    return np.real(np.fft.ifft2(np.fft.fft2(white) * (sigma / np.sqrt(spec))))


@dataclass(frozen=True)
class Region:
    """Half-open rectangle ``rows[0] <= r < rows[1]``, ``cols[0] <= c < cols[1]``."""

    rows: tuple[int, int]
    cols: tuple[int, int]
    generator: object
    label: int | None = None


@dataclass(frozen=True)
class MosaicSpec:
    height: int
    width: int
    regions: tuple[Region, ...]
    seed: int = 0
    levels: int = 32

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def labels(self) -> list[int]:
        return [i if r.label is None else r.label for i, r in enumerate(self.regions)]

    @property
    def num_classes(self) -> int:
        return max(self.labels()) + 1

    def validate(self) -> np.ndarray:
        """Check the tiling; returns the ground-truth label raster."""
        if self.height < 1 or self.width < 1:
            raise DataError("mosaic dimensions must be positive")
        cover = np.zeros(self.shape, dtype=np.int64)
        truth = np.zeros(self.shape, dtype=np.int64)
        for region, lab in zip(self.regions, self.labels()):
            (r0, r1), (c0, c1) = region.rows, region.cols
            if not (0 <= r0 < r1 <= self.height and 0 <= c0 < c1 <= self.width):
                raise DataError(f"region {region.rows}x{region.cols} outside the image")
            cover[r0:r1, c0:c1] += 1
            truth[r0:r1, c0:c1] = lab
        if (cover > 1).any():
            raise DataError("mosaic regions overlap")
        if (cover == 0).any():
            raise DataError("mosaic regions leave gaps")
        if len({repr(r.generator) for r in self.regions}) < 2:
            raise DataError("a mosaic needs at least two distinct generators")
        return truth


def synthesize_mosaic(spec: MosaicSpec) -> tuple[GrayImage, LabelMap]:
    truth = spec.validate()
    streams = np.random.SeedSequence(spec.seed).spawn(len(spec.regions))
    inten = np.zeros(spec.shape)
    for region, ss in zip(spec.regions, streams):
        (r0, r1), (c0, c1) = region.rows, region.cols
        tex = region.generator.render(spec.shape, np.random.default_rng(ss))
        inten[r0:r1, c0:c1] = tex[r0:r1, c0:c1]
    return GrayImage.from_intensity(inten, spec.levels), LabelMap(truth, spec.num_classes)


def reference_images(spec: MosaicSpec, shape=None) -> dict[int, GrayImage]:
    """One pure single-texture training image per class.

    Random streams are independent of those used by :func:`synthesize_mosaic`,
    so training never sees the exact pixels being segmented.
    """
    shape = tuple(shape) if shape is not None else spec.shape
    streams = np.random.SeedSequence([spec.seed, 1]).spawn(len(spec.regions))
    refs: dict[int, GrayImage] = {}
    for region, lab, ss in zip(spec.regions, spec.labels(), streams):
        if lab in refs:
            continue
        tex = region.generator.render(shape, np.random.default_rng(ss))
        refs[lab] = GrayImage.from_intensity(tex, spec.levels)
    return refs


# -- layouts and presets ----------------------------------------------------

def bands(generators, height: int, width: int, vertical: bool = True) -> tuple[Region, ...]:
    """Equal bands, left-to-right if ``vertical`` else top-to-bottom."""
    n = len(generators)
    extent = width if vertical else height
    edges = np.linspace(0, extent, n + 1).round().astype(int)
    out = []
    for k, g in enumerate(generators):
        span = (int(edges[k]), int(edges[k + 1]))
        out.append(Region((0, height), span, g) if vertical else Region(span, (0, width), g))
    return tuple(out)


def grid(generators, height: int, width: int, row_counts: Sequence[int]) -> tuple[Region, ...]:
    """Rows of rectangles; ``row_counts[i]`` rectangles in horizontal band ``i``."""
    if sum(row_counts) != len(generators):
        raise DataError("row_counts must sum to the number of generators")
    redges = np.linspace(0, height, len(row_counts) + 1).round().astype(int)
    out = []
    k = 0
    for i, count in enumerate(row_counts):
        cedges = np.linspace(0, width, count + 1).round().astype(int)
        for j in range(count):
            out.append(Region((int(redges[i]), int(redges[i + 1])),
                              (int(cedges[j]), int(cedges[j + 1])), generators[k]))
            k += 1
    return tuple(out)


_TEN = (
    Sinusoid(0.0884, 0.0),
    Sinusoid(0.0884, 90.0),
    Sinusoid(0.0884, 45.0),
    Sinusoid(0.0884, 135.0),
    GaussianNoise(0.5, 0.05),
    GaussianNoise(0.5, 0.2),
    Checkerboard(4, noise=0.03),
    Checkerboard(8, noise=0.03),
    GmrfTexture((0.3, 0.15, 0.0, 0.0, 0.0, 0.0), 0.04),
    Sinusoid(0.1768, 0.0, noise=0.05),
)


def preset_mosaic(name: str, seed: int = 0, size: int = 256, levels: int = 32) -> MosaicSpec:
    """Named synthetic mosaics.

    ``two-gratings``
        left/right halves with orthogonal gratings (f = 0.1).
    ``two``, ``five``, ``ten``
        2, 5 and 10 textures mixing gratings, noise of different variance,
        checkerboards and GMRF fields, for the texture-count comparison.
    """
    if name == "two-gratings":
        gens = (Sinusoid(0.1, 0.0), Sinusoid(0.1, 90.0))
        regions = bands(gens, size, size, vertical=True)
    elif name == "two":
        regions = bands((_TEN[0], _TEN[5]), size, size, vertical=False)
    elif name == "five":
        gens = (_TEN[0], _TEN[1], _TEN[4], _TEN[5], _TEN[6])
        regions = grid(gens, size, size, (2, 3))
    elif name == "ten":
        regions = grid(_TEN, size, size, (5, 5))
    else:
        raise DataError(f"unknown mosaic preset {name!r}")
    return MosaicSpec(size, size, regions, seed=seed, levels=levels)


PRESETS = ("two-gratings", "two", "five", "ten")


# -- (de)serialization ------------------------------------------------------

def generator_to_dict(g) -> dict:
    d = asdict(g)
    if "alpha" in d:
        d["alpha"] = list(d["alpha"])
    return d


def generator_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in GENERATORS:
        raise DataError(f"unknown generator kind {kind!r}")
    if "alpha" in d:
        d["alpha"] = tuple(float(a) for a in d["alpha"])
    try:
        return GENERATORS[kind](**d)
    except TypeError as exc:
        raise DataError(f"bad parameters for {kind} generator: {exc}") from exc


def mosaic_to_dict(spec: MosaicSpec) -> dict:
    return {
        "height": spec.height,
        "width": spec.width,
        "seed": spec.seed,
        "levels": spec.levels,
        "regions": [
            {"rows": list(r.rows), "cols": list(r.cols), "label": r.label,
             "generator": generator_to_dict(r.generator)}
            for r in spec.regions
        ],
    }


def mosaic_from_dict(d: dict) -> MosaicSpec:
    if "preset" in d:
        return preset_mosaic(d["preset"], seed=int(d.get("seed", 0)),
                             size=int(d.get("size", 256)), levels=int(d.get("levels", 32)))
    try:
        regions = tuple(
            Region(tuple(r["rows"]), tuple(r["cols"]), generator_from_dict(r["generator"]), r.get("label"))
            for r in d["regions"]
        )
        return MosaicSpec(int(d["height"]), int(d["width"]), regions,
                          seed=int(d.get("seed", 0)), levels=int(d.get("levels", 32)))
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed mosaic description: {exc}") from exc
