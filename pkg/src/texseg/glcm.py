"""Grey-level co-occurrence matrices and Haralick-style statistics.

Pairs are counted symmetrically: an occurrence of ``(i, j)`` at the offset
also counts as ``(j, i)``.  Offsets in (row, col):

    0 deg -> (0, +d)    45 deg -> (-d, +d)    90 deg -> (-d, 0)    135 deg -> (-d, -d)

Per direction eight statistics are produced, in this order::

    contrast          sum (i-j)^2 p
    correlation       sum (i-mu_x)(j-mu_y) p / (sigma_x sigma_y)   (0 if a variance is 0)
    energy            sum p^2
    entropy           -sum p log2 p  over p > 0
    homogeneity       sum p / (1 + (i-j)^2)
    dissimilarity     sum |i-j| p
    idm               sum p / (1 + |i-j|)
    max_probability   max p

Feature vectors concatenate the four directions, direction-major.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from .errors import DegenerateWindowError
from .image import WindowSpec, integral_image, pad_array, rect_sums, window_origins

DIRECTIONS = (0, 45, 90, 135)
FEATURE_NAMES = ("contrast", "correlation", "energy", "entropy", "homogeneity",
                 "dissimilarity", "idm", "max_probability")
N_FEATURES = len(FEATURE_NAMES)
_VAR_EPS = 1e-10


def offset(direction: int, distance: int = 1) -> tuple[int, int]:
    """(row, col) displacement for a direction in degrees."""
    d = distance
    try:
        return {0: (0, d), 45: (-d, d), 90: (-d, 0), 135: (-d, -d)}[int(direction)]
    except KeyError:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction}") from None


def column_names(average: bool = False) -> list[str]:
    if average:
        return list(FEATURE_NAMES)
    return [f"glcm_{d}_{f}" for d in DIRECTIONS for f in FEATURE_NAMES]


@dataclass(frozen=True, eq=False)
class Glcm:
    levels: int
    direction: int
    distance: int
    counts: np.ndarray
    probabilities: np.ndarray


@dataclass(frozen=True)
class GlcmFeatures:
    contrast: float
    correlation: float
    energy: float
    entropy: float
    homogeneity: float
    dissimilarity: float
    idm: float
    max_probability: float
    degenerate: bool = False  # correlation undefined (zero marginal variance), reported as 0

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self)[:N_FEATURES], dtype=np.float64)


def _levels_of(window: np.ndarray, levels: int | None) -> int:
    if levels is None:
        return max(int(window.max()) + 1, 2)
    if window.size and window.max() >= levels:
        raise ValueError(f"window has grey level {window.max()} >= levels={levels}")
    return levels


def compute_glcm(window, direction: int = 0, distance: int = 1, levels: int | None = None) -> Glcm:
    w = np.asarray(window, dtype=np.int64)
    G = _levels_of(w, levels)
    dr, dc = offset(direction, distance)
    h, wd = w.shape
    if abs(dr) >= h or abs(dc) >= wd:
        raise DegenerateWindowError(
            f"{h}x{wd} window has no pixel pairs at offset {(dr, dc)}")
    r0, r1 = max(0, -dr), h - max(0, dr)
    c0, c1 = max(0, -dc), wd - max(0, dc)
    a = w[r0:r1, c0:c1]
    b = w[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
    counts = np.bincount((a * G + b).ravel(), minlength=G * G).reshape(G, G)
    counts = counts + counts.T
    probs = counts / counts.sum()
    for arr in (counts, probs):
        arr.setflags(write=False)
    return Glcm(G, int(direction), distance, counts, probs)


def glcm_features(glcm: Glcm) -> GlcmFeatures:
    p = glcm.probabilities
    G = glcm.levels
    i, j = np.indices((G, G), dtype=np.float64)
    diff = i - j
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    lv = np.arange(G, dtype=np.float64)
    mu_x, mu_y = lv @ px, lv @ py
    var_x = ((lv - mu_x) ** 2) @ px
    var_y = ((lv - mu_y) ** 2) @ py
    degenerate = var_x <= _VAR_EPS or var_y <= _VAR_EPS
    if degenerate:
        corr = 0.0
    else:
        corr = float(((i - mu_x) * (j - mu_y) * p).sum() / np.sqrt(var_x * var_y))
    nz = p[p > 0]
    return GlcmFeatures(
        contrast=float((diff ** 2 * p).sum()),
        correlation=corr,
        energy=float((p ** 2).sum()),
        entropy=float(-(nz * np.log2(nz)).sum()) + 0.0,
        homogeneity=float((p / (1.0 + diff ** 2)).sum()),
        dissimilarity=float((np.abs(diff) * p).sum()),
        idm=float((p / (1.0 + np.abs(diff))).sum()),
        max_probability=float(p.max()),
        degenerate=bool(degenerate),
    )


def glcm_feature_vector(window, distance: int = 1, levels: int | None = None,
                        average: bool = False) -> np.ndarray:
    """32 values (4 directions x 8 statistics), or 8 when ``average``."""
    rows = np.stack([
        glcm_features(compute_glcm(window, d, distance, levels)).as_array()
        for d in DIRECTIONS
    ])
    return rows.mean(axis=0) if average else rows.ravel()


def glcm_feature_image(pixels, levels: int, spec: WindowSpec, distance: int = 1,
                       average: bool = False) -> np.ndarray:
    """Features for every window position at once, shape ``(n_rows, n_cols, 32)``.

    Linear statistics are window means of per-pair quantities; energy, entropy
    and maximum probability need the per-window histogram, which is built one
    occupied grey-level pair at a time from summed-area tables.
    """
    px = np.asarray(pixels, dtype=np.int64)
    padded = pad_array(px, spec)
    rows, cols = window_origins(px.shape, spec)
    S = spec.size
    out = np.empty((len(rows), len(cols), len(DIRECTIONS), N_FEATURES))
    for k, direction in enumerate(DIRECTIONS):
        dr, dc = offset(direction, distance)
        if abs(dr) >= S or abs(dc) >= S:
            raise DegenerateWindowError(f"window size {S} has no pairs at offset {(dr, dc)}")
        hp, wp = padded.shape
        a = padded[max(0, -dr):hp - max(0, dr), max(0, -dc):wp - max(0, dc)]
        b = padded[max(0, dr):hp - max(0, -dr), max(0, dc):wp - max(0, -dc)]
        # anchors for window origin (r0, c0) start at (r0, c0) in the a/b frame
        ph, pw = S - abs(dr), S - abs(dc)
        n_pairs = float(ph * pw)

        def wmean(values):
            return rect_sums(integral_image(values), rows, cols, ph, pw) / n_pairs

        af = a.astype(np.float64)
        bf = b.astype(np.float64)
        diff = af - bf
        adiff = np.abs(diff)
        mu = wmean((af + bf) / 2.0)
        var = wmean((af ** 2 + bf ** 2) / 2.0) - mu ** 2
        cov = wmean(af * bf) - mu ** 2
        ok = var > _VAR_EPS
        corr = np.where(ok, cov / np.where(ok, var, 1.0), 0.0)

        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        code = lo * levels + hi
        energy = np.zeros((len(rows), len(cols)))
        entropy = np.zeros_like(energy)
        maxp = np.zeros_like(energy)
        for c in np.unique(code):
            n = rect_sums(integral_image(code == c), rows, cols, ph, pw)
            if c // levels == c % levels:
                p, mult = n / n_pairs, 1.0
            else:
                p, mult = n / (2.0 * n_pairs), 2.0
            energy += mult * p ** 2
            pos = p > 0
            entropy[pos] -= mult * p[pos] * np.log2(p[pos])
            np.maximum(maxp, p, out=maxp)

        out[:, :, k, 0] = wmean(diff ** 2)
        out[:, :, k, 1] = corr
        out[:, :, k, 2] = energy
        out[:, :, k, 3] = entropy
        out[:, :, k, 4] = wmean(1.0 / (1.0 + diff ** 2))
        out[:, :, k, 5] = wmean(adiff)
        out[:, :, k, 6] = wmean(1.0 / (1.0 + adiff))
        out[:, :, k, 7] = maxp
    if average:
        return out.mean(axis=2)
    return out.reshape(len(rows), len(cols), -1)

