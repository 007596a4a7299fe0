"""Third-order Gaussian Markov random field parameters as texture features.

Each pixel is modelled as conditionally Gaussian given its twelve neighbours,
entering through six symmetric pair sums::

    s1 = I(i-1, j)   + I(i+1, j)      s2 = I(i, j-1)   + I(i, j+1)
    s3 = I(i-2, j)   + I(i+2, j)      s4 = I(i, j-2)   + I(i, j+2)
    s5 = I(i-1, j-1) + I(i+1, j+1)    s6 = I(i-1, j+1) + I(i+1, j-1)

The interaction weights ``alpha`` solve the least-squares normal equations
``(sum s s^T) alpha = sum I s`` over the window interior (pixels at least two
from the border), and ``sigma2`` is the mean squared residual over that
interior.  Windows are mean-centred first so the DC level does not leak into
``alpha``.  The feature vector is ``(alpha_1 .. alpha_6, sigma2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWindowError, SingularMatrixError
from .image import WindowSpec, integral_image, pad_array, rect_sums, window_origins

OFFSETS = ((1, 0), (0, 1), (2, 0), (0, 2), (1, 1), (1, -1))
MARGIN = 2
MIN_WINDOW = 8
COND_LIMIT = 1e12
RIDGE_SCALE = 1e-8
# A constant window is predicted exactly by any alpha with sum(2 alpha) = 1; the
# ridge solution on the uncentred window tends to the equal split.
FLAT_ALPHA = 1.0 / 12.0
FEATURE_NAMES = ("alpha1", "alpha2", "alpha3", "alpha4", "alpha5", "alpha6", "sigma2")


def column_names() -> list[str]:
    return [f"gmrf_{n}" for n in FEATURE_NAMES]


@dataclass(frozen=True)
class NeighborSums:
    s1: float
    s2: float
    s3: float
    s4: float
    s5: float
    s6: float

    def as_array(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3, self.s4, self.s5, self.s6])


@dataclass(frozen=True, eq=False)
class GmrfParams:
    alpha: np.ndarray
    sigma2: float
    regularized: bool = False  # True when the ridge fallback was used

    def as_array(self) -> np.ndarray:
        return np.append(self.alpha, self.sigma2)


def neighbor_sums(window, i: int, j: int) -> NeighborSums:
    w = np.asarray(window, dtype=np.float64)
    h, wd = w.shape
    if not (MARGIN <= i < h - MARGIN and MARGIN <= j < wd - MARGIN):
        raise IndexError(f"({i}, {j}) is closer than {MARGIN} pixels to the border of a {h}x{wd} window")
    return NeighborSums(*(w[i - dr, j - dc] + w[i + dr, j + dc] for dr, dc in OFFSETS))


def neighbor_sum_planes(a: np.ndarray) -> np.ndarray:
    """All six neighbour sums at every interior pixel, shape ``(6, H-4, W-4)``."""
    a = np.asarray(a, dtype=np.float64)
    h, w = a.shape
    m = MARGIN

    def shifted(dr, dc):
        return a[m + dr:h - m + dr, m + dc:w - m + dc]

    return np.stack([shifted(-dr, -dc) + shifted(dr, dc) for dr, dc in OFFSETS])


def normal_equations(window) -> tuple[np.ndarray, np.ndarray, float, int]:
    """``(sum s s^T, sum I s, sum I^2, n)`` over the interior of a centred window."""
    w = np.asarray(window, dtype=np.float64)
    w = w - w.mean()
    s = neighbor_sum_planes(w).reshape(6, -1)
    y = w[MARGIN:-MARGIN, MARGIN:-MARGIN].ravel()
    return s @ s.T, s @ y, float(y @ y), y.size


def estimate_gmrf(window, ridge: bool = False) -> GmrfParams:
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 2 or min(w.shape) < MIN_WINDOW:
        raise DegenerateWindowError(f"GMRF estimation needs a window of at least {MIN_WINDOW}x{MIN_WINDOW}")
    A, b, yy, n = normal_equations(w)
    eig = np.linalg.eigvalsh(A)
    assert eig[0] >= -1e-9 * max(eig[-1], 1.0), "normal matrix must be positive semi-definite"
    regularized = False
    if np.ptp(w) == 0:
        if not ridge:
            raise SingularMatrixError("GMRF normal matrix is singular: the window is constant")
        return GmrfParams(np.full(6, FLAT_ALPHA), 0.0, True)
    if eig[0] <= eig[-1] / COND_LIMIT or eig[-1] == 0:
        if not ridge:
            raise SingularMatrixError(
                f"GMRF normal matrix is singular or ill-conditioned (eigenvalues {eig[0]:.3g}..{eig[-1]:.3g})")
        regularized = True
        lam = RIDGE_SCALE * np.trace(A)
        alpha = np.linalg.solve(A + lam * np.eye(6), b)
        resid = yy - 2 * alpha @ b + alpha @ (A @ alpha)
    else:
        alpha = np.linalg.solve(A, b)
        resid = yy - alpha @ b
    return GmrfParams(alpha, max(float(resid), 0.0) / n, regularized)


def gmrf_feature_vector(window, ridge: bool = False) -> np.ndarray:
    return estimate_gmrf(window, ridge=ridge).as_array()


def _window_range(a: np.ndarray, S: int, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Exact max - min over every ``S x S`` window at the given origins."""
    view = np.lib.stride_tricks.sliding_window_view
    hi = view(view(a, S, axis=1).max(axis=-1), S, axis=0).max(axis=-1)
    lo = view(view(a, S, axis=1).min(axis=-1), S, axis=0).min(axis=-1)
    return (hi - lo)[np.ix_(rows, cols)]


def gmrf_feature_image(intensity, spec: WindowSpec, ridge: bool = True) -> np.ndarray:
    """GMRF features for every window position, shape ``(n_rows, n_cols, 7)``.

    Uses summed-area tables of all first and second moments of ``I`` and the
    neighbour sums, then solves the per-window 6x6 systems in one batch.  With
    ``ridge=False`` an ill-conditioned window raises; with ``ridge=True`` it is
    regularized, and an exactly constant window yields ``alpha_l = 1/12``,
    ``sigma2 = 0``.
    """
    S = spec.size
    if S < MIN_WINDOW:
        raise DegenerateWindowError(f"GMRF estimation needs a window of at least {MIN_WINDOW}x{MIN_WINDOW}")
    img = np.asarray(intensity, dtype=np.float64)
    padded = pad_array(img, spec)
    padded = padded - padded.mean()  # conditioning only; estimates are shift invariant
    rows, cols = window_origins(img.shape, spec)
    inner = S - 2 * MARGIN
    n = float(inner * inner)

    s = neighbor_sum_planes(padded)
    y = padded[MARGIN:-MARGIN, MARGIN:-MARGIN]

    def box(v):
        return rect_sums(integral_image(v), rows, cols, inner, inner)

    mean = rect_sums(integral_image(padded), rows, cols, S, S) / (S * S)
    sum_y = box(y)
    sum_yy = box(y * y)
    sum_s = np.stack([box(s[k]) for k in range(6)], axis=-1)
    sum_ys = np.stack([box(y * s[k]) for k in range(6)], axis=-1)
    sum_ss = np.empty(mean.shape + (6, 6))
    for k in range(6):
        for l in range(k, 6):
            sum_ss[..., k, l] = sum_ss[..., l, k] = box(s[k] * s[l])

    m = mean[..., None]
    A = (sum_ss - 2 * m[..., None] * (sum_s[..., :, None] + sum_s[..., None, :])
         + 4 * (m * m)[..., None] * n)
    b = sum_ys - 2 * m * sum_y[..., None] - m * sum_s + 2 * m * m * n
    yy = sum_yy - 2 * mean * sum_y + mean * mean * n

    flat = _window_range(padded, S, rows, cols) == 0
    eig = np.linalg.eigvalsh(A)
    bad = (eig[..., 0] <= eig[..., -1] / COND_LIMIT) | (eig[..., -1] <= 0) | flat
    if bad.any() and not ridge:
        raise SingularMatrixError(f"{int(bad.sum())} windows have a singular GMRF normal matrix")
    lam = np.where(bad, RIDGE_SCALE * np.trace(A, axis1=-2, axis2=-1), 0.0)
    lam[flat] = 1.0  # placeholder, overwritten below
    alpha = np.linalg.solve(A + lam[..., None, None] * np.eye(6), b[..., None])[..., 0]
    Aa = np.einsum("...kl,...l->...k", A, alpha)
    resid = yy - 2 * np.einsum("...k,...k->...", alpha, b) + np.einsum("...k,...k->...", alpha, Aa)
    sigma2 = np.maximum(resid, 0.0) / n
    alpha[flat] = FLAT_ALPHA
    sigma2[flat] = 0.0
    return np.concatenate([alpha, sigma2[..., None]], axis=-1)
