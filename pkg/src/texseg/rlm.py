"""Grey-level run-length matrices and the five classic run-length statistics.

A run is a maximal stretch of equal grey level along a scan line.  Scan lines
per direction: rows (0 deg), columns (90 deg), anti-diagonals running up-right
(45 deg) and diagonals running up-left (135 deg); every pixel lies on exactly
one line per direction.

``Rlm.counts[i, j - 1]`` is the number of runs of level ``i`` and length ``j``.
With ``N_r`` the total run count and ``n`` the window pixel count::

    SRE = sum counts / j^2 / N_r         LRE = sum counts * j^2 / N_r
    GLN = sum_i (sum_j counts)^2 / N_r   RLN = sum_j (sum_i counts)^2 / N_r
    RP  = N_r / n
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import DegenerateWindowError
from .image import WindowSpec, pad_array, window_origins

DIRECTIONS = (0, 45, 90, 135)
FEATURE_NAMES = ("sre", "lre", "gln", "rln", "rp")
N_FEATURES = len(FEATURE_NAMES)


def column_names() -> list[str]:
    return [f"rlm_{d}_{f}" for d in DIRECTIONS for f in FEATURE_NAMES]


@dataclass(frozen=True, eq=False)
class Rlm:
    levels: int
    direction: int
    max_run_length: int
    counts: np.ndarray
    pixel_count: int


def scan_lines(window: np.ndarray, direction: int) -> list[np.ndarray]:
    w = np.asarray(window)
    h, wd = w.shape
    if direction == 0:
        return list(w)
    if direction == 90:
        return list(w.T)
    if direction == 45:
        # r + c constant; read bottom-left to top-right
        flipped = w[::-1]
        return [flipped.diagonal(k) for k in range(-(h - 1), wd)]
    if direction == 135:
        return [w.diagonal(k) for k in range(-(h - 1), wd)]
    raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction}")


def _runs(line: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Levels and lengths of the maximal runs in a 1-D sequence."""
    change = np.flatnonzero(line[1:] != line[:-1]) + 1
    starts = np.concatenate(([0], change))
    lengths = np.diff(np.concatenate((starts, [len(line)])))
    return line[starts], lengths


def compute_rlm(window, direction: int = 0, levels: int | None = None) -> Rlm:
    w = np.asarray(window, dtype=np.int64)
    if w.ndim != 2 or w.size == 0:
        raise DegenerateWindowError("run-length matrix needs a non-empty 2-D window")
    G = max(int(w.max()) + 1, 2) if levels is None else levels
    if w.max() >= G:
        raise ValueError(f"window has grey level {w.max()} >= levels={G}")
    h, wd = w.shape
    R = {0: wd, 90: h}.get(direction, min(h, wd))
    counts = np.zeros((G, R), dtype=np.int64)
    for line in scan_lines(w, direction):
        lv, ln = _runs(line)
        np.add.at(counts, (lv, ln - 1), 1)
    counts.setflags(write=False)
    return Rlm(G, direction, R, counts, w.size)


def rlm_features(rlm: Rlm) -> np.ndarray:
    """``(SRE, LRE, GLN, RLN, RP)`` of one run-length matrix."""
    c = rlm.counts
    n_runs = c.sum()
    if n_runs == 0:
        raise DegenerateWindowError("run-length matrix has no runs")
    j2 = np.arange(1, c.shape[1] + 1, dtype=np.float64) ** 2
    return np.array([
        (c / j2).sum() / n_runs,
        (c * j2).sum() / n_runs,
        (c.sum(axis=1).astype(np.float64) ** 2).sum() / n_runs,
        (c.sum(axis=0).astype(np.float64) ** 2).sum() / n_runs,
        n_runs / rlm.pixel_count,
    ])


def rlm_feature_vector(window, levels: int | None = None) -> np.ndarray:
    """20 values: 4 directions x (SRE, LRE, GLN, RLN, RP), direction-major."""
    return np.concatenate([rlm_features(compute_rlm(window, d, levels)) for d in DIRECTIONS])


# -- dense path -------------------------------------------------------------

@numba.njit(cache=True)
def _scan_line(win, r, c, dr, dc, S, by_level, by_length, acc):
    """Walk one scan line from (r, c) with step (dr, dc), tallying its runs."""
    level = win[r, c]
    run = 0
    while 0 <= r < S and 0 <= c < S:
        v = win[r, c]
        if v == level:
            run += 1
        else:
            acc[0] += 1.0
            acc[1] += 1.0 / (run * run)
            acc[2] += run * run
            by_level[level] += 1
            by_length[run] += 1
            level = v
            run = 1
        r += dr
        c += dc
    acc[0] += 1.0
    acc[1] += 1.0 / (run * run)
    acc[2] += run * run
    by_level[level] += 1
    by_length[run] += 1


@numba.njit(cache=True)
def _rlm_dense(padded, levels, S, rows, cols, out):
    by_level = np.zeros(levels, np.int64)
    by_length = np.zeros(S + 1, np.int64)
    acc = np.zeros(3)
    for a in range(rows.shape[0]):
        for b in range(cols.shape[0]):
            win = padded[rows[a]:rows[a] + S, cols[b]:cols[b] + S]
            for d in range(4):
                by_level[:] = 0
                by_length[:] = 0
                acc[:] = 0.0
                if d == 0:
                    for i in range(S):
                        _scan_line(win, i, 0, 0, 1, S, by_level, by_length, acc)
                elif d == 1:
                    # 45 deg: r + c = k, walking up-right
                    for k in range(2 * S - 1):
                        c0 = max(0, k - (S - 1))
                        _scan_line(win, k - c0, c0, -1, 1, S, by_level, by_length, acc)
                elif d == 2:
                    for j in range(S):
                        _scan_line(win, 0, j, 1, 0, S, by_level, by_length, acc)
                else:
                    # 135 deg: c - r = k, walking down-right
                    for k in range(-(S - 1), S):
                        r0 = max(0, -k)
                        _scan_line(win, r0, r0 + k, 1, 1, S, by_level, by_length, acc)
                n = acc[0]
                gln = 0.0
                for i in range(levels):
                    gln += by_level[i] * by_level[i]
                rln = 0.0
                for j in range(S + 1):
                    rln += by_length[j] * by_length[j]
                out[a, b, d, 0] = acc[1] / n
                out[a, b, d, 1] = acc[2] / n
                out[a, b, d, 2] = gln / n
                out[a, b, d, 3] = rln / n
                out[a, b, d, 4] = n / (S * S)


def rlm_feature_image(pixels, levels: int, spec: WindowSpec) -> np.ndarray:
    """Run-length features for every window position, shape ``(n_rows, n_cols, 20)``.

    Compiled scan of each window; same definitions as :func:`rlm_feature_vector`.
    """
    px = np.asarray(pixels, dtype=np.int64)
    if px.max() >= levels:
        raise ValueError(f"image has grey level {px.max()} >= levels={levels}")
    padded = np.ascontiguousarray(pad_array(px, spec))
    rows, cols = window_origins(px.shape, spec)
    out = np.empty((len(rows), len(cols), len(DIRECTIONS), N_FEATURES))
    _rlm_dense(padded, levels, spec.size, rows.astype(np.int64), cols.astype(np.int64), out)
    return out.reshape(len(rows), len(cols), -1)
