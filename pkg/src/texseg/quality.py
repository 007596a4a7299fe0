"""Segmentation quality: Bhattacharyya distances per texture plus pixel accuracy.

For every class the feature vectors of the pixels a segmentation assigned to
that class are compared, as a Gaussian, with the feature vectors of the pixels
that truly belong to it.  The per-class distances are summed into a total;
smaller is better and a perfect segmentation scores 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .classifier import DEFAULT_RIDGE, regularize
from .errors import DataError, SingularMatrixError
from .image import LabelMap


@dataclass(frozen=True, eq=False)
class RegionStats:
    mu: np.ndarray
    sigma: np.ndarray
    count: int

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def _logdet_pd(a: np.ndarray) -> float:
    try:
        L = linalg.cholesky(a, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularMatrixError("covariance is not positive definite") from exc
    return 2.0 * float(np.log(np.diag(L)).sum())


def bhattacharyya(a: RegionStats, b: RegionStats) -> float:
    """Bhattacharyya distance between two Gaussians.

    ``B = (1/8) d^T S^-1 d + (1/2) ln(|S| / sqrt(|S1| |S2|))`` with
    ``S = (S1 + S2) / 2`` and ``d = mu1 - mu2``.  Determinants are taken in
    the log domain.
    """
    if a.dim != b.dim:
        raise DataError(f"dimension mismatch: {a.dim} vs {b.dim}")
    s = (a.sigma + b.sigma) / 2.0
    d = a.mu - b.mu
    try:
        L = linalg.cholesky(s, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularMatrixError("pooled covariance is not positive definite") from exc
    z = linalg.solve_triangular(L, d, lower=True)
    maha = float(z @ z)
    logdet_s = 2.0 * float(np.log(np.diag(L)).sum())
    log_ratio = logdet_s - 0.5 * (_logdet_pd(a.sigma) + _logdet_pd(b.sigma))
    return max(maha / 8.0 + 0.5 * log_ratio, 0.0)


def _as_rows(features, n_pixels: int) -> np.ndarray:
    f = np.asarray(features, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    elif f.ndim == 3:
        f = f.reshape(-1, f.shape[-1])
    if f.shape[0] != n_pixels:
        raise DataError("features do not align with the label map")
    return f


def stats_of(rows, ridge: float = DEFAULT_RIDGE) -> RegionStats:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[0] < 2:
        raise DataError(f"region has {rows.shape[0]} sample(s); at least 2 are required")
    cov = np.cov(rows, rowvar=False, ddof=1).reshape(rows.shape[1], rows.shape[1])
    return RegionStats(rows.mean(axis=0), regularize(cov, ridge), rows.shape[0])


def region_stats(features, labels, class_id: int, ridge: float = DEFAULT_RIDGE) -> RegionStats:
    """Mean and regularized covariance of the features at pixels labelled ``class_id``.

    ``features`` is ``(H, W, D)`` (or ``(H*W, D)``) aligned with ``labels``.
    """
    lab = np.asarray(labels.labels if isinstance(labels, LabelMap) else labels).ravel()
    rows = _as_rows(features, lab.size)
    return stats_of(rows[lab == class_id], ridge)


@dataclass
class QualityReport:
    per_texture: dict[int, float]
    total_distance: float
    pixel_accuracy: float
    confusion: np.ndarray
    missing: list[int] = field(default_factory=list)

    @property
    def num_classes(self) -> int:
        return len(self.per_texture)

    def row(self) -> list[float]:
        return [self.per_texture[c] for c in sorted(self.per_texture)] + [self.total_distance, self.pixel_accuracy]


def quality_report(seg_labels, ref_labels, seg_features, ref_features,
                   ridge: float = DEFAULT_RIDGE, mask=None) -> QualityReport:
    """Per-texture Bhattacharyya distances, their total, accuracy and confusion.

    A class with fewer than two pixels on either side is reported as missing
    (distance NaN) and left out of the total.  ``mask`` optionally restricts
    which pixels are scored.
    """
    seg = np.asarray(seg_labels.labels if isinstance(seg_labels, LabelMap) else seg_labels)
    ref = np.asarray(ref_labels.labels if isinstance(ref_labels, LabelMap) else ref_labels)
    if seg.shape != ref.shape:
        raise DataError(f"label maps differ in shape: {seg.shape} vs {ref.shape}")
    n_classes = max(
        seg_labels.num_classes if isinstance(seg_labels, LabelMap) else int(seg.max()) + 1,
        ref_labels.num_classes if isinstance(ref_labels, LabelMap) else int(ref.max()) + 1,
    )
    seg_rows = _as_rows(seg_features, seg.size)
    ref_rows = _as_rows(ref_features, ref.size)
    keep = np.ones(seg.size, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).ravel()
    s, r = seg.ravel(), ref.ravel()

    per: dict[int, float] = {}
    missing = []
    for c in range(n_classes):
        seg_sel = keep & (s == c)
        ref_sel = keep & (r == c)
        if seg_sel.sum() < 2 or ref_sel.sum() < 2:
            per[c] = math.nan
            missing.append(c)
            continue
        per[c] = bhattacharyya(stats_of(seg_rows[seg_sel], ridge), stats_of(ref_rows[ref_sel], ridge))
    total = float(sum(v for v in per.values() if not math.isnan(v)))
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (r[keep], s[keep]), 1)
    accuracy = float(np.trace(confusion) / max(confusion.sum(), 1))
    return QualityReport(per, total, accuracy, confusion, missing)


def pixel_accuracy(seg_labels, ref_labels, mask=None) -> float:
    seg = np.asarray(seg_labels.labels if isinstance(seg_labels, LabelMap) else seg_labels)
    ref = np.asarray(ref_labels.labels if isinstance(ref_labels, LabelMap) else ref_labels)
    hit = seg == ref
    if mask is not None:
        hit = hit[np.asarray(mask, dtype=bool)]
    return float(hit.mean())


# -- CSV --------------------------------------------------------------------

def report_columns(n_classes: int) -> list[str]:
    return ["extractor"] + [f"texture_{k + 1}" for k in range(n_classes)] + ["total", "accuracy", "missing"]


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else repr(float(v))


def write_report_csv(path, reports: dict[str, QualityReport | None], n_classes: int | None = None) -> None:
    """One row per extractor; a ``None`` report (failed extractor) gives an empty row."""
    if n_classes is None:
        n_classes = max((r.num_classes for r in reports.values() if r is not None), default=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(report_columns(n_classes))
        for name, rep in reports.items():
            if rep is None:
                w.writerow([name] + [""] * (n_classes + 2) + ["failed"])
                continue
            w.writerow([name] + [_fmt(v) for v in rep.row()] + [" ".join(str(m + 1) for m in rep.missing)])


def read_report_csv(path) -> dict[str, dict]:
    """Parse a file written by :func:`write_report_csv`."""
    out: dict[str, dict] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "extractor" or header[-3:] != ["total", "accuracy", "missing"]:
            raise DataError(f"{path}: not a texseg report")
        n = len(header) - 4
        for row in reader:
            if row[-1] == "failed":
                out[row[0]] = {"failed": True}
                continue
            vals = [float(v) for v in row[1:-1]]
            out[row[0]] = {
                "per_texture": vals[:n],
                "total": vals[n],
                "accuracy": vals[n + 1],
                "missing": [int(m) - 1 for m in row[-1].split()],
                "failed": False,
            }
    return out


def format_report(name: str, rep: QualityReport) -> str:
    lines = [f"{name}: total Bhattacharyya distance {rep.total_distance:.4g}, "
             f"pixel accuracy {rep.pixel_accuracy:.4f}"]
    for c in sorted(rep.per_texture):
        v = rep.per_texture[c]
        lines.append(f"  texture {c + 1}: " + ("missing" if math.isnan(v) else f"{v:.4g}"))
    return "\n".join(lines)
