"""Gaussian Bayes classifier for texture feature vectors.

Each class gets a multivariate normal density (full covariance by default,
diagonal on request).  Priors are equal, so a sample goes to the class with the
largest log-density; ties go to the lowest class id.  Features are z-scored
with statistics from the whole training set before the class densities are
fitted, which makes decisions invariant to any per-dimension affine rescaling
of the inputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import DataError, SingularMatrixError

DEFAULT_RIDGE = 1e-6
MODEL_FORMAT = "texseg-model"
MODEL_VERSION = 1
CHUNK = 4096


def regularize(cov: np.ndarray, ridge: float = DEFAULT_RIDGE) -> np.ndarray:
    """Add ``ridge * mean(diag(cov))`` to the diagonal (``ridge`` itself if that is 0)."""
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    lam = ridge * float(np.mean(np.diag(cov)))
    if lam <= 0:
        lam = ridge
    return cov + lam * np.eye(cov.shape[0])


def _cholesky(sigma: np.ndarray) -> np.ndarray:
    try:
        return linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularMatrixError("covariance matrix is not positive definite") from exc


@dataclass(frozen=True, eq=False)
class ClassModel:
    class_id: int
    mu: np.ndarray
    sigma: np.ndarray
    sigma_inv: np.ndarray
    log_det_sigma: float
    sample_count: int
    chol: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @classmethod
    def from_moments(cls, class_id: int, mu, sigma, sample_count: int = 0) -> "ClassModel":
        """Model with the given mean and covariance, used as-is (no regularization)."""
        mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
        sigma = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
        if sigma.shape != (mu.size, mu.size):
            raise DataError("covariance shape does not match the mean")
        if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12 * max(1.0, np.abs(sigma).max())):
            raise DataError("covariance must be symmetric")
        L = _cholesky(sigma)
        inv = linalg.cho_solve((L, True), np.eye(mu.size))
        log_det = 2.0 * float(np.log(np.diag(L)).sum())
        return cls(int(class_id), mu, sigma, inv, log_det, int(sample_count), L)

    def log_density(self, X) -> np.ndarray:
        """``log N(x; mu, sigma)`` for each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        z = linalg.solve_triangular(self.chol, (X - self.mu).T, lower=True)
        maha = (z * z).sum(axis=0)
        return -0.5 * (self.dim * math.log(2 * math.pi) + self.log_det_sigma + maha)


@dataclass(frozen=True, eq=False)
class FeatureScaler:
    shift: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "FeatureScaler":
        X = np.asarray(X, dtype=np.float64)
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 0, std, 1.0))

    @classmethod
    def identity(cls, dim: int) -> "FeatureScaler":
        return cls(np.zeros(dim), np.ones(dim))

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.shift) / self.scale


@dataclass(frozen=True, eq=False)
class TrainedSegmenter:
    models: tuple[ClassModel, ...]
    scaler: FeatureScaler
    extractor: str | None = None
    diagonal: bool = False
    ridge: float = DEFAULT_RIDGE
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.models) < 2:
            raise DataError("a segmenter needs at least two classes")
        if len({m.dim for m in self.models}) != 1:
            raise DataError("all class models must share one feature dimension")
        object.__setattr__(self, "models", tuple(sorted(self.models, key=lambda m: m.class_id)))

    @property
    def dim(self) -> int:
        return self.models[0].dim

    @property
    def class_ids(self) -> list[int]:
        return [m.class_id for m in self.models]

    def log_scores(self, X) -> np.ndarray:
        """Per-class log-densities of scaled features, shape ``(n, n_classes)``.

        Evaluated in fixed-size row chunks so that results do not depend on
        how callers batch their rows.
        """
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise DataError(f"feature dimension {X.shape[1]} does not match model dimension {self.dim}")
        if not np.isfinite(X).all():
            raise DataError("features contain non-finite values")
        Z = self.scaler.transform(X)
        out = np.empty((Z.shape[0], len(self.models)))
        for start in range(0, Z.shape[0], CHUNK):
            block = Z[start:start + CHUNK]
            for k, m in enumerate(self.models):
                out[start:start + CHUNK, k] = m.log_density(block)
        return out

    def predict(self, X) -> np.ndarray:
        scores = self.log_scores(X)
        ids = np.array(self.class_ids)
        return ids[np.argmax(scores, axis=1)]


def train(features, labels, extractor: str | None = None, diagonal: bool = False,
          ridge: float = DEFAULT_RIDGE, metadata: dict | None = None) -> TrainedSegmenter:
    """Fit one Gaussian per class on z-scored features.

    ``features`` is ``(n, D)``; ``labels`` holds the class id of each row.
    Covariances use the ``n - 1`` denominator and are regularized with
    :func:`regularize`.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(labels).astype(np.int64).ravel()
    if X.shape[0] != y.shape[0]:
        raise DataError("features and labels differ in length")
    if not np.isfinite(X).all():
        raise DataError("training features contain non-finite values")
    classes = np.unique(y)
    if classes.size < 2:
        raise DataError("training needs at least two classes")
    scaler = FeatureScaler.fit(X)
    Z = scaler.transform(X)
    models = []
    for c in classes:
        Zc = Z[y == c]
        if Zc.shape[0] < 2:
            raise DataError(f"class {c} has {Zc.shape[0]} training sample(s); at least 2 are required")
        mu = Zc.mean(axis=0)
        cov = np.cov(Zc, rowvar=False, ddof=1).reshape(Z.shape[1], Z.shape[1])
        if diagonal:
            cov = np.diag(np.diag(cov))
        models.append(ClassModel.from_moments(int(c), mu, regularize(cov, ridge), Zc.shape[0]))
    return TrainedSegmenter(tuple(models), scaler, extractor, diagonal, ridge, dict(metadata or {}))


def classify(x, segmenter: TrainedSegmenter) -> tuple[int, np.ndarray]:
    """Class id and per-class log-scores for a single feature vector."""
    x = np.asarray(x, dtype=np.float64).ravel()
    scores = segmenter.log_scores(x[None, :])[0]
    return segmenter.class_ids[int(np.argmax(scores))], scores


def unscaled_means(segmenter: TrainedSegmenter) -> list[np.ndarray]:
    """Class means mapped back to the original feature units."""
    return [m.mu * segmenter.scaler.scale + segmenter.scaler.shift for m in segmenter.models]


# -- persistence ------------------------------------------------------------

def segmenter_to_dict(seg: TrainedSegmenter) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "extractor": seg.extractor,
        "dim": seg.dim,
        "n_classes": len(seg.models),
        "diagonal": seg.diagonal,
        "ridge": seg.ridge,
        "metadata": seg.metadata,
        "scaler": {"shift": seg.scaler.shift.tolist(), "scale": seg.scaler.scale.tolist()},
        "classes": [
            {"class_id": m.class_id, "sample_count": m.sample_count,
             "mu": m.mu.tolist(), "sigma": m.sigma.tolist()}
            for m in seg.models
        ],
    }


def segmenter_from_dict(d: dict) -> TrainedSegmenter:
    if d.get("format") != MODEL_FORMAT:
        raise DataError("not a texseg model file")
    if d.get("version") != MODEL_VERSION:
        raise DataError(f"unsupported model version {d.get('version')}")
    models = tuple(ClassModel.from_moments(c["class_id"], c["mu"], c["sigma"], c["sample_count"])
                   for c in d["classes"])
    scaler = FeatureScaler(np.array(d["scaler"]["shift"], dtype=np.float64),
                           np.array(d["scaler"]["scale"], dtype=np.float64))
    seg = TrainedSegmenter(models, scaler, d.get("extractor"), bool(d.get("diagonal", False)),
                           float(d.get("ridge", DEFAULT_RIDGE)), dict(d.get("metadata") or {}))
    if seg.dim != d["dim"] or len(seg.models) != d["n_classes"]:
        raise DataError("model file header disagrees with its contents")
    return seg


def save_model(path, seg: TrainedSegmenter) -> None:
    with open(path, "w") as fh:
        json.dump(segmenter_to_dict(seg), fh, indent=1)
        fh.write("\n")


def load_model(path) -> TrainedSegmenter:
    try:
        with open(path) as fh:
            return segmenter_from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: cannot read model: {exc}") from exc


def samples_to_arrays(samples: Sequence[tuple[Sequence[float], int]]) -> tuple[np.ndarray, np.ndarray]:
    """Split ``[(feature_vector, class_id), ...]`` into ``(X, y)``."""
    if not samples:
        raise DataError("no training samples")
    X = np.array([np.asarray(v, dtype=np.float64) for v, _ in samples])
    y = np.array([c for _, c in samples], dtype=np.int64)
    return X, y
