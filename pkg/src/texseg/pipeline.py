"""Train / segment / compare drivers shared by the CLI and the demo scripts."""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import gabor, glcm, gmrf, rlm
from .classifier import CHUNK, DEFAULT_RIDGE, TrainedSegmenter, load_model, save_model, train
from .errors import DataError, TexsegError
from .image import (GrayImage, LabelMap, WindowSpec, load_image, load_label_map, save_image,
                    save_label_map, save_label_png, window_centers)
from .mosaic import MosaicSpec, mosaic_to_dict, reference_images, synthesize_mosaic
from .quality import QualityReport, format_report, quality_report, write_report_csv

log = logging.getLogger(__name__)

EXTRACTORS = ("glcm", "rlm", "gmrf", "gabor")
DIMS = {"glcm": 32, "rlm": 20, "gmrf": 7, "gabor": 20}


def column_names(extractor: str) -> list[str]:
    return {"glcm": glcm.column_names, "rlm": rlm.column_names,
            "gmrf": gmrf.column_names, "gabor": gabor.column_names}[extractor]()


def extract_features(img: GrayImage, extractor: str, spec: WindowSpec) -> np.ndarray:
    """Feature vector of every window position, shape ``(n_rows, n_cols, D)``."""
    if extractor == "glcm":
        return glcm.glcm_feature_image(img.pixels, img.levels, spec)
    if extractor == "rlm":
        return rlm.rlm_feature_image(img.pixels, img.levels, spec)
    if extractor == "gmrf":
        return gmrf.gmrf_feature_image(img.intensity, spec, ridge=True)
    if extractor == "gabor":
        bank = gabor.build_bank(min(img.shape))
        return gabor.gabor_feature_image(gabor.apply_bank(img.intensity, bank), spec)
    raise DataError(f"unknown extractor {extractor!r}; choose from {', '.join(EXTRACTORS)}")


@dataclass(frozen=True)
class RunConfig:
    extractor: str = "all"
    window: WindowSpec = WindowSpec(32, 1, "mirror")
    train_step: int = 8
    levels: int = 32
    diagonal: bool = False
    ridge: float = DEFAULT_RIDGE
    seed: int = 0
    workers: int = 1
    training: tuple[tuple[str, int], ...] = ()
    target: str | None = None
    truth: str | None = None
    mosaic: MosaicSpec | None = None
    out_dir: str | None = None
    write_png: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def extractors(self) -> tuple[str, ...]:
        if self.extractor == "all":
            return EXTRACTORS
        if self.extractor not in EXTRACTORS:
            raise DataError(f"unknown extractor {self.extractor!r}")
        return (self.extractor,)

    def validate(self) -> None:
        self.extractors  # noqa: B018 - raises on bad names
        if self.levels < 2:
            raise DataError("levels must be >= 2")
        if self.workers < 1:
            raise DataError("workers must be >= 1")
        if self.mosaic is None:
            if len({c for _, c in self.training}) < 2:
                raise DataError("training needs reference images for at least two classes")
            for path, c in self.training:
                if not os.path.isfile(path):
                    raise DataError(f"training image for class {c} not found: {path}")

    def to_dict(self) -> dict:
        return {
            "extractor": self.extractor,
            "window_size": self.window.size,
            "step": self.window.step,
            "padding": self.window.padding,
            "train_step": self.train_step,
            "levels": self.levels,
            "diagonal_covariance": self.diagonal,
            "ridge": self.ridge,
            "seed": self.seed,
            "training": [{"class": c, "image": p} for p, c in self.training],
            "target": self.target,
            "truth": self.truth,
            "mosaic": None if self.mosaic is None else mosaic_to_dict(self.mosaic),
        }


def _model_metadata(extractor: str, img_levels: int, cfg: RunConfig) -> dict:
    return {"extractor": extractor, "levels": img_levels, "window_size": cfg.window.size,
            "train_step": cfg.train_step}


def train_segmenter(references: dict[int, list[GrayImage]], extractor: str, cfg: RunConfig) -> TrainedSegmenter:
    """Fit a segmenter from pure single-texture reference images.

    Training windows are taken without padding at stride ``cfg.train_step``.
    """
    spec = WindowSpec(cfg.window.size, cfg.train_step, None)
    X, y = [], []
    for class_id in sorted(references):
        for img in references[class_id]:
            if img.levels != cfg.levels:
                raise DataError(f"class {class_id}: reference quantized to {img.levels} levels, expected {cfg.levels}")
            if min(img.shape) < spec.size:
                raise DataError(
                    f"class {class_id}: reference image {img.width}x{img.height} is smaller than the "
                    f"{spec.size}x{spec.size} window")
            try:
                feats = extract_features(img, extractor, spec)
            except TexsegError as exc:
                raise type(exc)(f"class {class_id}, extractor {extractor}: {exc}") from exc
            X.append(feats.reshape(-1, feats.shape[-1]))
            y.append(np.full(X[-1].shape[0], class_id))
    return train(np.concatenate(X), np.concatenate(y), extractor=extractor, diagonal=cfg.diagonal,
                 ridge=cfg.ridge, metadata=_model_metadata(extractor, cfg.levels, cfg))


def check_compatible(seg: TrainedSegmenter, extractor: str, cfg: RunConfig) -> None:
    md = seg.metadata
    if seg.extractor != extractor:
        raise DataError(f"model was trained with extractor {seg.extractor!r}, not {extractor!r}")
    if seg.dim != DIMS[extractor]:
        raise DataError(f"model dimension {seg.dim} does not match extractor {extractor} ({DIMS[extractor]})")
    for key, want in (("levels", cfg.levels), ("window_size", cfg.window.size)):
        if key in md and md[key] != want:
            raise DataError(f"model {key}={md[key]} but this run uses {key}={want}")


def predict_parallel(seg: TrainedSegmenter, X: np.ndarray, workers: int = 1) -> np.ndarray:
    """Labels for the rows of ``X``; blocks are CHUNK-aligned so output is independent of ``workers``."""
    n = X.shape[0]
    block = CHUNK * max(1, -(-n // (CHUNK * workers * 4)))
    starts = range(0, n, block)
    if workers == 1:
        parts = [seg.predict(X[s:s + block]) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: seg.predict(X[s:s + block]), starts))
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def segment_image(img: GrayImage, seg: TrainedSegmenter, cfg: RunConfig,
                  extractor: str | None = None) -> tuple[LabelMap, np.ndarray]:
    """Label every pixel; returns the label map and the per-pixel feature image.

    With ``cfg.window.step > 1`` windows are classified on a coarse grid and
    each pixel takes the label of the nearest window centre.
    """
    extractor = extractor or seg.extractor
    check_compatible(seg, extractor, cfg)
    if img.levels != cfg.levels:
        raise DataError(f"image quantized to {img.levels} levels but the run uses {cfg.levels}")
    spec = cfg.window
    feats = extract_features(img, extractor, spec)
    nr, nc, d = feats.shape
    labels = predict_parallel(seg, feats.reshape(-1, d), cfg.workers).reshape(nr, nc)
    n_classes = max(seg.class_ids) + 1
    if spec.step == 1 and (nr, nc) == img.shape:
        return LabelMap(labels, n_classes), feats
    rc, cc = window_centers(img.shape, spec)
    ri = np.clip(np.searchsorted(rc, np.arange(img.height) - spec.step / 2), 0, nr - 1)
    ci = np.clip(np.searchsorted(cc, np.arange(img.width) - spec.step / 2), 0, nc - 1)
    return LabelMap(labels[np.ix_(ri, ci)], n_classes), feats[np.ix_(ri, ci)]


@dataclass
class ExtractorResult:
    extractor: str
    labels: LabelMap | None
    report: QualityReport | None
    seconds: dict[str, float]
    error: str | None = None


def _load_training(cfg: RunConfig) -> dict[int, list[GrayImage]]:
    refs: dict[int, list[GrayImage]] = {}
    if cfg.mosaic is not None:
        for c, img in reference_images(cfg.mosaic).items():
            refs[c] = [img]
        return refs
    for path, c in cfg.training:
        try:
            refs.setdefault(c, []).append(load_image(path, cfg.levels))
        except DataError as exc:
            raise DataError(f"class {c}: {exc}") from exc
    return refs


def _load_target(cfg: RunConfig) -> tuple[GrayImage, LabelMap | None]:
    if cfg.mosaic is not None:
        return synthesize_mosaic(cfg.mosaic)
    if cfg.target is None:
        raise DataError("no target image given")
    img = load_image(cfg.target, cfg.levels)
    truth = load_label_map(cfg.truth) if cfg.truth else None
    if truth is not None and truth.shape != img.shape:
        raise DataError("ground-truth label map and target image differ in size")
    return img, truth


def run_extractor(extractor: str, refs, img: GrayImage, truth: LabelMap | None,
                  cfg: RunConfig) -> ExtractorResult:
    seconds = {}
    t0 = time.perf_counter()
    seg = train_segmenter(refs, extractor, cfg)
    seconds["train"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    labels, feats = segment_image(img, seg, cfg, extractor)
    seconds["segment"] = time.perf_counter() - t0
    report = None
    if truth is not None:
        if labels.num_classes != truth.num_classes:
            labels = LabelMap(labels.labels, max(labels.num_classes, truth.num_classes))
        report = quality_report(labels, truth, feats, feats, ridge=cfg.ridge)
    return ExtractorResult(extractor, labels, report, seconds)


def _write_outputs(out_dir: str, results: list[ExtractorResult], cfg: RunConfig, n_classes: int) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for res in results:
        if res.labels is None:
            continue
        save_label_map(os.path.join(out_dir, f"labels_{res.extractor}.pgm"), res.labels)
        if cfg.write_png:
            save_label_png(os.path.join(out_dir, f"labels_{res.extractor}.png"), res.labels)
        if res.report is not None:
            write_report_csv(os.path.join(out_dir, f"report_{res.extractor}.csv"),
                             {res.extractor: res.report}, n_classes)
    with open(os.path.join(out_dir, "run_config_echo.json"), "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    # wall-clock numbers vary run to run; kept apart from the deterministic outputs
    with open(os.path.join(out_dir, "timings.txt"), "w") as fh:
        for res in results:
            parts = " ".join(f"{k}={v:.3f}s" for k, v in res.seconds.items())
            fh.write(f"{res.extractor} {parts}\n")


def compare(cfg: RunConfig) -> list[ExtractorResult]:
    """Train and segment with each requested extractor on the same data.

    A failing extractor is logged and reported as failed; the others still run.
    Writes label maps, per-extractor reports, ``comparison.csv`` and the
    config echo when ``cfg.out_dir`` is set.
    """
    cfg.validate()
    refs = _load_training(cfg)
    img, truth = _load_target(cfg)
    results = []
    for extractor in cfg.extractors:
        try:
            res = run_extractor(extractor, refs, img, truth, cfg)
        except (TexsegError, np.linalg.LinAlgError) as exc:
            log.error("extractor %s failed: %s", extractor, exc)
            res = ExtractorResult(extractor, None, None, {}, error=str(exc))
        else:
            if res.report is not None:
                log.info("%s", format_report(extractor, res.report))
        results.append(res)
    n_classes = truth.num_classes if truth is not None else max(refs) + 1
    if cfg.out_dir:
        _write_outputs(cfg.out_dir, results, cfg, n_classes)
        if truth is not None:
            write_report_csv(os.path.join(cfg.out_dir, "comparison.csv"),
                             {r.extractor: r.report for r in results}, n_classes)
    return results


def compare_mosaics(mosaics: dict[str, MosaicSpec], cfg: RunConfig) -> dict[str, list[ExtractorResult]]:
    """Run :func:`compare` on several mosaics and write a ``trend.csv`` summary.

    Each mosaic gets its own sub-directory of ``cfg.out_dir``.
    """
    out = {}
    for name, spec in mosaics.items():
        sub = os.path.join(cfg.out_dir, name) if cfg.out_dir else None
        out[name] = compare(replace(cfg, mosaic=spec, out_dir=sub))
    if cfg.out_dir:
        os.makedirs(cfg.out_dir, exist_ok=True)
        with open(os.path.join(cfg.out_dir, "trend.csv"), "w") as fh:
            fh.write("mosaic,textures,extractor,total,accuracy\n")
            for name, results in out.items():
                k = mosaics[name].num_classes
                for r in results:
                    if r.report is None:
                        fh.write(f"{name},{k},{r.extractor},,\n")
                    else:
                        fh.write(f"{name},{k},{r.extractor},{r.report.total_distance!r},"
                                 f"{r.report.pixel_accuracy!r}\n")
    return out


def write_synthetic(spec: MosaicSpec, out_dir: str) -> dict[str, str]:
    """Write a mosaic, its truth map and one reference image per class."""
    os.makedirs(out_dir, exist_ok=True)
    img, truth = synthesize_mosaic(spec)
    paths = {"mosaic": os.path.join(out_dir, "mosaic.pgm"), "truth": os.path.join(out_dir, "truth.pgm")}
    save_image(paths["mosaic"], img)
    save_label_map(paths["truth"], truth)
    save_label_png(os.path.join(out_dir, "truth.png"), truth)
    for c, ref in reference_images(spec).items():
        paths[f"reference_{c}"] = os.path.join(out_dir, f"reference_{c}.pgm")
        save_image(paths[f"reference_{c}"], ref)
    with open(os.path.join(out_dir, "mosaic.json"), "w") as fh:
        json.dump(mosaic_to_dict(spec), fh, indent=1)
        fh.write("\n")
    return paths


__all__ = [
    "EXTRACTORS", "DIMS", "RunConfig", "extract_features", "train_segmenter", "segment_image",
    "compare", "compare_mosaics", "write_synthetic", "check_compatible", "predict_parallel",
    "save_model", "load_model", "ExtractorResult", "run_extractor",
]
