import dataclasses

import numpy as np
import pytest

from texseg import pipeline
from texseg.classifier import CHUNK, train
from texseg.errors import DataError, SingularMatrixError
from texseg.image import GrayImage, WindowSpec, load_label_map, save_image
from texseg.mosaic import preset_mosaic, reference_images, synthesize_mosaic
from texseg.pipeline import (DIMS, EXTRACTORS, RunConfig, compare, compare_mosaics, extract_features,
                             predict_parallel, segment_image, train_segmenter, write_synthetic)
from texseg.quality import read_report_csv


@pytest.fixture(scope="module")
def five():
    spec = preset_mosaic("five", seed=4, size=128)
    refs = {c: [img] for c, img in reference_images(spec).items()}
    return spec, refs


@pytest.mark.parametrize("extractor", EXTRACTORS)
def test_feature_dimensions(extractor):
    img = GrayImage.from_intensity(np.random.default_rng(0).random((64, 70)), 32)
    f = extract_features(img, extractor, WindowSpec(16, 4, "mirror"))
    assert f.shape == (16, 18, DIMS[extractor]) and np.isfinite(f).all()
    assert len(pipeline.column_names(extractor)) == DIMS[extractor]


def test_unknown_extractor():
    img = GrayImage.from_intensity(np.zeros((64, 64)), 32)
    with pytest.raises(DataError):
        extract_features(img, "lbp", WindowSpec())
    with pytest.raises(DataError):
        RunConfig(extractor="lbp").extractors


def test_train_shapes(five):
    spec, refs = five
    cfg = RunConfig()
    g = train_segmenter(refs, "glcm", cfg)
    assert len(g.models) == 5 and g.dim == 32
    assert g.metadata == {"extractor": "glcm", "levels": 32, "window_size": 32, "train_step": 8}
    # (128 - 32) / 8 + 1 = 13 window positions per axis
    assert all(m.sample_count == 13 * 13 for m in g.models)
    two = {c: refs[c] for c in (0, 1)}
    gb = train_segmenter(two, "gabor", cfg)
    assert len(gb.models) == 2 and gb.dim == 20


def test_small_training_image_names_class(five):
    _, refs = five
    bad = dict(refs)
    bad[3] = [GrayImage.from_intensity(np.random.default_rng(0).random((20, 40)), 32)]
    with pytest.raises(DataError, match="class 3"):
        train_segmenter(bad, "rlm", RunConfig())
    bad[3] = [GrayImage.from_intensity(np.random.default_rng(0).random((64, 64)), 16)]
    with pytest.raises(DataError, match="class 3"):
        train_segmenter(bad, "rlm", RunConfig())


def test_module_errors_carry_context():
    flat = {0: [GrayImage.from_intensity(np.full((40, 40), 0.5), 32)],
            1: [GrayImage.from_intensity(np.random.default_rng(1).random((40, 40)), 32)]}
    seg = train_segmenter(flat, "gmrf", RunConfig())
    assert seg.dim == 7
    # a fully constant class collapses its covariance to the ridge floor but still trains
    assert np.linalg.eigvalsh(seg.models[0].sigma)[0] > 0


@pytest.fixture(scope="module")
def five_full():
    spec = preset_mosaic("five", seed=4, size=256)
    return spec, {c: [img] for c, img in reference_images(spec).items()}


@pytest.mark.parametrize("extractor", EXTRACTORS)
def test_self_segmentation(five_full, extractor):
    # default protocol: 256 x 256 references, stride 8 (about 800 windows per class)
    spec, refs = five_full
    cfg = RunConfig()
    seg = train_segmenter(refs, extractor, cfg)
    fresh = reference_images(dataclasses.replace(spec, seed=99))
    for c, img in fresh.items():
        labels, feats = segment_image(img, seg, cfg)
        assert labels.shape == img.shape and feats.shape == img.shape + (DIMS[extractor],)
        interior = labels.labels[16:-16, 16:-16]
        assert (interior == c).mean() >= 0.99, (extractor, c)


def test_segment_checks_compatibility(five):
    spec, refs = five
    cfg = RunConfig()
    seg = train_segmenter(refs, "rlm", cfg)
    img, _ = synthesize_mosaic(spec)
    with pytest.raises(DataError, match="extractor"):
        segment_image(img, seg, cfg, "glcm")
    with pytest.raises(DataError, match="window_size"):
        segment_image(img, seg, dataclasses.replace(cfg, window=WindowSpec(16)))
    with pytest.raises(DataError, match="levels"):
        segment_image(GrayImage.from_intensity(img.intensity, 16), seg, dataclasses.replace(cfg, levels=16))
    with pytest.raises(DataError, match="levels"):
        segment_image(GrayImage.from_intensity(img.intensity, 16), seg, cfg)


def test_coarse_step_mode(five):
    spec, refs = five
    seg = train_segmenter(refs, "gabor", RunConfig())
    img, truth = synthesize_mosaic(spec)
    fine, _ = segment_image(img, seg, RunConfig())
    coarse, feats = segment_image(img, seg, RunConfig(window=WindowSpec(32, 4, "mirror")))
    assert coarse.shape == img.shape and feats.shape[:2] == img.shape
    assert (coarse.labels == fine.labels).mean() > 0.95
    # pixels on the coarse grid keep their own window's label
    assert (coarse.labels[::4, ::4] == fine.labels[::4, ::4]).all()


def test_predict_parallel_worker_independent():
    rng = np.random.default_rng(2)
    seg = train(rng.random((90, 6)), np.repeat([0, 1, 2], 30))
    X = rng.random((3 * CHUNK + 123, 6))
    ref = predict_parallel(seg, X, 1)
    for w in (2, 3, 8):
        assert predict_parallel(seg, X, w).tobytes() == ref.tobytes()
    assert predict_parallel(seg, X[:0], 4).size == 0


def test_config_validation(tmp_path):
    with pytest.raises(DataError):
        RunConfig(training=(("a.pgm", 0),)).validate()
    with pytest.raises(DataError, match="not found"):
        RunConfig(training=((str(tmp_path / "a.pgm"), 0), (str(tmp_path / "b.pgm"), 1))).validate()
    with pytest.raises(DataError):
        RunConfig(workers=0, mosaic=preset_mosaic("two")).validate()
    with pytest.raises(DataError):
        RunConfig(levels=1, mosaic=preset_mosaic("two")).validate()


def test_compare_on_files(tmp_path):
    spec = preset_mosaic("two", seed=1, size=96)
    paths = write_synthetic(spec, tmp_path / "data")
    cfg = RunConfig(extractor="all", training=((paths["reference_0"], 0), (paths["reference_1"], 1)),
                    target=paths["mosaic"], truth=paths["truth"], out_dir=str(tmp_path / "out"))
    results = compare(cfg)
    assert [r.extractor for r in results] == list(EXTRACTORS)
    assert all(r.error is None and r.report is not None for r in results)
    out = tmp_path / "out"
    for e in EXTRACTORS:
        assert load_label_map(out / f"labels_{e}.pgm").shape == (96, 96)
        assert (out / f"labels_{e}.png").exists()
        assert read_report_csv(out / f"report_{e}.csv")[e]["failed"] is False
    table = read_report_csv(out / "comparison.csv")
    assert list(table) == list(EXTRACTORS)
    assert all(len(row["per_texture"]) == 2 for row in table.values())
    assert (out / "run_config_echo.json").exists() and (out / "timings.txt").exists()


def test_compare_without_truth(tmp_path):
    spec = preset_mosaic("two", seed=1, size=64)
    paths = write_synthetic(spec, tmp_path)
    cfg = RunConfig(extractor="glcm", training=((paths["reference_0"], 0), (paths["reference_1"], 1)),
                    target=paths["mosaic"], out_dir=str(tmp_path / "o"))
    (res,) = compare(cfg)
    assert res.report is None and res.labels is not None
    assert not (tmp_path / "o" / "comparison.csv").exists()


def test_compare_continues_after_failure(monkeypatch, tmp_path):
    real = pipeline.extract_features

    def flaky(img, extractor, spec):
        if extractor == "rlm":
            raise SingularMatrixError("synthetic failure")
        return real(img, extractor, spec)

    monkeypatch.setattr(pipeline, "extract_features", flaky)
    cfg = RunConfig(mosaic=preset_mosaic("two", size=64), out_dir=str(tmp_path))
    results = compare(cfg)
    failed = [r for r in results if r.error]
    assert [r.extractor for r in failed] == ["rlm"] and "synthetic failure" in failed[0].error
    assert all(r.report is not None for r in results if not r.error)
    assert read_report_csv(tmp_path / "comparison.csv")["rlm"] == {"failed": True}
    assert not (tmp_path / "labels_rlm.pgm").exists()


def test_compare_mosaics_trend(tmp_path):
    mosaics = {n: preset_mosaic(n, size=64) for n in ("two", "five")}
    out = compare_mosaics(mosaics, RunConfig(extractor="gabor", out_dir=str(tmp_path)))
    assert set(out) == {"two", "five"}
    lines = (tmp_path / "trend.csv").read_text().splitlines()
    assert lines[0] == "mosaic,textures,extractor,total,accuracy"
    assert lines[1].startswith("two,2,gabor,") and lines[2].startswith("five,5,gabor,")
    assert (tmp_path / "five" / "comparison.csv").exists()


def test_target_errors(tmp_path):
    spec = preset_mosaic("two", seed=1, size=64)
    paths = write_synthetic(spec, tmp_path)
    small = GrayImage.from_intensity(np.zeros((32, 32)), 32)
    save_image(tmp_path / "small.pgm", small)
    training = ((paths["reference_0"], 0), (paths["reference_1"], 1))
    with pytest.raises(DataError, match="differ in size"):
        compare(RunConfig(extractor="glcm", training=training, target=paths["mosaic"],
                          truth=str(tmp_path / "small.pgm")))
    with pytest.raises(DataError, match="no target"):
        compare(RunConfig(extractor="glcm", training=training))
