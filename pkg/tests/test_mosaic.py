import numpy as np
import pytest

from texseg.errors import DataError
from texseg.gmrf import estimate_gmrf
from texseg.mosaic import (PRESETS, Checkerboard, GaussianNoise, GmrfTexture, MosaicSpec, Region, Sinusoid,
                           bands, gmrf_spectrum, grid, mosaic_from_dict, mosaic_to_dict, preset_mosaic,
                           reference_images, sample_gmrf, synthesize_mosaic)


def test_orthogonal_grating_bands():
    spec = MosaicSpec(256, 256, bands((Sinusoid(0.1, 0.0), Sinusoid(0.1, 90.0)), 256, 256), seed=3)
    img, truth = synthesize_mosaic(spec)
    assert (truth.labels[:, :128] == 0).all() and (truth.labels[:, 128:] == 1).all()
    left, right = img.intensity[:, :128], img.intensity[:, 128:]
    # 0 deg stripes vary along columns only, 90 deg along rows only
    assert np.ptp(left, axis=0).max() < 1e-12 and np.ptp(left, axis=1).min() > 0.5
    assert np.ptp(right, axis=1).max() < 1e-12 and np.ptp(right, axis=0).min() > 0.5


def test_zero_variance_noise_is_constant():
    tex = GaussianNoise(0.5, 0.0).render((16, 16), np.random.default_rng(0))
    from texseg.image import GrayImage
    img = GrayImage.from_intensity(tex, 32)
    assert (img.pixels == 16).all()


def test_gmrf_generator_closed_loop():
    alpha = (0.2, 0.2, 0, 0, 0, 0)
    field = sample_gmrf((128, 128), alpha, 1.0, np.random.default_rng(7))
    est = estimate_gmrf(field)
    assert np.abs(est.alpha - alpha).max() < 0.05
    assert abs(est.sigma2 - 1.0) < 0.1


def test_gmrf_unstable_parameters_rejected():
    with pytest.raises(DataError):
        sample_gmrf((16, 16), (0.5, 0.5, 0, 0, 0, 0), 1.0, np.random.default_rng(0))
    assert gmrf_spectrum((8, 8), (0, 0, 0, 0, 0, 0)).min() == 1.0


@pytest.mark.parametrize("name", PRESETS)
def test_presets_partition_and_are_reproducible(name):
    spec = preset_mosaic(name, seed=11, size=128)
    img1, lab1 = synthesize_mosaic(spec)
    img2, lab2 = synthesize_mosaic(spec)
    assert (img1.intensity == img2.intensity).all() and (lab1.labels == lab2.labels).all()
    counts = np.bincount(lab1.labels.ravel(), minlength=spec.num_classes)
    areas = [(r.rows[1] - r.rows[0]) * (r.cols[1] - r.cols[0]) for r in spec.regions]
    assert counts.sum() == sum(areas) == 128 * 128
    assert (counts > 0).all()


def test_seed_changes_output():
    a, _ = synthesize_mosaic(preset_mosaic("five", seed=1, size=64))
    b, _ = synthesize_mosaic(preset_mosaic("five", seed=2, size=64))
    assert not np.array_equal(a.intensity, b.intensity)


def test_region_pixels_come_from_their_generator():
    gens = (Checkerboard(2, 0.25, 0.75), GaussianNoise(0.5, 0.0))
    img, truth = synthesize_mosaic(MosaicSpec(8, 8, bands(gens, 8, 8, vertical=False)))
    assert set(np.unique(img.intensity[truth.labels == 0])) == {0.25, 0.75}
    assert (img.intensity[truth.labels == 1] == 0.5).all()


def test_invalid_tilings():
    g1, g2 = GaussianNoise(0.5, 0.1), GaussianNoise(0.5, 0.2)
    with pytest.raises(DataError, match="overlap"):
        MosaicSpec(4, 4, (Region((0, 4), (0, 3), g1), Region((0, 4), (2, 4), g2))).validate()
    with pytest.raises(DataError, match="gaps"):
        MosaicSpec(4, 4, (Region((0, 4), (0, 2), g1), Region((0, 4), (3, 4), g2))).validate()
    with pytest.raises(DataError, match="outside"):
        MosaicSpec(4, 4, (Region((0, 5), (0, 2), g1), Region((0, 4), (2, 4), g2))).validate()
    with pytest.raises(DataError, match="distinct"):
        MosaicSpec(4, 4, (Region((0, 4), (0, 2), g1), Region((0, 4), (2, 4), g1))).validate()


def test_shared_labels_and_grid():
    g1, g2 = GaussianNoise(0.5, 0.1), Checkerboard(2)
    regions = (Region((0, 2), (0, 4), g1, 0), Region((2, 4), (0, 4), g2, 1))
    spec = MosaicSpec(4, 4, regions)
    assert spec.num_classes == 2
    r = grid((g1, g2, g1), 9, 9, (1, 2))
    assert len(r) == 3 and r[0].cols == (0, 9)
    assert r[1].rows == r[2].rows and r[1].cols[1] == r[2].cols[0]
    with pytest.raises(DataError):
        grid((g1, g2), 9, 9, (1, 2))


def test_reference_images_independent_of_mosaic():
    spec = preset_mosaic("two", seed=5, size=64)
    img, truth = synthesize_mosaic(spec)
    refs = reference_images(spec)
    assert sorted(refs) == [0, 1]
    assert refs[1].shape == (64, 64)
    assert not np.array_equal(refs[1].intensity[truth.labels == 1], img.intensity[truth.labels == 1])
    assert reference_images(spec, (40, 50))[0].shape == (40, 50)


def test_serialization_round_trip():
    spec = MosaicSpec(32, 32, grid((Sinusoid(0.1, 45.0, phase=0.3), GaussianNoise(0.4, 0.1),
                                    Checkerboard(3), GmrfTexture((0.1, 0.1, 0, 0, 0, 0), 0.1)), 32, 32, (2, 2)),
                      seed=9, levels=16)
    back = mosaic_from_dict(mosaic_to_dict(spec))
    assert back == spec
    a, _ = synthesize_mosaic(spec)
    b, _ = synthesize_mosaic(back)
    assert np.array_equal(a.pixels, b.pixels)
    assert mosaic_from_dict({"preset": "five", "seed": 2, "size": 64}) == preset_mosaic("five", 2, 64)
    with pytest.raises(DataError):
        mosaic_from_dict({"regions": [{"generator": {"kind": "plasma"}}]})
    with pytest.raises(DataError):
        preset_mosaic("nat16")


def test_generator_parameter_errors():
    with pytest.raises(DataError):
        Sinusoid(0.7).render((4, 4), np.random.default_rng(0))
    with pytest.raises(DataError):
        GaussianNoise(0.5, -1).render((4, 4), np.random.default_rng(0))
    with pytest.raises(DataError):
        Checkerboard(0).render((4, 4), np.random.default_rng(0))
