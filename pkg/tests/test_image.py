import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp
from PIL import Image

from texseg.errors import DataError
from texseg.image import (GrayImage, LabelMap, WindowSpec, boundary_mask, integral_image, load_image,
                          load_label_map, quantize, read_pgm, rect_sums, requantize, save_image,
                          save_label_map, save_label_png, window_centers, window_count, window_means,
                          window_origins, windows, write_pgm)


def _pgm(tmp_path, values, maxval=255, plain=False, name="img.pgm"):
    path = tmp_path / name
    write_pgm(path, np.asarray(values), maxval=maxval, plain=plain)
    return path


@pytest.mark.parametrize("plain", [False, True])
def test_load_quantization_examples(tmp_path, plain):
    assert (load_image(_pgm(tmp_path, np.full((4, 5), 255), plain=plain), 32).pixels == 31).all()
    assert (load_image(_pgm(tmp_path, np.zeros((4, 5), int), plain=plain), 32).pixels == 0).all()
    assert (load_image(_pgm(tmp_path, np.full((3, 3), 128), plain=plain), 32).pixels == 16).all()


def test_load_records_metadata(tmp_path):
    img = load_image(_pgm(tmp_path, [[0, 255], [51, 102]]), 8)
    assert img.levels == 8 and img.source_maxval == 255 and img.shape == (2, 2)
    np.testing.assert_allclose(img.intensity, [[0, 1], [0.2, 0.4]])


def test_sixteen_bit_pgm(tmp_path):
    vals = np.array([[0, 65535], [32768, 1000]])
    path = _pgm(tmp_path, vals, maxval=65535)
    back, maxval = read_pgm(path)
    assert maxval == 65535 and (back == vals).all()
    assert load_image(path, 32).pixels.tolist() == [[0, 31], [16, 0]]


def test_png_input(tmp_path):
    arr = np.array([[0, 128], [255, 64]], dtype=np.uint8)
    Image.fromarray(arr, mode="L").save(tmp_path / "a.png")
    assert load_image(tmp_path / "a.png", 32).pixels.tolist() == [[0, 16], [31, 8]]
    Image.fromarray(np.zeros((2, 2, 3), np.uint8), mode="RGB").save(tmp_path / "rgb.png")
    with pytest.raises(DataError):
        load_image(tmp_path / "rgb.png")


def test_load_errors(tmp_path):
    with pytest.raises(DataError):
        load_image(tmp_path / "missing.pgm")
    (tmp_path / "junk.pgm").write_bytes(b"hello world")
    with pytest.raises(DataError):
        load_image(tmp_path / "junk.pgm")
    (tmp_path / "short.pgm").write_bytes(b"P5\n4 4\n255\n\x00\x01")
    with pytest.raises(DataError):
        load_image(tmp_path / "short.pgm")
    with pytest.raises(DataError):
        load_image(_pgm(tmp_path, [[1, 2]]), levels=1)


def test_pgm_comments_are_skipped(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P2\n# a comment\n2 1\n# another\n255\n0 255\n")
    assert read_pgm(path)[0].tolist() == [[0, 255]]


@given(hnp.arrays(np.int64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=st.integers(0, 255)),
       st.booleans())
def test_pgm_round_trip(tmp_path_factory, values, plain):
    path = tmp_path_factory.mktemp("rt") / "x.pgm"
    write_pgm(path, values, maxval=255, plain=plain)
    back, maxval = read_pgm(path)
    assert maxval == 255 and (back == values).all()


@given(st.floats(0, 1), st.floats(0, 1), st.integers(2, 256))
def test_quantize_monotone(a, b, levels):
    lo, hi = sorted((a, b))
    assert quantize(lo, levels) <= quantize(hi, levels)


@given(st.integers(0, 254), st.integers(2, 64))
def test_requantize_monotone_and_bounded(v, levels):
    q1, q2 = requantize(v, 255, levels), requantize(v + 1, 255, levels)
    assert 0 <= q1 <= q2 <= levels - 1


def test_gray_image_invariants():
    with pytest.raises(DataError):
        GrayImage(np.array([[0, 32]]), 32)
    with pytest.raises(DataError):
        GrayImage(np.array([[0, 1]]), 1)
    with pytest.raises(DataError):
        GrayImage(np.zeros((0, 3), int), 4)
    img = GrayImage(np.array([[0, 3]]), 4)
    assert img.width == 2 and img.height == 1
    with pytest.raises(ValueError):
        img.pixels[0, 0] = 1
    g = GrayImage.from_intensity(np.array([[-0.5, 0.5, 1.5]]), 32)
    assert g.pixels.tolist() == [[0, 16, 31]]


def test_label_map_invariants():
    with pytest.raises(DataError):
        LabelMap(np.array([[0, 2]]), 2)
    lm = LabelMap(np.array([[0, 1]]), 2)
    assert lm.shape == (1, 2)


def test_window_spec_validation():
    with pytest.raises(DataError):
        WindowSpec(2)
    with pytest.raises(DataError):
        WindowSpec(5, 0)
    with pytest.raises(DataError):
        WindowSpec(5, 1, "wrap")
    assert WindowSpec(32).is_even and not WindowSpec(33).is_even


def test_window_count_examples():
    assert window_count((256, 256), WindowSpec(32, 32, None)) == 64
    assert window_count((256, 256), WindowSpec(32, 1, "clamp")) == 65536
    assert window_count((5, 5), WindowSpec(3, 1, None)) == 9
    with pytest.raises(DataError):
        window_count((5, 5), WindowSpec(6, 1, None))


@given(st.integers(3, 40), st.integers(3, 40), st.integers(3, 12), st.integers(1, 7),
       st.sampled_from([None, "mirror", "clamp"]))
def test_window_count_formula(h, w, size, step, padding):
    spec = WindowSpec(size, step, padding)
    hp, wp = h + spec.pad_before + spec.pad_after, w + spec.pad_before + spec.pad_after
    if size > min(hp, wp):
        return
    expect = -(-(hp - size + 1) // step) * -(-(wp - size + 1) // step)
    assert window_count((h, w), spec) == expect
    assert sum(1 for _ in windows(np.zeros((h, w)), spec)) == expect


def test_windows_centered_on_every_pixel_with_padding():
    img = np.arange(36).reshape(6, 6)
    for padding in ("mirror", "clamp"):
        for size in (3, 4):
            spec = WindowSpec(size, 1, padding)
            centres = [rc for rc, _ in windows(img, spec)]
            assert centres == [(r, c) for r in range(6) for c in range(6)]
            for (r, c), view in windows(img, spec):
                assert view[size // 2, size // 2] == img[r, c]


def test_window_padding_values():
    img = np.arange(5)[None, :].repeat(5, axis=0)
    (_, first), *_ = windows(img, WindowSpec(5, 1, "mirror"))
    assert first[0].tolist() == [2, 1, 0, 1, 2]
    (_, first), *_ = windows(img, WindowSpec(5, 1, "clamp"))
    assert first[0].tolist() == [0, 0, 0, 1, 2]


def test_window_views_are_read_only():
    for _, view in windows(np.zeros((5, 5)), WindowSpec(3, 1, None)):
        with pytest.raises(ValueError):
            view[0, 0] = 1
        break


def test_window_centers_unpadded():
    rows, cols = window_centers((10, 10), WindowSpec(4, 2, None))
    assert rows.tolist() == [2, 4, 6, 8] and cols.tolist() == rows.tolist()
    assert window_origins((10, 10), WindowSpec(4, 3, "mirror"))[0].tolist() == [0, 3, 6, 9]


@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9)), elements=st.floats(-5, 5)))
def test_integral_image_rect_sums(a):
    t = integral_image(a)
    h, w = a.shape
    rows, cols = np.arange(h), np.arange(w)
    ones = rect_sums(t, rows[: h], cols[: w], 1, 1)
    np.testing.assert_allclose(ones, a, atol=1e-9)
    np.testing.assert_allclose(rect_sums(t, np.array([0]), np.array([0]), h, w)[0, 0], a.sum(), atol=1e-9)


def test_window_means_match_direct(rng):
    a = rng.random((12, 9))
    spec = WindowSpec(4, 1, "mirror")
    dense = window_means(a, spec)
    direct = np.array([[v.mean() for _, v in row] for row in
                       [list(windows(a, spec))[i * 9:(i + 1) * 9] for i in range(12)]])
    np.testing.assert_allclose(dense, direct, atol=1e-12)


def test_boundary_mask():
    lab = np.zeros((10, 10), int)
    lab[:, 5:] = 1
    m = boundary_mask(lab, 2)
    assert m[:, 3:7].all() and not m[:, :3].any() and not m[:, 7:].any()


def test_label_map_io(tmp_path):
    lm = LabelMap(np.array([[0, 1, 2], [2, 1, 0]]), 3)
    save_label_map(tmp_path / "l.pgm", lm)
    back = load_label_map(tmp_path / "l.pgm")
    assert (back.labels == lm.labels).all() and back.num_classes == 3
    save_label_png(tmp_path / "l.png", lm)
    with Image.open(tmp_path / "l.png") as im:
        assert im.mode == "P" and np.asarray(im).tolist() == lm.labels.tolist()


def test_save_image_round_trip(tmp_path):
    img = GrayImage.from_intensity(np.linspace(0, 1, 20).reshape(4, 5), 32)
    save_image(tmp_path / "i.pgm", img)
    assert (load_image(tmp_path / "i.pgm", 32).pixels == img.pixels).all()
