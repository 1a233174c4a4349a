import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from drscreen.imaging import (
    AugmentConfig,
    CropBoundsError,
    CropRect,
    ImageDecodeError,
    augment,
    decode_image,
    flip,
    normalize,
    preprocess_for_inference,
    random_zoom,
    resize_bilinear,
    square_crop,
)
from conftest import encode_png, random_rgb


class TestDecode:
    def test_png_round_trip(self):
        arr = np.array([[[1, 2, 3], [4, 5, 6]], [[7, 8, 9], [10, 11, 12]]],
                       dtype=np.uint8)
        assert np.array_equal(decode_image(encode_png(arr)), arr)

    def test_truncated_bytes(self):
        data = encode_png(random_rgb(np.random.default_rng(0), 8, 8))
        with pytest.raises(ImageDecodeError):
            decode_image(data[:20])

    def test_garbage_bytes(self):
        with pytest.raises(ImageDecodeError):
            decode_image(b"not an image at all")

    def test_grayscale_replicated(self):
        gray = np.full((3, 3), 7, dtype=np.uint8)
        buf = io.BytesIO()
        Image.fromarray(gray, mode="L").save(buf, format="PNG")
        out = decode_image(buf.getvalue())
        assert out.shape == (3, 3, 3)
        assert np.all(out == 7)

    def test_alpha_dropped(self):
        rgba = np.zeros((2, 2, 4), dtype=np.uint8)
        rgba[..., :3] = 100
        rgba[..., 3] = 255
        buf = io.BytesIO()
        Image.fromarray(rgba, mode="RGBA").save(buf, format="PNG")
        out = decode_image(buf.getvalue())
        assert out.shape == (2, 2, 3)
        assert np.all(out == 100)

    def test_jpeg_supported(self):
        arr = np.full((16, 16, 3), 128, dtype=np.uint8)
        buf = io.BytesIO()
        Image.fromarray(arr).save(buf, format="JPEG")
        out = decode_image(buf.getvalue())
        assert out.shape == (16, 16, 3)


class TestNormalize:
    def test_bounds(self):
        img = np.array([[[0, 51, 255]]], dtype=np.uint8)
        out = normalize(img)
        assert out.dtype == np.float32
        assert out[0, 0, 0] == 0.0
        assert out[0, 0, 1] == pytest.approx(0.2)
        assert out[0, 0, 2] == 1.0

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            normalize(np.array([[300.0]]))
        with pytest.raises(ValueError):
            normalize(np.array([[-1.0]]))

    @given(st.integers(min_value=0, max_value=255), st.integers(min_value=0, max_value=255))
    def test_monotone(self, a, b):
        fa = normalize(np.array([[a]], dtype=np.uint8))[0, 0]
        fb = normalize(np.array([[b]], dtype=np.uint8))[0, 0]
        assert (a <= b) == (fa <= fb)
        assert 0.0 <= fa <= 1.0


class TestSquareCrop:
    def test_centered_default(self):
        img = np.arange(100 * 200 * 3, dtype=np.uint8).reshape(100, 200, 3)
        out = square_crop(img)
        assert out.shape == (100, 100, 3)
        assert np.array_equal(out, img[:, 50:150])

    def test_already_square(self):
        img = random_rgb(np.random.default_rng(1), 224, 224)
        assert np.array_equal(square_crop(img), img)

    def test_out_of_bounds(self):
        img = np.zeros((100, 100, 3), dtype=np.uint8)
        with pytest.raises(CropBoundsError):
            square_crop(img, CropRect(x=90, y=0, side=20))

    def test_explicit_rect(self):
        img = np.arange(10 * 10 * 3, dtype=np.uint8).reshape(10, 10, 3)
        out = square_crop(img, CropRect(x=2, y=3, side=4))
        assert np.array_equal(out, img[3:7, 2:6])

    def test_negative_rect_rejected(self):
        with pytest.raises(CropBoundsError):
            CropRect(x=-1, y=0, side=4)


class TestResizeBilinear:
    def test_identity(self):
        img = random_rgb(np.random.default_rng(2), 224, 224)
        out = resize_bilinear(img, 224)
        assert np.array_equal(out, img.astype(np.float32))

    def test_constant_preserved(self):
        img = np.full((17, 17, 3), 93.0, dtype=np.float32)
        for target in (5, 17, 41):
            assert np.allclose(resize_bilinear(img, target), 93.0)

    def test_two_by_two_to_one(self):
        # half-pixel-center source coordinate for the single output pixel is
        # (0.5)*2 - 0.5 = 0.5 in both axes: the mean of the four values
        img = np.array([[10.0, 30.0], [50.0, 70.0]])
        out = resize_bilinear(img, 1)
        assert out.shape == (1, 1)
        assert out[0, 0] == pytest.approx(40.0)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            resize_bilinear(np.zeros((4, 6, 3)), 2)

    def test_range_bounded(self):
        rng = np.random.default_rng(3)
        img = rng.uniform(0, 255, size=(9, 9, 3)).astype(np.float32)
        out = resize_bilinear(img, 30)
        assert out.min() >= img.min() - 1e-4
        assert out.max() <= img.max() + 1e-4


class TestFlip:
    def test_horizontal(self):
        img = np.array([[1, 2], [3, 4]])
        assert np.array_equal(flip(img, "horizontal"), [[2, 1], [4, 3]])

    def test_vertical(self):
        img = np.array([[1, 2], [3, 4]])
        assert np.array_equal(flip(img, "vertical"), [[3, 4], [1, 2]])

    @given(st.integers(min_value=1, max_value=8), st.integers(min_value=1, max_value=8),
           st.sampled_from(["horizontal", "vertical"]))
    @settings(max_examples=30)
    def test_involution(self, h, w, axis):
        rng = np.random.default_rng(h * 31 + w)
        img = random_rgb(rng, h, w)
        assert np.array_equal(flip(flip(img, axis), axis), img)

    def test_flips_commute(self):
        img = random_rgb(np.random.default_rng(4), 5, 7)
        hv = flip(flip(img, "horizontal"), "vertical")
        vh = flip(flip(img, "vertical"), "horizontal")
        assert np.array_equal(hv, vh)
        assert np.array_equal(hv, img[::-1, ::-1])


class TestRandomZoom:
    def test_identity_factor(self):
        img = random_rgb(np.random.default_rng(5), 8, 8)
        assert np.array_equal(random_zoom(img, 1.0), img)

    def test_zoom_two_on_four(self):
        img = np.zeros((4, 4, 3), dtype=np.float32)
        img[1:3, 1:3] = 200.0
        expected = resize_bilinear(square_crop(img, CropRect(1, 1, 2)), 4)
        assert np.array_equal(random_zoom(img, 2.0), expected)

    def test_invalid_factor(self):
        img = np.zeros((4, 4, 3))
        with pytest.raises(ValueError):
            random_zoom(img, 0.0)
        with pytest.raises(ValueError):
            random_zoom(img, -1.5)
        with pytest.raises(ValueError):
            random_zoom(img, 0.8)


class TestAugment:
    def test_zero_probabilities_identity(self):
        cfg = AugmentConfig(p_zoom=0.0, p_hflip=0.0, p_vflip=0.0, seed=0)
        img = normalize(random_rgb(np.random.default_rng(6), 16, 16))
        out = augment(img, cfg, cfg.make_rng())
        assert np.array_equal(out, img)

    def test_certain_flips_rotate(self):
        cfg = AugmentConfig(p_zoom=0.0, p_hflip=1.0, p_vflip=1.0, seed=0)
        img = normalize(random_rgb(np.random.default_rng(7), 12, 12))
        out = augment(img, cfg, cfg.make_rng())
        assert np.array_equal(out, img[::-1, ::-1])

    def test_deterministic_given_seed(self):
        cfg = AugmentConfig(seed=123)
        img = normalize(random_rgb(np.random.default_rng(8), 32, 32))
        a = augment(img, cfg, cfg.make_rng())
        b = augment(img, cfg, cfg.make_rng())
        assert np.array_equal(a, b)

    def test_draws_consumed_regardless_of_firing(self):
        # with all probabilities zero the stream still advances 4 draws per call
        cfg = AugmentConfig(p_zoom=0.0, p_hflip=0.0, p_vflip=0.0)
        rng = np.random.default_rng(9)
        img = normalize(random_rgb(np.random.default_rng(10), 8, 8))
        augment(img, cfg, rng)
        ref = np.random.default_rng(9)
        ref.uniform(size=4)
        assert rng.uniform() == ref.uniform()

    def test_invalid_probability_rejected(self):
        with pytest.raises(ValueError):
            AugmentConfig(p_zoom=1.5)
        with pytest.raises(ValueError):
            AugmentConfig(zoom_range=(0.0, 1.3))


class TestPreprocessForInference:
    def test_output_contract(self):
        data = encode_png(random_rgb(np.random.default_rng(11), 300, 420))
        out = preprocess_for_inference(data)
        assert out.shape == (224, 224, 3)
        assert out.dtype == np.float32
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_already_prepared_only_normalizes(self):
        arr = random_rgb(np.random.default_rng(12), 224, 224)
        out = preprocess_for_inference(encode_png(arr))
        assert np.array_equal(out, arr.astype(np.float32) / np.float32(255.0))

    def test_decode_error_propagates(self):
        with pytest.raises(ImageDecodeError):
            preprocess_for_inference(b"\x00\x01")

    def test_manual_crop_used(self):
        arr = random_rgb(np.random.default_rng(13), 64, 64)
        rect = CropRect(x=8, y=4, side=32)
        out = preprocess_for_inference(encode_png(arr), rect)
        expected = normalize(resize_bilinear(square_crop(arr, rect), 224))
        assert np.array_equal(out, expected)
