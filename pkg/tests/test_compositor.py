import cv2
import numpy as np
import pytest

import warpgen as w
from warpgen import compositor as comp
from warpgen.metrics import intersect_convex_quads, polygon_area

from helpers import central_crop, central_region_visible, sampled_transform, smooth_image


class TestWarp:
    def test_identity_is_exact_copy(self, rgb_image):
        out, mask = w.warp(rgb_image, w.Homography.identity(), 64, 64)
        np.testing.assert_array_equal(out, rgb_image)
        assert (mask == 255).all()

    def test_half_scale_covers_quarter(self, rgb_image):
        _, mask = w.warp(rgb_image, w.make_scale(0.5, 0.5), 224, 224)
        assert abs(mask.mean() / 255 - 0.25) < 0.01

    def test_outside_is_black_with_zero_mask(self, rgb_image):
        out, mask = w.warp(rgb_image, w.make_scale(0.5, 0.5), 224, 224)
        assert mask[0, 0] == 0 and mask[-1, -1] == 0
        assert not out[mask == 0].any()
        assert out[mask == 255].any()

    def test_singular_transform_rejected(self, rgb_image):
        singular = w.Homography(np.array([1, 1, 0, 1, 1, 0, 0, 0], dtype=float))
        with pytest.raises(w.GeometryError):
            w.warp(rgb_image, singular, 64, 64)

    def test_mask_matches_bruteforce_supersampling(self, rgb_image):
        for i in range(10):
            h = sampled_transform(21, i)
            pull = np.linalg.inv(h.matrix) @ comp.pixel_to_norm_matrix(96, 96)
            got = comp._coverage_mask(pull, 96, 96)
            jj, ii = np.meshgrid(np.arange(96.0), np.arange(96.0), indexing="ij")
            count = np.zeros((96, 96), np.int16)
            for di, dj in ((-0.25, -0.25), (-0.25, 0.25), (0.25, -0.25), (0.25, 0.25)):
                x = pull[0, 0] * (ii + di) + pull[0, 1] * (jj + dj) + pull[0, 2]
                y = pull[1, 0] * (ii + di) + pull[1, 1] * (jj + dj) + pull[1, 2]
                ww = pull[2, 0] * (ii + di) + pull[2, 1] * (jj + dj) + pull[2, 2]
                count += (ww > 0) & (np.abs(x) <= ww) & (np.abs(y) <= ww)
            expected = ((count.astype(np.uint16) * 255 + 2) // 4).astype(np.uint8)
            np.testing.assert_array_equal(got, expected)

    def test_mask_area_matches_clipped_quad(self, rgb_image):
        width = height = 224
        for i in range(20):
            h = sampled_transform(22, i)
            _, mask = w.warp(rgb_image, h, width, height)
            clipped = intersect_convex_quads(w.quad_from_matrix(h), w.CANONICAL_CORNERS)
            expected_px = polygon_area(clipped) * width * height / 4.0
            assert abs(mask.sum() / 255.0 - expected_px) < 0.005 * width * height


class TestComposite:
    def test_full_mask_returns_foreground(self, g, rgb_image):
        bg = g.integers(0, 256, rgb_image.shape, dtype=np.uint8)
        out = w.composite(rgb_image, np.full(rgb_image.shape[:2], 255, np.uint8), bg)
        np.testing.assert_array_equal(out, rgb_image)

    def test_zero_mask_returns_background(self, g, rgb_image):
        bg = g.integers(0, 256, rgb_image.shape, dtype=np.uint8)
        out = w.composite(rgb_image, np.zeros(rgb_image.shape[:2], np.uint8), bg)
        np.testing.assert_array_equal(out, bg)

    def test_half_split_mask_exact(self, g, rgb_image):
        bg = g.integers(0, 256, rgb_image.shape, dtype=np.uint8)
        mask = np.zeros(rgb_image.shape[:2], np.uint8)
        mask[:, :32] = 255
        out = w.composite(rgb_image, mask, bg)
        np.testing.assert_array_equal(out[:, :32], rgb_image[:, :32])
        np.testing.assert_array_equal(out[:, 32:], bg[:, 32:])

    def test_matches_float_blend_formula(self, g, rgb_image):
        bg = g.integers(0, 256, rgb_image.shape, dtype=np.uint8)
        mask = g.integers(0, 256, rgb_image.shape[:2], dtype=np.uint8)
        out = w.composite(rgb_image, mask, bg)
        a = (mask / 255.0)[..., None]
        expected = np.rint(rgb_image * a + bg * (1.0 - a)).astype(np.uint8)
        np.testing.assert_array_equal(out, expected)

    def test_background_resampled_to_fit(self, g, rgb_image):
        bg = g.integers(0, 256, (32, 48, 3), dtype=np.uint8)
        out = w.composite(rgb_image, np.zeros(rgb_image.shape[:2], np.uint8), bg)
        assert out.shape == rgb_image.shape

    def test_mask_shape_mismatch_rejected(self, rgb_image):
        with pytest.raises(ValueError):
            w.composite(rgb_image, np.zeros((8, 8), np.uint8), rgb_image)


class TestResample:
    def test_same_size_copy(self, rgb_image):
        out = w.resample(rgb_image, 64, 64)
        np.testing.assert_array_equal(out, rgb_image)
        assert out is not rgb_image

    def test_constant_survives_round_trip(self):
        const = np.full((32, 32, 3), 77, np.uint8)
        np.testing.assert_array_equal(
            w.resample(w.resample(const, 64, 64), 32, 32), const
        )

    def test_double_shrink_matches_box_average(self):
        i = np.arange(128, dtype=np.float64)
        ramp = (i[None, :] + i[:, None]) % 256
        src = np.repeat(ramp[:, :, None], 3, axis=2).astype(np.uint8)
        got = w.resample(src, 64, 64).astype(np.int16)
        blocks = src.astype(np.float64).reshape(64, 2, 64, 2, 3).mean(axis=(1, 3))
        assert np.abs(got - np.rint(blocks)).max() <= 1


class TestScreenSynthesis:
    def test_zero_padding_is_identity(self, rgb_image):
        p = w.ScreenParams(0.0, 0.0, 0.0, 0.0, (5, 5, 5))
        np.testing.assert_array_equal(w.synthesize_screen(rgb_image, p), rgb_image)

    def test_half_padding_border_and_center(self, g):
        src = g.integers(0, 256, (225, 225, 3), dtype=np.uint8)
        p = w.ScreenParams(0.5, 0.5, 0.5, 0.5, (0, 0, 0))
        out = w.synthesize_screen(src, p)
        assert not out[0, 0].any() and not out[-1, -1].any()
        # odd size: the center pixel pulls exactly the source center pixel
        np.testing.assert_array_equal(out[112, 112], src[112, 112])

    def test_inner_region_equals_independent_warp(self, g):
        src = g.integers(0, 256, (96, 96, 3), dtype=np.uint8)
        p = w.ScreenParams(0.21, 0.4, 0.13, 0.33, (7, 3, 9))
        out = w.synthesize_screen(src, p)
        shrunk, mask = w.warp(src, w.screen_matrix(p), 96, 96)
        np.testing.assert_array_equal(out[mask == 255], shrunk[mask == 255])
        canvas = np.zeros((96, 96, 3), np.uint8)
        canvas[:] = (7, 3, 9)
        np.testing.assert_array_equal(out[mask == 0], canvas[mask == 0])


class TestRectify:
    def test_identity_round_trip_exact(self, rgb_image):
        warped, _ = w.warp(rgb_image, w.Homography.identity(), 64, 64)
        np.testing.assert_array_equal(
            w.rectify(warped, w.Homography.identity(), 64, 64), rgb_image
        )

    def test_quad_corners_map_back_to_frame_corners(self):
        width = 224
        for i in range(50):
            h = sampled_transform(23, i)
            corners = w.apply_points(w.invert(h), w.quad_from_matrix(h))
            # half a pixel in normalized units is 1/width
            assert np.abs(corners - w.CANONICAL_CORNERS).max() < 1.0 / width

    def test_self_round_trip_psnr(self, g):
        src = smooth_image(g, 224, 224)
        checked = 0
        index = 0
        while checked < 20:
            h = sampled_transform(24, index)
            index += 1
            if not central_region_visible(h):
                continue  # off-canvas loss is cropping, not interpolation
            photo, _ = w.warp(src, h, 224, 224)
            back = w.rectify(photo, h, 224, 224)
            assert w.psnr(central_crop(src), central_crop(back)) >= 25.0
            checked += 1


class TestImageIO:
    def test_png_round_trip_exact(self, tmp_path, rgb_image):
        path = tmp_path / "img.png"
        w.save_image(path, rgb_image)
        np.testing.assert_array_equal(w.load_image(path), rgb_image)

    def test_jpeg_round_trip_close(self, tmp_path, g):
        img = smooth_image(g, 96, 96)
        path = tmp_path / "img.jpg"
        w.save_image(path, img)
        assert w.psnr(w.load_image(path), img) > 30.0

    def test_grayscale_replicated(self, tmp_path, g):
        gray = g.integers(0, 256, (32, 32), dtype=np.uint8)
        path = tmp_path / "gray.png"
        cv2.imwrite(str(path), gray)
        out = w.load_image(path)
        assert out.shape == (32, 32, 3)
        np.testing.assert_array_equal(out[:, :, 0], out[:, :, 1])
        np.testing.assert_array_equal(out[:, :, 0], gray)

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(OSError):
            w.load_image(tmp_path / "nope.png")

    def test_undecodable_raises(self, tmp_path):
        path = tmp_path / "junk.jpg"
        path.write_bytes(b"not an image at all")
        with pytest.raises(OSError):
            w.load_image(path)

    def test_unsupported_suffix_rejected(self, tmp_path, rgb_image):
        with pytest.raises(ValueError):
            w.save_image(tmp_path / "img.tiff", rgb_image)

    def test_jpeg_codec_helpers(self, g):
        img = smooth_image(g, 64, 64)
        data = w.encode_jpeg(img, 95)
        out = w.decode_jpeg(data)
        assert out.shape == img.shape
        assert w.psnr(out, img) > 30.0


class TestPsnr:
    def test_identical_is_infinite(self, rgb_image):
        assert w.psnr(rgb_image, rgb_image) == float("inf")

    def test_known_value(self):
        a = np.zeros((10, 10, 3), np.uint8)
        b = np.full((10, 10, 3), 2, np.uint8)
        assert w.psnr(a, b) == pytest.approx(10 * np.log10(255.0 ** 2 / 4.0))

    def test_shape_mismatch_rejected(self, rgb_image):
        with pytest.raises(ValueError):
            w.psnr(rgb_image, rgb_image[:10])
