import math

import numpy as np
import pytest

from graphinterp.imaging import (
    BAYER_LAYOUTS,
    MosaicObservation,
    bicubic_upsample,
    bilinear_demosaic,
    downsample2x,
    luma,
    mosaic,
    psnr,
    read_ppm,
    rgb_to_ycbcr,
    ssim,
    validate_image,
    write_ppm,
)


def _color(rng, h, w):
    return np.clip(rng.normal(128.0, 50.0, (h, w, 3)), 0.0, 255.0)


class TestValidate:
    def test_accepts_gray_and_color(self):
        validate_image(np.zeros((3, 4)))
        validate_image(np.zeros((3, 4, 3)))

    def test_rejects_bad_rank_and_nonfinite(self):
        with pytest.raises(ValueError):
            validate_image(np.zeros((3, 4, 2)))
        with pytest.raises(ValueError):
            validate_image(np.zeros(5))
        bad = np.zeros((2, 2))
        bad[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            validate_image(bad)


class TestMosaic:
    def test_rggb_2x2_layout(self):
        img = np.zeros((2, 2, 3))
        img[..., 0] = [[1, 0], [0, 0]]
        img[..., 1] = [[0, 2], [3, 0]]
        img[..., 2] = [[0, 0], [0, 4]]
        obs = mosaic(img, "RGGB")
        s_r, y_r = obs.samples[0]
        s_g, y_g = obs.samples[1]
        s_b, y_b = obs.samples[2]
        assert s_r.indices.tolist() == [0] and y_r.tolist() == [1.0]
        assert s_g.indices.tolist() == [1, 2] and y_g.tolist() == [2.0, 3.0]
        assert s_b.indices.tolist() == [3] and y_b.tolist() == [4.0]
        np.testing.assert_array_equal(obs.raw, [[1, 2], [3, 4]])

    def test_4x4_counts(self):
        obs = mosaic(np.zeros((4, 4, 3)))
        assert [s.k for s, _ in obs.samples] == [4, 8, 4]

    def test_sample_sets_partition_grid(self):
        rng = np.random.default_rng(0)
        for pattern in BAYER_LAYOUTS:
            obs = mosaic(_color(rng, 5, 7), pattern)
            merged = np.concatenate([s.indices for s, _ in obs.samples])
            assert np.array_equal(np.sort(merged), np.arange(35))

    def test_observed_values_match_source(self):
        rng = np.random.default_rng(1)
        img = _color(rng, 6, 4)
        obs = mosaic(img, "GBRG")
        for c, (s, y) in enumerate(obs.samples):
            np.testing.assert_array_equal(y, img[..., c].ravel()[s.indices])

    def test_grayscale_rejected(self):
        with pytest.raises(ValueError):
            mosaic(np.zeros((4, 4)))

    def test_unknown_pattern_rejected(self):
        with pytest.raises(ValueError, match="XYZW"):
            mosaic(np.zeros((4, 4, 3)), "XYZW")


class TestDownsample:
    def test_2x2_keeps_top_left(self):
        img = np.array([[1.0, 2.0], [3.0, 4.0]])
        lr, s = downsample2x(img)
        assert lr.shape == (1, 1) and lr[0, 0] == 1.0
        assert s.indices.tolist() == [0]

    def test_4x4_sampling_indices(self):
        _, s = downsample2x(np.zeros((4, 4)))
        assert s.indices.tolist() == [0, 2, 8, 10]
        assert s.n_total == 16

    def test_constant_stays_constant(self):
        lr, _ = downsample2x(np.full((6, 8, 3), 77.0))
        assert lr.shape == (3, 4, 3)
        assert np.all(lr == 77.0)

    def test_odd_dimensions(self):
        lr, s = downsample2x(np.zeros((5, 7)))
        assert lr.shape == (3, 4)
        assert s.k == 12

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            downsample2x(np.zeros((1, 5)))


class TestBilinearDemosaic:
    def test_constant_color_exact(self):
        img = np.empty((6, 6, 3))
        img[..., 0], img[..., 1], img[..., 2] = 10.0, 200.0, 55.0
        rec = bilinear_demosaic(mosaic(img))
        np.testing.assert_array_equal(rec, img)

    def test_known_samples_preserved(self):
        rng = np.random.default_rng(2)
        img = _color(rng, 8, 8)
        obs = mosaic(img, "BGGR")
        rec = bilinear_demosaic(obs)
        for c, (s, y) in enumerate(obs.samples):
            np.testing.assert_array_equal(rec[..., c].ravel()[s.indices], y)

    def test_affine_image_exact_in_interior(self):
        # symmetric same-color stencils reproduce any affine ramp
        rr, cc = np.meshgrid(np.arange(10), np.arange(12), indexing="ij")
        img = np.stack(
            [20 + 3 * rr + 2 * cc, 40 + rr + 5 * cc, 10 + 2 * rr + 2 * cc], axis=-1
        ).astype(np.float64)
        rec = bilinear_demosaic(mosaic(img))
        np.testing.assert_allclose(rec[2:-2, 2:-2], img[2:-2, 2:-2], atol=1e-10)

    def test_all_patterns_supported(self):
        rng = np.random.default_rng(3)
        img = _color(rng, 6, 6)
        for pattern in BAYER_LAYOUTS:
            rec = bilinear_demosaic(mosaic(img, pattern))
            assert rec.shape == img.shape
            assert np.all(np.isfinite(rec))


class TestBicubic:
    def test_constant(self):
        hr = bicubic_upsample(np.full((4, 5), 9.0))
        assert hr.shape == (8, 10)
        np.testing.assert_allclose(hr, 9.0, atol=1e-12)

    def test_even_positions_reproduce_lr_exactly(self):
        rng = np.random.default_rng(4)
        lr = rng.normal(100.0, 30.0, (5, 6))
        hr = bicubic_upsample(lr)
        np.testing.assert_array_equal(hr[0::2, 0::2], lr)

    def test_linear_ramp_exact_away_from_borders(self):
        lr = (7.0 + 3.0 * np.arange(5)[:, None] + 2.0 * np.arange(6)[None, :])
        hr = bicubic_upsample(lr)
        rr, cc = np.meshgrid(np.arange(10), np.arange(12), indexing="ij")
        expect = 7.0 + 1.5 * rr + 1.0 * cc
        np.testing.assert_allclose(hr[2:6, 2:8], expect[2:6, 2:8], atol=1e-10)

    def test_halfway_weights(self):
        # interior odd sample = (-1, 9, 9, -1)/16 stencil
        lr = np.zeros((5, 6))
        lr[:, 2] = [4.0, 8.0, 20.0, 12.0, 0.0]
        hr = bicubic_upsample(lr)
        assert hr[5, 4] == pytest.approx((-8.0 + 9 * 20.0 + 9 * 12.0 - 0.0) / 16.0)

    def test_out_shape_for_odd_dims(self):
        hr = bicubic_upsample(np.array([[1.0, 2.0], [3.0, 4.0]]), out_shape=(3, 3))
        assert hr.shape == (3, 3)
        np.testing.assert_array_equal(hr[0::2, 0::2], [[1.0, 2.0], [3.0, 4.0]])

    def test_inconsistent_out_shape_rejected(self):
        with pytest.raises(ValueError):
            bicubic_upsample(np.zeros((2, 2)), out_shape=(8, 8))

    def test_color_image(self):
        rng = np.random.default_rng(5)
        img = _color(rng, 3, 3)
        hr = bicubic_upsample(img)
        assert hr.shape == (6, 6, 3)
        np.testing.assert_array_equal(hr[0::2, 0::2], img)

    def test_roundtrip_with_downsample_is_identity_on_samples(self):
        rng = np.random.default_rng(6)
        img = np.clip(rng.normal(128.0, 40.0, (8, 8)), 0, 255)
        lr, s = downsample2x(img)
        hr = bicubic_upsample(lr, out_shape=img.shape)
        np.testing.assert_array_equal(hr.ravel()[s.indices], img.ravel()[s.indices])


class TestColor:
    def test_white(self):
        out = rgb_to_ycbcr(np.full((1, 1, 3), 255.0))
        np.testing.assert_allclose(out[0, 0], [255.0, 128.0, 128.0], atol=1e-9)

    def test_pure_red_luma(self):
        img = np.zeros((1, 1, 3))
        img[0, 0, 0] = 255.0
        assert rgb_to_ycbcr(img)[0, 0, 0] == pytest.approx(76.245)

    def test_gray_maps_to_gray(self):
        out = rgb_to_ycbcr(np.full((2, 2, 3), 128.0))
        np.testing.assert_allclose(out, 128.0, atol=1e-9)

    def test_luma_matches_y(self):
        rng = np.random.default_rng(7)
        img = _color(rng, 4, 4)
        np.testing.assert_allclose(luma(img), rgb_to_ycbcr(img)[..., 0], atol=1e-12)

    def test_luma_grayscale_passthrough(self):
        a = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(luma(a), a)

    def test_grayscale_rejected(self):
        with pytest.raises(ValueError):
            rgb_to_ycbcr(np.zeros((2, 2)))


class TestPsnr:
    def test_identical_is_infinite(self):
        a = np.full((4, 4), 50.0)
        assert psnr(a, a) == math.inf

    def test_constant_offset_16(self):
        a = np.zeros((8, 8))
        b = np.full((8, 8), 16.0)
        assert psnr(a, b) == pytest.approx(10.0 * math.log10(255.0**2 / 256.0))
        assert psnr(a, b) == pytest.approx(24.0484, abs=1e-3)

    def test_symmetry(self):
        rng = np.random.default_rng(8)
        a, b = _color(rng, 5, 5), _color(rng, 5, 5)
        assert psnr(a, b) == psnr(b, a)

    def test_pools_channels(self):
        a = np.zeros((2, 2, 3))
        b = np.zeros((2, 2, 3))
        b[..., 0] = 12.0  # MSE = 144/3 = 48
        assert psnr(a, b) == pytest.approx(10.0 * math.log10(255.0**2 / 48.0))

    def test_monotone_in_noise_amplitude(self):
        rng = np.random.default_rng(9)
        base = np.clip(rng.normal(128.0, 30.0, (16, 16)), 0, 255)
        noise = rng.normal(0.0, 1.0, base.shape)
        values = [psnr(base, base + amp * noise) for amp in (2.0, 8.0, 32.0)]
        assert values[0] > values[1] > values[2]

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((2, 2)), np.zeros((3, 2)))


class TestSsim:
    def test_identical_is_exactly_one(self):
        rng = np.random.default_rng(10)
        a = np.clip(rng.normal(128.0, 40.0, (16, 16)), 0, 255)
        assert ssim(a, a) == 1.0

    def test_symmetric(self):
        rng = np.random.default_rng(11)
        a = np.clip(rng.normal(128.0, 40.0, (16, 16)), 0, 255)
        b = np.clip(a + rng.normal(0.0, 10.0, a.shape), 0, 255)
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)

    def test_negative_image_scores_below_one(self):
        rng = np.random.default_rng(12)
        a = np.clip(rng.normal(128.0, 40.0, (16, 16)), 0, 255)
        assert ssim(a, 255.0 - a) < 1.0

    def test_fixture_matches_independent_reference(self):
        # frozen from an external reference implementation of the metric
        rng = np.random.default_rng(20260815)
        a = np.clip(rng.normal(128, 40, (32, 32)), 0, 255)
        b = np.clip(a + rng.normal(0, 12, (32, 32)), 0, 255)
        assert ssim(a, b) == pytest.approx(0.9571990877605767, abs=1e-10)

    def test_small_image_rejected(self):
        with pytest.raises(ValueError, match="11x11"):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)))

    def test_color_rejected(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((16, 16, 3)), np.zeros((16, 16, 3)))


class TestRasterIO:
    def test_color_roundtrip_bitwise(self, tmp_path):
        rng = np.random.default_rng(13)
        img = rng.integers(0, 256, (7, 5, 3)).astype(np.float64)
        p = tmp_path / "x.ppm"
        write_ppm(p, img)
        np.testing.assert_array_equal(read_ppm(p), img)

    def test_gray_roundtrip_bitwise(self, tmp_path):
        rng = np.random.default_rng(14)
        img = rng.integers(0, 256, (4, 9)).astype(np.float64)
        p = tmp_path / "x.pgm"
        write_ppm(p, img)
        np.testing.assert_array_equal(read_ppm(p), img)

    def test_double_roundtrip_is_stable(self, tmp_path):
        rng = np.random.default_rng(15)
        img = rng.integers(0, 256, (3, 3, 3)).astype(np.float64)
        a, b = tmp_path / "a.ppm", tmp_path / "b.ppm"
        write_ppm(a, img)
        write_ppm(b, read_ppm(a))
        assert a.read_bytes() == b.read_bytes()

    def test_p6_header_parse(self, tmp_path):
        p = tmp_path / "h.ppm"
        p.write_bytes(b"P6\n2 2\n255\n" + bytes(range(12)))
        img = read_ppm(p)
        assert img.shape == (2, 2, 3)
        assert img[0, 0].tolist() == [0.0, 1.0, 2.0]
        assert img[1, 1].tolist() == [9.0, 10.0, 11.0]

    def test_header_comments_skipped(self, tmp_path):
        p = tmp_path / "c.pgm"
        p.write_bytes(b"P5 # magic\n# a comment line\n2 # width\n1\n255\n\x07\x09")
        np.testing.assert_array_equal(read_ppm(p), [[7.0, 9.0]])

    def test_wide_maxval_rejected(self, tmp_path):
        p = tmp_path / "w.ppm"
        p.write_bytes(b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00")
        with pytest.raises(ValueError, match="65535"):
            read_ppm(p)

    def test_ascii_magic_rejected(self, tmp_path):
        p = tmp_path / "a.ppm"
        p.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
        with pytest.raises(ValueError, match="P5 or P6"):
            read_ppm(p)

    def test_truncated_payload_rejected(self, tmp_path):
        p = tmp_path / "t.ppm"
        p.write_bytes(b"P6\n2 2\n255\n\x00\x00\x00")
        with pytest.raises(ValueError, match="truncated"):
            read_ppm(p)

    def test_write_rounds_to_nearest(self, tmp_path):
        p = tmp_path / "r.pgm"
        write_ppm(p, np.array([[0.4, 0.6, 254.5, 300.0, -4.0]]))
        np.testing.assert_array_equal(read_ppm(p), [[0.0, 1.0, 254.0, 255.0, 0.0]])
