import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import wavelens as wl


def params(**kwargs):
    defaults = dict(height=64, width=64, k_min=1, k_max=4, side_min=8,
                    side_max=24, d_min=1.0, d_max=5.0, count=50, seed=7)
    defaults.update(kwargs)
    return wl.RectanglesParams(**defaults)


class TestGenerateRectangles:
    def test_no_rectangles_all_black(self):
        sample = wl.generate_rectangles(params(k_min=0, k_max=0), 0)
        np.testing.assert_array_equal(sample.rgb, 0.0)
        np.testing.assert_array_equal(sample.depth, 5.0)

    def test_full_frame_rectangle(self):
        p = params(k_min=1, k_max=1, side_min=64, side_max=64)
        sample = wl.generate_rectangles(p, 0)
        np.testing.assert_array_equal(sample.rgb, 1.0)
        assert len(np.unique(sample.depth)) == 1

    def test_overlap_keeps_nearer_depth(self):
        # find a sample with actual overlap and verify the depth map shows
        # the nearer rectangle everywhere both cover
        p = params(k_min=2, k_max=2, side_min=48, side_max=64)
        sample = wl.generate_rectangles(p, 3)
        white = sample.rgb[:, :, 0] == 1.0
        assert white.any()
        depths = np.unique(sample.depth[white])
        # overlapping white area shows at most the two rectangle depths and
        # every overlap pixel carries a depth <= either rectangle's depth
        assert len(depths) <= 2
        np.testing.assert_array_equal(sample.rgb[:, :, 0], sample.rgb[:, :, 1])

    def test_depth_value_count_bounded(self):
        for index in range(10):
            sample = wl.generate_rectangles(params(), index)
            # k rectangles + background
            assert len(np.unique(sample.depth)) <= 4 + 1

    def test_deterministic_per_index(self):
        a = wl.generate_rectangles(params(), 5)
        b = wl.generate_rectangles(params(), 5)
        np.testing.assert_array_equal(a.rgb, b.rgb)
        np.testing.assert_array_equal(a.depth, b.depth)

    def test_independent_of_predecessors(self):
        # regenerating index 5 does not require indices 0..4
        direct = wl.generate_rectangles(params(), 5)
        after_others = None
        for i in (0, 1, 2, 3, 4, 5):
            after_others = wl.generate_rectangles(params(), i)
        np.testing.assert_array_equal(direct.rgb, after_others.rgb)

    def test_different_indices_differ(self):
        a = wl.generate_rectangles(params(), 0)
        b = wl.generate_rectangles(params(), 1)
        assert not np.array_equal(a.rgb, b.rgb) or \
            not np.array_equal(a.depth, b.depth)

    def test_index_bounds(self):
        with pytest.raises(wl.ConfigError, match="outside"):
            wl.generate_rectangles(params(count=3), 3)

    @given(seed=st.integers(0, 1000), index=st.integers(0, 19))
    @settings(max_examples=20)
    def test_depth_range_respected(self, seed, index):
        p = params(seed=seed, count=20)
        sample = wl.generate_rectangles(p, index)
        assert np.all(sample.depth >= p.d_min - 1e-12)
        assert np.all(sample.depth <= p.d_max + 1e-12)
        assert np.all((sample.rgb == 0.0) | (sample.rgb == 1.0))


class TestSampleIo:
    def test_save_load_round_trip(self, tmp_path):
        sample = wl.generate_rectangles(params(), 2)
        entry = wl.save_sample(sample, tmp_path)
        loaded = wl.load_rgbd(tmp_path / entry["rgb"], tmp_path / entry["depth"],
                              sample_id=2)
        # depth bit-identical through PFM float32
        np.testing.assert_array_equal(loaded.depth,
                                      sample.depth.astype(np.float32))
        assert np.max(np.abs(loaded.rgb - sample.rgb)) <= 1 / 255

    def test_size_mismatch_names_both_shapes(self, tmp_path):
        from wavelens import imageio
        from wavelens.formation import srgb_encode
        imageio.write_png(tmp_path / "rgb.png",
                          srgb_encode(np.zeros((8, 8, 3))))
        imageio.write_pfm(tmp_path / "depth.pfm",
                          np.ones((16, 16), dtype=np.float32))
        with pytest.raises(wl.DataError, match=r"\(8, 8\).*\(16, 16\)"):
            wl.load_rgbd(tmp_path / "rgb.png", tmp_path / "depth.pfm")

    def test_png16_depth_with_scale(self, tmp_path):
        from wavelens import imageio
        from wavelens.formation import srgb_encode
        imageio.write_png(tmp_path / "rgb.png", srgb_encode(np.zeros((4, 4, 3))))
        imageio.write_depth_png16(tmp_path / "depth.png",
                                  np.full((4, 4), 100.0), scale=1 / 256)
        loaded = wl.load_rgbd(tmp_path / "rgb.png", tmp_path / "depth.png",
                              depth_scale=1 / 256)
        np.testing.assert_allclose(loaded.depth, 100.0)

    def test_png16_depth_requires_scale(self, tmp_path):
        from wavelens import imageio
        from wavelens.formation import srgb_encode
        imageio.write_png(tmp_path / "rgb.png", srgb_encode(np.zeros((4, 4, 3))))
        imageio.write_depth_png16(tmp_path / "depth.png",
                                  np.full((4, 4), 1.0), scale=1e-3)
        with pytest.raises(wl.DataError, match="scale"):
            wl.load_rgbd(tmp_path / "rgb.png", tmp_path / "depth.png")

    def test_missing_file_names_path(self, tmp_path):
        with pytest.raises(wl.DataError, match="absent.png"):
            wl.load_rgbd(tmp_path / "absent.png", tmp_path / "absent.pfm")


class TestGenerateDataset:
    def test_layout_and_manifest(self, tmp_path):
        p = params(count=4)
        manifest = wl.generate_dataset(p, tmp_path)
        assert len(manifest["samples"]) == 4
        assert (tmp_path / "manifest.json").exists()
        assert (tmp_path / "rgb" / "000003.png").exists()
        assert (tmp_path / "depth" / "000003.pfm").exists()
        assert manifest["params"]["seed"] == 7

    def test_regeneration_bit_identical(self, tmp_path):
        p = params(count=3)
        wl.generate_dataset(p, tmp_path / "a")
        wl.generate_dataset(p, tmp_path / "b")
        for name in ("rgb/000001.png", "depth/000002.pfm", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()
