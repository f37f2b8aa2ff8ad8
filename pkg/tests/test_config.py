import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import wavelens as wl
from conftest import small_config, small_freeform


class TestSensorDistance:
    def test_nyu_lens(self):
        # 1/0.05 - 1/1 = 19  ->  s = 1/19
        assert wl.sensor_distance_for_focus(0.050, 1.0) == pytest.approx(1 / 19, rel=1e-12)

    def test_kitti_lens(self):
        assert wl.sensor_distance_for_focus(0.080, 7.6) == pytest.approx(
            0.08085106382978723, rel=1e-12)

    def test_object_at_infinity(self):
        assert wl.sensor_distance_for_focus(0.050, math.inf) == 0.050

    def test_focus_at_focal_length_rejected(self):
        with pytest.raises(wl.ConfigError, match="focus distance must exceed"):
            wl.sensor_distance_for_focus(0.050, 0.050)

    @given(st.floats(0.01, 0.2), st.floats(1.5, 100.0))
    def test_thin_lens_identity(self, f, ratio):
        d = f * ratio
        s = wl.sensor_distance_for_focus(f, d)
        assert 1 / f == pytest.approx(1 / d + 1 / s, rel=1e-12)


class TestDispersion:
    def test_achromatic_constant(self):
        assert wl.ACHROMATIC.index(470e-9) == wl.ACHROMATIC.index(610e-9) == 1.52

    def test_cauchy_monotone_decreasing_with_wavelength(self):
        d = wl.DispersionModel()
        assert d.index(470e-9) > d.index(530e-9) > d.index(610e-9)

    def test_cauchy_design_point(self):
        d = wl.DispersionModel()
        assert d.index(d.lambda_design) == pytest.approx(1.52, abs=0)

    def test_focal_length_ratio(self):
        # n_design=1.52, n(blue)=1.53 at f0=50mm -> f_blue = 50*0.52/0.53
        lens = wl.LensPrescription(
            0.050, 0.00625,
            wl.DispersionModel(mode="cauchy", n_design=1.52, cauchy_b=4.2e-15))
        lam_blue = None
        # find wavelength where the default Cauchy model hits 1.53 exactly
        # n = 1.52 + b (1/l^2 - 1/ld^2) = 1.53 -> 1/l^2 = 0.01/b + 1/ld^2
        inv_sq = 0.01 / 4.2e-15 + 1 / 530e-9**2
        lam_blue = inv_sq**-0.5
        assert lens.focal_length_at(lam_blue) == pytest.approx(
            0.050 * 0.52 / 0.53, rel=1e-9)

    def test_index_must_exceed_one(self):
        with pytest.raises(wl.ConfigError):
            wl.DispersionModel(mode="achromatic", n_design=0.9)


class TestOpticalConfig:
    def test_derived_sensor_distance(self):
        cfg = small_config()
        assert 1 / cfg.lens.focal_length == pytest.approx(
            1 / cfg.focus_distance + 1 / cfg.sensor_distance, rel=1e-12)

    def test_sensor_distance_override(self):
        cfg = small_config(sensor_distance=0.055)
        assert cfg.sensor_distance == 0.055

    def test_depth_bins_must_be_monotone(self):
        with pytest.raises(wl.ConfigError, match="monotone"):
            small_config(depths=(1.0, 3.0, 2.0))

    def test_depth_bins_must_be_positive(self):
        with pytest.raises(wl.ConfigError, match="positive"):
            small_config(depths=(-1.0, 1.0, 2.0))

    def test_freeform_needs_36_coefficients(self):
        with pytest.raises(wl.ConfigError, match="36"):
            wl.FreeformSurface(coeffs=(0.0,) * 10, norm_radius=1e-3)

    def test_annular_radii_ordering(self):
        with pytest.raises(wl.ConfigError, match="increasing"):
            wl.AnnularSurface(heights=(0, 0, 0), ring_radii=(2e-3, 1e-3, 3e-3))

    def test_equal_area_rings(self):
        surf = wl.AnnularSurface.equal_area(3e-3)
        r1, r2, r3 = surf.ring_radii
        areas = np.diff([0, r1**2, r2**2, r3**2])
        assert np.allclose(areas, areas[0])
        assert r3 == 3e-3


class TestConfigJson:
    @pytest.mark.parametrize("element", [
        None,
        small_freeform(np.linspace(-1e-6, 1e-6, 36)),
        wl.AnnularSurface.equal_area(0.05 / 44, heights=(1e-7, -2e-7, 3e-7)),
    ])
    def test_round_trip(self, element, tmp_path):
        cfg = small_config(element=element)
        path = tmp_path / "config.json"
        wl.save_config(cfg, path)
        loaded = wl.load_config(path)
        assert loaded == cfg

    def test_defaults_echoed(self):
        data = wl.config_to_dict(small_config())
        assert data["sensor_distance"] is not None
        assert data["crop_size"] == 64
        assert data["normalize_psf"] is True
        assert data["element"] == {"type": "none"}

    def test_missing_key_raises_config_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{}")
        with pytest.raises(wl.ConfigError, match="missing required key"):
            wl.load_config(path)

    def test_invalid_json_raises_config_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(wl.ConfigError, match="not valid JSON"):
            wl.load_config(path)


class TestPresets:
    def test_six_presets_build(self):
        for name in wl.PRESET_NAMES:
            cfg = wl.make_preset(name, n=256, pitch=32e-6, bins=4, f_number=22)
            assert len(cfg.depth_bins) == 4

    def test_nyu_prescription(self):
        cfg = wl.make_preset("chromatic")
        assert cfg.lens.focal_length == 0.050
        assert cfg.lens.f_number == pytest.approx(8.0)
        assert cfg.focus_distance == 1.0
        assert len(cfg.depth_bins) == 12

    def test_kitti_prescription(self):
        cfg = wl.make_preset("defocus", scene="kitti")
        assert cfg.lens.focal_length == 0.080
        assert cfg.focus_distance == 7.6
        assert cfg.lens.dispersion.mode == "achromatic"

    def test_astigmatism_preset_sets_noll6(self):
        cfg = wl.make_preset("astigmatism", n=256, pitch=32e-6, f_number=22)
        coeffs = np.asarray(cfg.element.coeffs)
        assert coeffs[5] == pytest.approx(2 * 530e-9)
        assert np.all(coeffs[:5] == 0) and np.all(coeffs[6:] == 0)

    def test_spherical_knob_sets_noll11(self):
        cfg = wl.make_preset("freeform", n=256, pitch=32e-6, f_number=22,
                             spherical=3e-7)
        assert np.asarray(cfg.element.coeffs)[10] == pytest.approx(3e-7)

    def test_grid_exceeds_aperture(self):
        for scene in wl.SCENES:
            cfg = wl.make_preset("chromatic", scene=scene)
            assert cfg.grid.extent > cfg.lens.aperture_diameter
