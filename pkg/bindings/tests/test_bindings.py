import numpy as np
import pytest

import wavelens as wl
from wavelens.optics import PsfEngine
from wavelens_bindings import BoundSimulator, core_version

FD_STEP = 2.5e-10


def make_config(n_params=36, bins=3):
    """f/22 fast config with an optimizable element (valid pupil sampling)."""
    radius = 0.050 / 22 / 2
    if n_params == 36:
        element = wl.FreeformSurface(coeffs=(0.0,) * 36, norm_radius=radius,
                                     material=wl.DispersionModel())
    else:
        element = wl.AnnularSurface.equal_area(radius,
                                               material=wl.DispersionModel())
    centers, _ = wl.depth_bins(0.7, 3.0, bins)
    return wl.OpticalConfig(
        lens=wl.LensPrescription(0.050, 0.050 / 22, wl.DispersionModel()),
        element=element,
        focus_distance=1.0,
        grid=wl.GridSpec(256, 1e-5),
        depth_bins=tuple(centers),
        crop_size=64,
    )


def make_scene(rng, size=32):
    image = rng.random((size, size, 3))
    depth = rng.uniform(0.75, 2.8, size=(size, size))
    return image, depth


@pytest.fixture
def rng():
    return np.random.default_rng(99)


class TestConstruction:
    def test_version_reports_core(self):
        assert core_version() == wl.__version__

    def test_accepts_config_json(self, tmp_path):
        cfg = make_config()
        wl.save_config(cfg, tmp_path / "config.json")
        sim = BoundSimulator(tmp_path / "config.json")
        assert sim.num_params == 36

    def test_accepts_config_dict(self):
        sim = BoundSimulator(wl.config_to_dict(make_config(n_params=3)))
        assert sim.num_params == 3

    def test_requires_element(self):
        cfg = wl.make_preset("chromatic", n=256, pitch=1e-5, f_number=22,
                             bins=3)
        with pytest.raises(wl.ConfigError, match="element"):
            BoundSimulator(cfg)

    def test_param_setter_validates(self):
        sim = BoundSimulator(make_config())
        with pytest.raises(wl.ConfigError, match="36"):
            sim.set_params(np.zeros(5))
        with pytest.raises(wl.ConfigError, match="finite"):
            sim.set_params(np.full(36, np.nan))

    def test_params_round_trip(self, rng):
        sim = BoundSimulator(make_config())
        p = rng.uniform(-1e-7, 1e-7, 36)
        sim.set_params(p)
        np.testing.assert_array_equal(sim.get_params(), p)
        # returned array is a copy, not a view
        sim.get_params()[0] = 1.0
        assert sim.get_params()[0] == p[0]


class TestForwardFidelity:
    def test_forward_matches_core_render(self, rng):
        cfg = make_config()
        sim = BoundSimulator(cfg)
        params = rng.uniform(-2e-7, 2e-7, 36)
        sim.set_params(params)
        image, depth = make_scene(rng)
        bound = sim.forward(image, depth)

        engine = PsfEngine(cfg)
        stack = engine.stack(params=params)
        _, edges = wl.depth_bins(min(cfg.depth_bins), max(cfg.depth_bins),
                                 len(cfg.depth_bins))
        masks = wl.layer_masks(depth, edges, sigma=1.5)
        core = wl.render(image, masks, stack)
        assert np.max(np.abs(bound - core)) < 1e-12

    def test_float32_inputs_accepted(self, rng):
        sim = BoundSimulator(make_config())
        image, depth = make_scene(rng)
        out32 = sim.forward(image.astype(np.float32), depth.astype(np.float32))
        out64 = sim.forward(image.astype(np.float32).astype(np.float64),
                            depth.astype(np.float32).astype(np.float64))
        np.testing.assert_array_equal(out32, out64)

    def test_batch_of_two_equals_individual_calls(self, rng):
        sim = BoundSimulator(make_config())
        scenes = [make_scene(rng) for _ in range(2)]
        individual = [sim.forward(im, d) for im, d in scenes]
        again = [sim.forward(im, d) for im, d in scenes]
        for a, b in zip(individual, again):
            np.testing.assert_array_equal(a, b)

    def test_instances_do_not_interfere(self, rng):
        sim_a = BoundSimulator(make_config())
        sim_b = BoundSimulator(make_config())
        pa = rng.uniform(-2e-7, 2e-7, 36)
        sim_a.set_params(pa)
        image, depth = make_scene(rng)
        out_before = sim_a.forward(image, depth)
        sim_b.set_params(rng.uniform(-2e-7, 2e-7, 36))
        sim_b.forward(image, depth)
        np.testing.assert_array_equal(sim_a.forward(image, depth), out_before)

    def test_shape_errors_surface_core_messages(self, rng):
        sim = BoundSimulator(make_config())
        with pytest.raises(wl.ConfigError, match="image must be"):
            sim.forward(np.zeros((8, 8)), np.ones((8, 8)))
        with pytest.raises(wl.ConfigError, match="does not match"):
            sim.forward(np.zeros((8, 8, 3)), np.ones((4, 4)))
        with pytest.raises(wl.ConfigError, match="positive"):
            sim.forward(np.zeros((8, 8, 3)), np.zeros((8, 8)))


class TestBackward:
    def test_backward_requires_forward(self):
        sim = BoundSimulator(make_config())
        with pytest.raises(wl.ConfigError, match="no taped forward pass"):
            sim.backward(np.zeros((8, 8, 3)))

    def test_zero_upstream_zero_gradient(self, rng):
        sim = BoundSimulator(make_config())
        image, depth = make_scene(rng)
        sim.forward(image, depth)
        np.testing.assert_array_equal(sim.backward(np.zeros_like(image)), 0.0)

    def test_matches_core_adjoint(self, rng):
        cfg = make_config()
        sim = BoundSimulator(cfg)
        params = rng.uniform(-2e-7, 2e-7, 36)
        sim.set_params(params)
        image, depth = make_scene(rng)
        sim.forward(image, depth)
        upstream = rng.random(image.shape)
        bound = sim.backward(upstream)

        engine = PsfEngine(cfg)
        _, edges = wl.depth_bins(min(cfg.depth_bins), max(cfg.depth_bins),
                                 len(cfg.depth_bins))
        masks = wl.layer_masks(depth, edges, sigma=1.5)
        core = wl.grad_render(image, masks, cfg, upstream, engine=engine,
                              params=params).grad
        scale = np.abs(core).max()
        assert np.max(np.abs(bound - core)) < 1e-12 * max(scale, 1.0)

    def test_finite_differences_from_outside(self, rng):
        # the external-side oracle: perturb through the public setter only
        sim = BoundSimulator(make_config(bins=2))
        params = rng.uniform(-1e-7, 1e-7, 36)
        image, depth = make_scene(rng, size=24)
        upstream = rng.random(image.shape)

        sim.set_params(params)
        sim.forward(image, depth)
        analytic = sim.backward(upstream)

        def loss(p):
            sim.set_params(p)
            return float(np.sum(upstream * sim.forward(image, depth)))

        from wavelens.adjoint import finite_difference_check
        report = finite_difference_check(loss, analytic, params, h=FD_STEP)
        assert report.max_rel_error < 1e-4

    def test_annular_finite_differences(self, rng):
        sim = BoundSimulator(make_config(n_params=3, bins=2))
        params = rng.uniform(-1e-7, 1e-7, 3)
        image, depth = make_scene(rng, size=24)
        upstream = rng.random(image.shape)
        sim.set_params(params)
        sim.forward(image, depth)
        analytic = sim.backward(upstream)

        def loss(p):
            sim.set_params(p)
            return float(np.sum(upstream * sim.forward(image, depth)))

        from wavelens.adjoint import finite_difference_check
        report = finite_difference_check(loss, analytic, params, h=FD_STEP)
        assert report.max_rel_error < 1e-4
