import numpy as np
import pytest

torch = pytest.importorskip("torch")

import wavelens as wl  # noqa: E402
from wavelens_bindings import BoundSimulator  # noqa: E402
from wavelens_bindings.torch_op import sensor_image  # noqa: E402
from test_bindings import FD_STEP, make_config, make_scene  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(7)


class TestTorchRegistration:
    def test_forward_matches_simulator(self, rng):
        sim = BoundSimulator(make_config(bins=2))
        image_np, depth_np = make_scene(rng, size=24)
        params = torch.zeros(36, dtype=torch.float64, requires_grad=True)
        out = sensor_image(params, torch.from_numpy(image_np),
                           torch.from_numpy(depth_np), sim)
        sim2 = BoundSimulator(make_config(bins=2))
        expected = sim2.forward(image_np, depth_np)
        np.testing.assert_array_equal(out.detach().numpy(), expected)

    def test_gradient_flows_to_params(self, rng):
        sim = BoundSimulator(make_config(bins=2))
        image_np, depth_np = make_scene(rng, size=24)
        upstream = rng.random(image_np.shape)
        params = torch.from_numpy(rng.uniform(-1e-7, 1e-7, 36))
        params.requires_grad_(True)
        out = sensor_image(params, torch.from_numpy(image_np),
                           torch.from_numpy(depth_np), sim)
        loss = (out * torch.from_numpy(upstream)).sum()
        loss.backward()
        assert params.grad is not None
        assert params.grad.shape == (36,)
        assert torch.isfinite(params.grad).all()

    def test_external_finite_differences(self, rng):
        # FD driven entirely from the torch side of the boundary
        sim = BoundSimulator(make_config(bins=2))
        image = torch.from_numpy(make_scene(rng, size=24)[0])
        depth = torch.from_numpy(rng.uniform(0.75, 2.8, size=(24, 24)))
        upstream = torch.from_numpy(rng.random((24, 24, 3)))
        base = torch.from_numpy(rng.uniform(-1e-7, 1e-7, 36))

        params = base.clone().requires_grad_(True)
        loss = (sensor_image(params, image, depth, sim) * upstream).sum()
        loss.backward()
        analytic = params.grad.numpy()

        def loss_at(p: np.ndarray) -> float:
            with torch.no_grad():
                out = sensor_image(torch.from_numpy(p), image, depth, sim)
                return float((out * upstream).sum())

        from wavelens.adjoint import finite_difference_check
        report = finite_difference_check(loss_at, analytic, base.numpy(),
                                         h=FD_STEP)
        assert report.max_rel_error < 1e-4
