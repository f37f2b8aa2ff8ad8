"""Custom-gradient registration of the simulator for PyTorch.

`sensor_image(params, image, depth, sim)` is differentiable w.r.t.
`params`: the forward call renders through the bound simulator and the
backward call returns the analytic parameter gradient. The image and
depth inputs are treated as constants (the optical layer sits in front of
the data, not behind it).
"""

from __future__ import annotations

import numpy as np
import torch

from .simulator import BoundSimulator


class SensorImageFunction(torch.autograd.Function):
    @staticmethod
    def forward(ctx, params: torch.Tensor, image: torch.Tensor,
                depth: torch.Tensor, sim: BoundSimulator) -> torch.Tensor:
        sim.set_params(params.detach().cpu().numpy().astype(np.float64))
        out = sim.forward(image.detach().cpu().numpy(),
                          depth.detach().cpu().numpy())
        ctx.sim = sim
        ctx.dtype = params.dtype
        return torch.from_numpy(out).to(image.dtype)

    @staticmethod
    def backward(ctx, upstream: torch.Tensor):
        grad = ctx.sim.backward(upstream.detach().cpu().numpy().astype(np.float64))
        return torch.from_numpy(grad).to(ctx.dtype), None, None, None


def sensor_image(params: torch.Tensor, image: torch.Tensor,
                 depth: torch.Tensor, sim: BoundSimulator) -> torch.Tensor:
    """Differentiable (w.r.t. params) sensor-image formation."""
    return SensorImageFunction.apply(params, image, depth, sim)
