#!/usr/bin/env python3
"""End-to-end toy: jointly train lens parameters and a depth decoder.

Demonstration of embedding the optical layer in a training loop via the
torch custom-gradient op — a desk-scale stand-in for decoder-in-the-loop
lens design. A small CNN predicts inverse depth from the simulated sensor
image of Rectangles scenes, and the loss gradient flows into both the
network weights and the freeform lens coefficients.

This script is documentation, not part of the acceptance suite; expect a
few minutes on CPU with the default settings.

Usage:
    python examples/train_toy_decoder.py [--steps 30] [--size 48]
"""

import argparse

import numpy as np
import torch
import torch.nn as nn

import wavelens as wl
from wavelens_bindings import BoundSimulator
from wavelens_bindings.torch_op import sensor_image


class TinyDecoder(nn.Module):
    """Three conv layers from sensor RGB to inverse depth."""

    def __init__(self):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(3, 16, 5, padding=2), nn.ReLU(),
            nn.Conv2d(16, 16, 5, padding=2), nn.ReLU(),
            nn.Conv2d(16, 1, 3, padding=1),
        )

    def forward(self, x):
        return self.net(x)


def make_simulator(size_bins=4):
    radius = 0.050 / 22 / 2
    element = wl.FreeformSurface(coeffs=(0.0,) * 36, norm_radius=radius,
                                 material=wl.DispersionModel())
    centers, _ = wl.depth_bins(1.0, 5.0, size_bins)
    config = wl.OpticalConfig(
        lens=wl.LensPrescription(0.050, 0.050 / 22, wl.DispersionModel()),
        element=element,
        focus_distance=2.0,
        grid=wl.GridSpec(256, 1e-5),
        depth_bins=tuple(centers),
        crop_size=64,
    )
    return BoundSimulator(config)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=30)
    parser.add_argument("--size", type=int, default=48)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    torch.manual_seed(args.seed)
    sim = make_simulator()
    decoder = TinyDecoder().double()

    # lens parameters in micrometers so one Adam handles both tensors
    lens_params_um = torch.zeros(36, dtype=torch.float64, requires_grad=True)
    opt = torch.optim.Adam([
        {"params": decoder.parameters(), "lr": 1e-3},
        {"params": [lens_params_um], "lr": 1e-3},
    ])

    data = wl.RectanglesParams(height=args.size, width=args.size,
                               side_min=8, side_max=24,
                               d_min=1.0, d_max=5.0,
                               count=10_000, seed=args.seed)

    for step in range(args.steps):
        sample = wl.generate_rectangles(data, step)
        image = torch.from_numpy(sample.rgb)
        depth = torch.from_numpy(sample.depth.astype(np.float64))

        sensor = sensor_image(lens_params_um * 1e-6, image, depth, sim)
        pred = decoder(sensor.permute(2, 0, 1).unsqueeze(0))[0, 0]
        loss = ((pred - 1.0 / depth) ** 2).mean()

        opt.zero_grad()
        loss.backward()
        opt.step()
        if step % 5 == 0 or step == args.steps - 1:
            sag = lens_params_um.detach().abs().max().item()
            print(f"step {step:3d}: loss {loss.item():.5f}  "
                  f"max |coeff| {sag:.4f} um")

    print("done; the lens coefficients moved with the decoder.")


if __name__ == "__main__":
    main()
