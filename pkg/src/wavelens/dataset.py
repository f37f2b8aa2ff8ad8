"""Synthetic Rectangles dataset and RGB-D sample I/O.

Each sample is a set of white axis-aligned rectangles at random depths on
a black background, composited far-to-near so nearer rectangles occlude
farther ones in both the image and the depth map. Samples are seeded per
index, so any sample regenerates bit-identically without its predecessors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .formation import srgb_decode, srgb_encode
from .imageio import (read_depth_png16, read_pfm, read_png, write_pfm,
                      write_png)


@dataclass(frozen=True)
class RectanglesParams:
    """Generation parameters for the Rectangles dataset."""

    height: int = 128
    width: int = 128
    k_min: int = 1
    k_max: int = 5
    side_min: int = 16
    side_max: int = 64
    d_min: float = 1.0
    d_max: float = 5.0
    count: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.height < 32 or self.width < 32:
            raise ConfigError("image size must be at least 32x32")
        if not (0 <= self.k_min <= self.k_max):
            raise ConfigError(f"bad rectangle count range [{self.k_min}, {self.k_max}]")
        if not (1 <= self.side_min <= self.side_max):
            raise ConfigError(f"bad side range [{self.side_min}, {self.side_max}]")
        if self.side_max > min(self.height, self.width):
            raise ConfigError("rectangle sides cannot exceed the image size")
        if not (0 < self.d_min < self.d_max):
            raise ConfigError(f"bad depth range [{self.d_min}, {self.d_max}]")
        if self.count < 1:
            raise ConfigError("sample count must be >= 1")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "height", "width", "k_min", "k_max", "side_min", "side_max",
            "d_min", "d_max", "count", "seed")}


@dataclass(frozen=True)
class RgbdSample:
    """Linear RGB image, metric depth map, and the sample's id."""

    rgb: np.ndarray    # (H, W, 3) in [0, 1]
    depth: np.ndarray  # (H, W) meters
    sample_id: int

    def __post_init__(self):
        if self.rgb.shape[:2] != self.depth.shape:
            raise DataError(
                f"RGB shape {self.rgb.shape[:2]} does not match depth "
                f"shape {self.depth.shape}")


def generate_rectangles(params: RectanglesParams, index: int) -> RgbdSample:
    """Deterministic sample for (params.seed, index)."""
    if index < 0 or index >= params.count:
        raise ConfigError(f"sample index {index} outside [0, {params.count})")
    rng = np.random.default_rng((params.seed, index))
    k = int(rng.integers(params.k_min, params.k_max + 1))
    rects = []
    for _ in range(k):
        side_h = int(rng.integers(params.side_min, params.side_max + 1))
        side_w = int(rng.integers(params.side_min, params.side_max + 1))
        top = int(rng.integers(0, params.height - side_h + 1))
        left = int(rng.integers(0, params.width - side_w + 1))
        inv_depth = rng.uniform(1.0 / params.d_max, 1.0 / params.d_min)
        rects.append((top, left, side_h, side_w, 1.0 / inv_depth))
    rgb = np.zeros((params.height, params.width, 3))
    depth = np.full((params.height, params.width), params.d_max)
    # far to near so nearer rectangles overwrite
    for top, left, side_h, side_w, z in sorted(rects, key=lambda r: -r[4]):
        rgb[top:top + side_h, left:left + side_w, :] = 1.0
        depth[top:top + side_h, left:left + side_w] = z
    return RgbdSample(rgb=rgb, depth=depth, sample_id=index)


# ---------------------------------------------------------------------------
# Directory layout: rgb/%06d.png, depth/%06d.pfm, manifest.json
# ---------------------------------------------------------------------------

def save_sample(sample: RgbdSample, directory) -> dict:
    """Write one sample; returns its manifest entry."""
    directory = Path(directory)
    (directory / "rgb").mkdir(parents=True, exist_ok=True)
    (directory / "depth").mkdir(parents=True, exist_ok=True)
    rgb_name = f"rgb/{sample.sample_id:06d}.png"
    depth_name = f"depth/{sample.sample_id:06d}.pfm"
    write_png(directory / rgb_name, srgb_encode(sample.rgb))
    write_pfm(directory / depth_name, sample.depth.astype(np.float32))
    return {"id": sample.sample_id, "rgb": rgb_name, "depth": depth_name}


def load_rgbd(rgb_path, depth_path, depth_scale: float | None = None,
              sample_id: int = 0) -> RgbdSample:
    """Load a sample: sRGB PNG (linearized) + PFM or scaled 16-bit PNG depth."""
    rgb_raw = read_png(rgb_path)
    if rgb_raw.ndim != 3 or rgb_raw.shape[2] != 3:
        raise DataError(f"{rgb_path}: expected an RGB image, got shape {rgb_raw.shape}")
    rgb = srgb_decode(rgb_raw)
    depth_path = Path(depth_path)
    if depth_path.suffix.lower() == ".pfm":
        depth = read_pfm(depth_path)
        if depth.ndim != 2:
            raise DataError(f"{depth_path}: depth PFM must be grayscale")
    elif depth_path.suffix.lower() == ".png":
        if depth_scale is None:
            raise DataError(
                f"{depth_path}: 16-bit PNG depth requires a declared scale")
        depth = read_depth_png16(depth_path, depth_scale)
    else:
        raise DataError(f"unsupported depth format: {depth_path}")
    if rgb.shape[:2] != depth.shape:
        raise DataError(
            f"dimension mismatch: RGB {rgb.shape[:2]} from {rgb_path} vs "
            f"depth {depth.shape} from {depth_path}")
    return RgbdSample(rgb=rgb, depth=depth, sample_id=sample_id)


def generate_dataset(params: RectanglesParams, directory) -> dict:
    """Generate all samples plus manifest.json; returns the manifest."""
    directory = Path(directory)
    entries = [save_sample(generate_rectangles(params, i), directory)
               for i in range(params.count)]
    manifest = {
        "params": params.to_dict(),
        "count": params.count,
        "seed": params.seed,
        "rgb_format": "png8-srgb",
        "depth_format": "pfm-meters",
        "samples": entries,
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
