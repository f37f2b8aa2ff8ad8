"""Layered depth-dependent sensor-image formation.

A scene is an all-in-focus linear RGB image plus a depth map. Depths are
binned uniformly in inverse depth, each layer's occlusion mask is blurred
and renormalized, and the sensor image is the mask-weighted sum of the
image convolved with each depth bin's PSF, per color channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ConfigError
from .optics import PSFStack

DEFAULT_MASK_SIGMA = 1.5  # pixels


def depth_bins(d_min: float, d_max: float, count: int):
    """Bin centers and edges uniform in inverse depth, nearest first.

    Returns (centers, edges): `centers` are `count` scene depths in meters,
    increasing in depth (so decreasing in inverse depth); `edges` are the
    count+1 inverse-depth bin edges in 1/m, decreasing, with each center at
    the midpoint of its edges.
    """
    if not (0 < d_min < d_max):
        raise ConfigError(f"need 0 < d_min < d_max, got ({d_min}, {d_max})")
    if count < 2:
        raise ConfigError(f"need at least 2 depth bins, got {count}")
    edges = np.linspace(1.0 / d_min, 1.0 / d_max, count + 1)
    centers_inv = 0.5 * (edges[:-1] + edges[1:])
    return 1.0 / centers_inv, edges


def quantize_depth(depth: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """One-hot layer masks from a depth map and inverse-depth bin edges.

    Each pixel joins exactly one bin by its inverse depth; a pixel exactly
    on a shared edge joins the nearer bin (lower index); out-of-range
    pixels clamp to the nearest bin.
    """
    depth = np.asarray(depth, dtype=float)
    if np.any(depth <= 0) or not np.all(np.isfinite(depth)):
        raise ConfigError("depth map must be positive and finite")
    edges = np.asarray(edges, dtype=float)
    if edges[0] < edges[-1]:  # accept either orientation
        edges = edges[::-1]
    count = len(edges) - 1
    inv = 1.0 / depth
    # Ascending interior edges; bin index counts edges <= inv (ties included),
    # mapped back to nearest-first numbering.
    interior = edges[1:-1][::-1]
    ascending_bin = np.searchsorted(interior, inv, side="right")
    bins = (count - 1) - ascending_bin
    masks = np.zeros((count,) + depth.shape, dtype=float)
    rows, cols = np.indices(depth.shape)
    masks[bins, rows, cols] = 1.0
    return masks


@dataclass(frozen=True)
class LayerMasks:
    """Softened per-layer occlusion weights that partition every pixel."""

    weights: np.ndarray  # (J, H, W)
    edges: tuple

    def __post_init__(self):
        w = self.weights
        if w.ndim != 3:
            raise ConfigError(f"layer masks must be (J, H, W), got {w.shape}")
        if np.any(w < -1e-9) or np.any(w > 1 + 1e-9):
            raise ConfigError("mask weights must lie in [0, 1]")
        total = w.sum(axis=0)
        if np.max(np.abs(total - 1.0)) > 1e-6:
            raise ConfigError("mask weights must sum to 1 at every pixel")

    @property
    def num_layers(self) -> int:
        return self.weights.shape[0]


def soften_masks(masks: np.ndarray, sigma: float, edges=None) -> LayerMasks:
    """Blur each hard layer with a truncated Gaussian and renormalize.

    sigma is in pixels; the kernel is truncated at radius 3σ and edges are
    replicated so constant layers stay fixed. sigma = 0 returns the input.
    """
    if sigma < 0:
        raise ConfigError(f"mask sigma must be >= 0, got {sigma}")
    masks = np.asarray(masks, dtype=float)
    edge_tuple = tuple(np.asarray(edges).tolist()) if edges is not None else ()
    if sigma == 0:
        return LayerMasks(weights=masks.copy(), edges=edge_tuple)
    blurred = np.stack([
        gaussian_filter(layer, sigma=sigma, mode="nearest", truncate=3.0)
        for layer in masks
    ])
    total = blurred.sum(axis=0)
    return LayerMasks(weights=blurred / total, edges=edge_tuple)


def layer_masks(depth: np.ndarray, edges: np.ndarray,
                sigma: float = DEFAULT_MASK_SIGMA) -> LayerMasks:
    """Quantize a depth map and soften the resulting layers."""
    return soften_masks(quantize_depth(depth, edges), sigma, edges=edges)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _embedded_kernel_fft(kernel: np.ndarray, shape) -> np.ndarray:
    """FFT of the P×P kernel embedded in `shape` with its center at (0, 0)."""
    p = kernel.shape[0]
    full = np.zeros(shape)
    full[:p, :p] = kernel
    full = np.roll(full, (-(p // 2), -(p // 2)), axis=(0, 1))
    return np.fft.rfft2(full)


def pad_image(channel: np.ndarray, radius: int) -> np.ndarray:
    return np.pad(channel, radius, mode="edge")


def render(image: np.ndarray, masks: LayerMasks, stack: PSFStack) -> np.ndarray:
    """Sensor image I_c = Σ_j (L_c ∗ PSF_{j,c}) · M_j per channel.

    FFT convolution under edge-replicate padding of one PSF radius; the
    fixed summation order over layers makes results bit-reproducible.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ConfigError(f"image must be (H, W, 3), got {image.shape}")
    weights = masks.weights
    if weights.shape[1:] != image.shape[:2]:
        raise ConfigError(
            f"mask shape {weights.shape[1:]} does not match image {image.shape[:2]}")
    if masks.num_layers != stack.num_depths:
        raise ConfigError(
            f"mask layer count {masks.num_layers} does not match "
            f"PSF stack depth count {stack.num_depths}")
    height, width = image.shape[:2]
    p = stack.crop_size
    radius = p // 2
    padded_shape = (height + 2 * radius, width + 2 * radius)
    out = np.zeros_like(image)
    for c in range(3):
        spectrum = np.fft.rfft2(pad_image(image[:, :, c], radius))
        acc = np.zeros((height, width))
        for j in range(stack.num_depths):
            kernel_fft = _embedded_kernel_fft(stack.psfs[j, c], padded_shape)
            blurred = np.fft.irfft2(spectrum * kernel_fft, s=padded_shape)
            acc += blurred[radius:radius + height, radius:radius + width] \
                * weights[j]
        out[:, :, c] = acc
    return np.maximum(out, 0.0)


# ---------------------------------------------------------------------------
# sRGB transfer curve
# ---------------------------------------------------------------------------

def srgb_encode(linear: np.ndarray) -> np.ndarray:
    """Linear [0, 1] intensities to 8-bit sRGB (input clipped to [0, 1])."""
    x = np.clip(np.asarray(linear, dtype=float), 0.0, 1.0)
    encoded = np.where(x <= 0.0031308,
                       12.92 * x,
                       1.055 * np.power(x, 1.0 / 2.4) - 0.055)
    return np.round(encoded * 255.0).astype(np.uint8)


def srgb_decode(encoded: np.ndarray) -> np.ndarray:
    """8-bit (or [0, 1] float) sRGB back to linear intensity."""
    s = np.asarray(encoded)
    if s.dtype == np.uint8:
        s = s.astype(float) / 255.0
    else:
        s = np.clip(s.astype(float), 0.0, 1.0)
    return np.where(s <= 0.04045, s / 12.92, np.power((s + 0.055) / 1.055, 2.4))
