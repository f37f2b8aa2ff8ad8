"""Tape-style forward/backward simulator bound to one optical configuration."""

from __future__ import annotations

from pathlib import Path

import numpy as np

import wavelens as wl
from wavelens.errors import ConfigError
from wavelens.optics import PsfEngine


def core_version() -> str:
    """Version of the underlying wavelens library."""
    return wl.__version__


class BoundSimulator:
    """Immutable-config simulator with explicit parameter updates.

    The configuration is fixed at construction (an OpticalConfig, a config
    dict in the documented JSON schema, or a path to a config JSON file);
    only the element parameters move, through `set_params`. `forward`
    renders a sensor image from an all-in-focus image and its depth map
    and tapes the inputs; `backward` pulls a sensor-image adjoint back to
    a parameter gradient using the taped pass.

    One instance is single-owner: concurrent use of the same instance is
    undefined. Separate instances are fully independent.
    """

    def __init__(self, config, mask_sigma: float = 1.5):
        if isinstance(config, wl.OpticalConfig):
            self._config = config
        elif isinstance(config, dict):
            self._config = wl.config_from_dict(config)
        elif isinstance(config, (str, Path)):
            self._config = wl.load_config(config)
        else:
            raise ConfigError(
                f"config must be an OpticalConfig, dict, or path, "
                f"got {type(config).__name__}")
        if self._config.element is None:
            raise ConfigError(
                "bindings require a config with a freeform or annular element")
        self._mask_sigma = float(mask_sigma)
        self._engine = PsfEngine(self._config)
        self._params = np.asarray(self._config.element.params, dtype=float)
        _, self._edges = wl.depth_bins(min(self._config.depth_bins),
                                       max(self._config.depth_bins),
                                       len(self._config.depth_bins))
        self._stack = None
        self._tape = None

    @property
    def config(self) -> wl.OpticalConfig:
        return self._config

    @property
    def num_params(self) -> int:
        return self._params.size

    def get_params(self) -> np.ndarray:
        """Current element parameters in meters of sag (a copy)."""
        return self._params.copy()

    def set_params(self, params) -> None:
        """Replace the element parameters; invalidates cached state."""
        params = np.asarray(params, dtype=float)
        if params.shape != self._params.shape:
            raise ConfigError(
                f"expected {self._params.shape[0]} parameters, "
                f"got shape {params.shape}")
        if not np.all(np.isfinite(params)):
            raise ConfigError("parameters must be finite")
        self._params = params.copy()
        self._stack = None
        self._tape = None

    def psf_stack(self) -> wl.PSFStack:
        """The PSF stack at the current parameters (cached)."""
        if self._stack is None:
            self._stack = self._engine.stack(params=self._params)
        return self._stack

    def forward(self, image: np.ndarray, depth: np.ndarray) -> np.ndarray:
        """Render the sensor image; tapes (image, masks) for backward.

        `image` is (H, W, 3) in [0, 1] channel-last, `depth` is (H, W) in
        meters, float32 or float64. Output is float64 and numerically
        identical to the core render for the same configuration.
        """
        image = np.ascontiguousarray(image, dtype=float)
        depth = np.ascontiguousarray(depth, dtype=float)
        if image.ndim != 3 or image.shape[2] != 3:
            raise ConfigError(f"image must be (H, W, 3), got {image.shape}")
        if depth.shape != image.shape[:2]:
            raise ConfigError(
                f"depth shape {depth.shape} does not match image "
                f"{image.shape[:2]}")
        if np.any(depth <= 0) or not np.all(np.isfinite(depth)):
            raise ConfigError("depth map must be positive and finite")
        masks = wl.layer_masks(depth, self._edges, sigma=self._mask_sigma)
        out = wl.render(image, masks, self.psf_stack())
        self._tape = (image, masks)
        return out

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        """Parameter gradient of Σ upstream ⊙ forward-output.

        Requires a preceding `forward` on this instance (tape semantics).
        Returns d loss / d params in 1/meter-of-sag, matching the core
        adjoint exactly.
        """
        if self._tape is None:
            raise ConfigError("no taped forward pass")
        image, masks = self._tape
        upstream = np.ascontiguousarray(upstream, dtype=float)
        if upstream.shape != image.shape:
            raise ConfigError(
                f"upstream shape {upstream.shape} does not match the taped "
                f"forward input {image.shape}")
        grad = wl.grad_render(image, masks, self._config, upstream,
                              engine=self._engine, params=self._params)
        return grad.grad
