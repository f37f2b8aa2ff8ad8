"""Square sampling grids for the wave-optics simulation.

One grid serves both the lens plane and (through FFT propagation, which
preserves sample spacing) the sensor plane. Coordinates and spatial
frequencies are centered: DC sits at index n//2 along each axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class GridSpec:
    """n-by-n grid with sample spacing `pitch` (meters)."""

    n: int
    pitch: float

    def __post_init__(self):
        if self.n < 64 or self.n % 2 != 0:
            raise ConfigError(f"grid n must be even and >= 64, got {self.n}")
        if not self.pitch > 0:
            raise ConfigError(f"grid pitch must be positive, got {self.pitch}")

    @property
    def extent(self) -> float:
        """Physical side length n * pitch in meters."""
        return self.n * self.pitch

    def axis(self) -> np.ndarray:
        """Centered 1-D coordinate axis in meters (zero at index n//2)."""
        return (np.arange(self.n) - self.n // 2) * self.pitch

    def coords(self):
        """(x, y) meshgrid in meters, each shaped (n, n)."""
        c = self.axis()
        return np.meshgrid(c, c, indexing="xy")

    def radius_sq(self) -> np.ndarray:
        """x^2 + y^2 in m^2, shaped (n, n)."""
        c = self.axis()
        return c[None, :] ** 2 + c[:, None] ** 2

    def freq_axis(self) -> np.ndarray:
        """Centered spatial-frequency axis in cycles/m (DC at index n//2)."""
        return (np.arange(self.n) - self.n // 2) / (self.n * self.pitch)

    def freqs(self):
        """(f_x, f_y) meshgrid in cycles/m."""
        f = self.freq_axis()
        return np.meshgrid(f, f, indexing="xy")
