"""Depth- and wavelength-dependent PSF simulation for a thin singlet.

A point source at depth z produces a spherical wave at the lens plane; the
lens and any freeform/annular element apply their phase, the aperture
clips, and the field propagates to the sensor with the exact transfer
function. The squared magnitude, cropped and normalized, is the PSF.

Conventions: complex128 fields on a centered grid (DC at index n//2),
orthonormal FFTs so propagation is exactly unitary on the sampled band.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import zernike
from .config import AnnularSurface, FreeformSurface, OpticalConfig
from .errors import ConfigError, NumericalError
from .grids import GridSpec

# Fraction of on-grid energy the cropped window must retain.
MIN_CROP_ENERGY = 0.95


def _fft_centered(u: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(u), norm="ortho"))


def _ifft_centered(u: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(u), norm="ortho"))


@dataclass(frozen=True)
class WavefrontField:
    """Complex scalar field sampled on `grid` at one wavelength."""

    grid: GridSpec
    wavelength: float
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ConfigError(
                f"field shape {self.values.shape} does not match grid n={self.grid.n}")
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("wavefront field contains non-finite values")

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))


def spherical_wave(grid: GridSpec, z: float, wavelength: float) -> WavefrontField:
    """Unit-modulus spherical wave from an on-axis point source at depth z."""
    if z <= 0:
        raise ConfigError(f"source depth must be positive, got {z}")
    k = 2.0 * np.pi / wavelength
    phase = k * np.sqrt(grid.radius_sq() + z * z)
    return WavefrontField(grid, wavelength, np.exp(1j * phase))


def lens_phase(grid: GridSpec, lens, wavelength: float) -> np.ndarray:
    """Quadratic phase of the thin lens in radians.

    Dispersion enters through the wavelength-dependent focal length; the
    constant center-thickness offset is dropped.
    """
    k = 2.0 * np.pi / wavelength
    f_lam = lens.focal_length_at(wavelength)
    return -(k / (2.0 * f_lam)) * grid.radius_sq()


def aperture(grid: GridSpec, diameter: float) -> np.ndarray:
    """Binary amplitude mask of the circular aperture (1 inside, 0 outside)."""
    if diameter > grid.extent:
        raise ConfigError(
            f"aperture exceeds simulation grid: diameter {diameter} m, "
            f"grid extent {grid.extent} m")
    return (grid.radius_sq() <= (diameter / 2.0) ** 2).astype(float)


def element_sag(element, grid: GridSpec) -> np.ndarray:
    """Surface sag profile Δ(x, y) in meters for a freeform/annular element."""
    if isinstance(element, FreeformSurface):
        x, y = grid.coords()
        basis = zernike.basis_stack(x, y, element.norm_radius)
        return np.tensordot(element.params, basis, axes=1)
    if isinstance(element, AnnularSurface):
        basis = annular_basis(element, grid)
        return np.tensordot(element.params, basis, axes=1)
    raise ConfigError(f"unsupported element type {type(element).__name__}")


def annular_basis(element: AnnularSurface, grid: GridSpec) -> np.ndarray:
    """Indicator map per ring, shaped (3, n, n)."""
    r = np.sqrt(grid.radius_sq())
    r1, r2, r3 = element.ring_radii
    return np.stack([
        (r <= r1).astype(float),
        ((r > r1) & (r <= r2)).astype(float),
        ((r > r2) & (r <= r3)).astype(float),
    ])


def surface_phase(element, grid: GridSpec, wavelength: float) -> np.ndarray:
    """Phase k (n_ff(λ) − 1) Δ(x, y) imparted by the element, in radians."""
    k = 2.0 * np.pi / wavelength
    n_ff = element.material.index(wavelength)
    return k * (n_ff - 1.0) * element_sag(element, grid)


def transfer_function(grid: GridSpec, wavelength: float, distance: float) -> np.ndarray:
    """Exact free-space transfer function on the centered frequency grid.

    Evanescent components ((λ f_x)² + (λ f_y)² >= 1) are zeroed, keeping the
    function unit-modulus-or-zero.
    """
    fx, fy = grid.freqs()
    k = 2.0 * np.pi / wavelength
    arg = 1.0 - (wavelength * fx) ** 2 - (wavelength * fy) ** 2
    propagating = arg > 0.0
    h = np.exp(1j * k * distance * np.sqrt(np.where(propagating, arg, 0.0)))
    return np.where(propagating, h, 0.0)


def propagate(field: WavefrontField, distance: float) -> WavefrontField:
    """Angular-spectrum propagation of the field over `distance` meters."""
    if distance < 0:
        raise ConfigError(f"propagation distance must be >= 0, got {distance}")
    h = transfer_function(field.grid, field.wavelength, distance)
    out = _ifft_centered(_fft_centered(field.values) * h)
    return WavefrontField(field.grid, field.wavelength, out)


# ---------------------------------------------------------------------------
# PSF engine: caches everything that does not depend on element parameters
# ---------------------------------------------------------------------------

class PsfEngine:
    """Forward PSF model for one OpticalConfig with cached static factors.

    The aperture, lens phase, transfer functions, element basis maps, and
    per-depth input waves do not change while element parameters vary, so
    optimization and finite differencing reuse them. All results are
    independent of caching and evaluation order.
    """

    def __init__(self, config: OpticalConfig):
        grid = config.grid
        if config.lens.aperture_diameter >= grid.extent:
            raise ConfigError(
                f"aperture exceeds simulation grid: diameter "
                f"{config.lens.aperture_diameter} m, grid extent {grid.extent} m")
        self.config = config
        self.grid = grid
        self._r_sq = grid.radius_sq()
        self._aperture = aperture(grid, config.lens.aperture_diameter)
        # A · exp(i φ_lens) per wavelength
        self._static = {}
        self._transfer = {}
        for lam in config.wavelengths:
            self._static[lam] = self._aperture * np.exp(
                1j * lens_phase(grid, config.lens, lam))
            self._transfer[lam] = transfer_function(grid, lam,
                                                    config.sensor_distance)
        self._u_in: dict[float, np.ndarray] = {}
        self.basis = self._build_basis()

    def _build_basis(self) -> np.ndarray | None:
        element = self.config.element
        if element is None:
            return None
        if isinstance(element, FreeformSurface):
            x, y = self.grid.coords()
            return zernike.basis_stack(x, y, element.norm_radius)
        return annular_basis(element, self.grid)

    def phase_scale(self, wavelength: float) -> float:
        """dφ/dsag = k (n_ff − 1) for the element material."""
        element = self.config.element
        if element is None:
            return 0.0
        k = 2.0 * np.pi / wavelength
        return k * (element.material.index(wavelength) - 1.0)

    def path_length(self, z: float) -> np.ndarray:
        """√(x² + y² + z²), cached per depth (wavelength-independent)."""
        if z not in self._u_in:
            if z <= 0:
                raise ConfigError(f"source depth must be positive, got {z}")
            self._u_in[z] = np.sqrt(self._r_sq + z * z)
        return self._u_in[z]

    def pupil_field(self, z: float, wavelength: float,
                    params: np.ndarray | None = None,
                    sag: np.ndarray | None = None) -> np.ndarray:
        """Field right after lens + element + aperture (A · t_lens · t_ff · U_in)."""
        k = 2.0 * np.pi / wavelength
        u = self._static[wavelength] * np.exp(1j * k * self.path_length(z))
        if sag is None:
            sag = self.sag(params)
        if sag is not None:
            u = u * np.exp(1j * self.phase_scale(wavelength) * sag)
        return u

    def sag(self, params: np.ndarray | None = None) -> np.ndarray | None:
        if self.config.element is None:
            return None
        p = self.config.element.params if params is None else np.asarray(params, float)
        return np.tensordot(p, self.basis, axes=1)

    def crop_slices(self) -> tuple[slice, slice]:
        n, p = self.grid.n, self.config.crop_size
        c0 = n // 2 - p // 2
        return slice(c0, c0 + p), slice(c0, c0 + p)

    def psf_forward(self, z: float, wavelength: float,
                    params: np.ndarray | None = None, keep_tape: bool = False,
                    sag: np.ndarray | None = None):
        """Cropped, normalized PSF; optionally the tape of intermediates."""
        u_out = self.pupil_field(z, wavelength, params, sag=sag)
        u_sensor = _ifft_centered(_fft_centered(u_out) * self._transfer[wavelength])
        intensity = u_sensor.real**2 + u_sensor.imag**2
        rows, cols = self.crop_slices()
        window = intensity[rows, cols]
        total = float(intensity.sum())
        retained = float(window.sum()) / total
        if retained < MIN_CROP_ENERGY:
            raise NumericalError(
                f"PSF crop too small: retained {retained:.4f} of on-grid energy "
                f"(z={z} m, λ={wavelength} m, crop={self.config.crop_size})")
        window_sum = float(window.sum())
        if self.config.normalize_psf:
            psf_out = window / window_sum
        else:
            psf_out = window.copy()
        if not keep_tape:
            return psf_out
        tape = SliceTape(z=z, wavelength=wavelength, u_out=u_out,
                         u_sensor=u_sensor, window_sum=window_sum, psf=psf_out)
        return psf_out, tape

    def stack(self, params: np.ndarray | None = None,
              threads: int = 1) -> "PSFStack":
        """PSFs for every (depth bin, wavelength); deterministic layout."""
        cfg = self.config
        depths = cfg.depth_bins
        p = cfg.crop_size
        if cfg.all_in_focus:
            return PSFStack.delta(depths, cfg.wavelengths, p, self.grid.pitch)
        psfs = np.empty((len(depths), 3, p, p), dtype=float)
        jobs = [(j, c) for j in range(len(depths)) for c in range(3)]
        sag = self.sag(params)

        def run(job):
            j, c = job
            try:
                return j, c, self.psf_forward(depths[j], cfg.wavelengths[c],
                                              sag=sag)
            except NumericalError as exc:
                raise NumericalError(f"slice (j={j}, c={c}): {exc}") from exc

        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for j, c, out in pool.map(run, jobs):
                    psfs[j, c] = out
        else:
            for job in jobs:
                j, c, out = run(job)
                psfs[j, c] = out
        return PSFStack(psfs=psfs, depths=depths, wavelengths=cfg.wavelengths,
                        pitch=self.grid.pitch)


@dataclass
class SliceTape:
    """Cached forward intermediates for one PSF slice's reverse sweep."""

    z: float
    wavelength: float
    u_out: np.ndarray
    u_sensor: np.ndarray
    window_sum: float
    psf: np.ndarray


@dataclass(frozen=True)
class PSFStack:
    """Intensity PSFs indexed (depth bin j, channel c), each P×P."""

    psfs: np.ndarray  # (J, 3, P, P)
    depths: tuple
    wavelengths: tuple
    pitch: float

    def __post_init__(self):
        if self.psfs.ndim != 4 or self.psfs.shape[1] != 3:
            raise ConfigError(f"PSF stack must be (J, 3, P, P), got {self.psfs.shape}")
        if not np.all(np.isfinite(self.psfs)) or np.any(self.psfs < 0):
            raise NumericalError("PSF stack entries must be finite and >= 0")

    @property
    def num_depths(self) -> int:
        return self.psfs.shape[0]

    @property
    def crop_size(self) -> int:
        return self.psfs.shape[-1]

    @classmethod
    def delta(cls, depths, wavelengths, crop_size: int, pitch: float) -> "PSFStack":
        """All-in-focus stack: every slice a discrete delta at the axis."""
        psfs = np.zeros((len(depths), 3, crop_size, crop_size))
        psfs[:, :, crop_size // 2, crop_size // 2] = 1.0
        return cls(psfs=psfs, depths=tuple(depths), wavelengths=tuple(wavelengths),
                   pitch=pitch)


def psf(config: OpticalConfig, z: float, wavelength: float) -> np.ndarray:
    """Single cropped PSF at depth z and one wavelength."""
    return PsfEngine(config).psf_forward(z, wavelength)


def psf_stack(config: OpticalConfig, threads: int = 1) -> PSFStack:
    """PSFs for all configured depth bins and the RGB wavelengths."""
    return PsfEngine(config).stack(threads=threads)
