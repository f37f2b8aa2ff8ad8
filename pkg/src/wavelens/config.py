"""Lens prescriptions, optical elements, and the simulation configuration.

All quantities are SI (meters). Configurations are frozen dataclasses and
serialize to/from a documented JSON schema (see README).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grids import GridSpec
from .zernike import N_MODES


def sensor_distance_for_focus(focal_length: float, focus_distance: float) -> float:
    """Sensor distance s with 1/f = 1/d + 1/s for a lens focused at d.

    `focus_distance` may be math.inf (object at infinity focuses at f).
    """
    if focal_length <= 0:
        raise ConfigError(f"focal length must be positive, got {focal_length}")
    if math.isinf(focus_distance):
        return focal_length
    if focus_distance <= focal_length:
        raise ConfigError(
            "focus distance must exceed focal length "
            f"(d={focus_distance} m, f={focal_length} m)"
        )
    return 1.0 / (1.0 / focal_length - 1.0 / focus_distance)


@dataclass(frozen=True)
class DispersionModel:
    """Refractive index vs. wavelength.

    'achromatic' holds n constant; 'cauchy' uses a two-term Cauchy law
    n(λ) = n_design + b (1/λ² − 1/λ_design²). Defaults are BK7-like.
    """

    mode: str = "cauchy"
    n_design: float = 1.52
    cauchy_b: float = 4.2e-15  # m^2
    lambda_design: float = 530e-9

    def __post_init__(self):
        if self.mode not in ("achromatic", "cauchy"):
            raise ConfigError(f"unknown dispersion mode {self.mode!r}")
        if self.n_design <= 1.0:
            raise ConfigError(f"design index must exceed 1, got {self.n_design}")
        if self.lambda_design <= 0:
            raise ConfigError("design wavelength must be positive")

    def index(self, wavelength: float) -> float:
        if self.mode == "achromatic":
            return self.n_design
        return self.n_design + self.cauchy_b * (
            1.0 / wavelength**2 - 1.0 / self.lambda_design**2
        )


ACHROMATIC = DispersionModel(mode="achromatic")


@dataclass(frozen=True)
class LensPrescription:
    """Thin singlet: focal length at the design wavelength plus aperture."""

    focal_length: float
    aperture_diameter: float
    dispersion: DispersionModel = field(default_factory=DispersionModel)

    def __post_init__(self):
        if self.focal_length <= 0:
            raise ConfigError(f"focal length must be positive, got {self.focal_length}")
        if self.aperture_diameter <= 0:
            raise ConfigError(
                f"aperture diameter must be positive, got {self.aperture_diameter}"
            )

    @property
    def f_number(self) -> float:
        return self.focal_length / self.aperture_diameter

    def focal_length_at(self, wavelength: float) -> float:
        """Wavelength-dependent focal length from the fixed thickness profile.

        f(λ) = f0 (n(λ_design) − 1) / (n(λ) − 1); constant in achromatic mode.
        """
        if self.dispersion.mode == "achromatic":
            return self.focal_length
        n_design = self.dispersion.index(self.dispersion.lambda_design)
        n_lam = self.dispersion.index(wavelength)
        return self.focal_length * (n_design - 1.0) / (n_lam - 1.0)


@dataclass(frozen=True)
class FreeformSurface:
    """Zernike-parameterized sag profile added in front of the lens.

    `coeffs` are meters of surface sag per Noll mode (exactly 36).
    """

    coeffs: tuple
    norm_radius: float
    material: DispersionModel = field(default_factory=DispersionModel)

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(coeffs) != N_MODES:
            raise ConfigError(f"freeform surface needs {N_MODES} coefficients, "
                              f"got {len(coeffs)}")
        if not all(math.isfinite(c) for c in coeffs):
            raise ConfigError("freeform coefficients must be finite")
        if self.norm_radius <= 0:
            raise ConfigError("normalization radius must be positive")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def params(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def with_params(self, params) -> "FreeformSurface":
        return replace(self, coeffs=tuple(float(p) for p in params))


@dataclass(frozen=True)
class AnnularSurface:
    """Piecewise-constant sag over three concentric rings."""

    heights: tuple
    ring_radii: tuple
    material: DispersionModel = field(default_factory=DispersionModel)

    def __post_init__(self):
        heights = tuple(float(h) for h in self.heights)
        radii = tuple(float(r) for r in self.ring_radii)
        if len(heights) != 3 or len(radii) != 3:
            raise ConfigError("annular surface needs 3 heights and 3 ring radii")
        if not (0 < radii[0] < radii[1] < radii[2]):
            raise ConfigError(f"ring radii must be increasing and positive: {radii}")
        if not all(math.isfinite(h) for h in heights):
            raise ConfigError("ring heights must be finite")
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "ring_radii", radii)

    @classmethod
    def equal_area(cls, aperture_radius: float, heights=(0.0, 0.0, 0.0),
                   material: DispersionModel | None = None) -> "AnnularSurface":
        """Rings of equal area: r1 = R/√3, r2 = R√(2/3), r3 = R."""
        r = aperture_radius
        radii = (r / math.sqrt(3.0), r * math.sqrt(2.0 / 3.0), r)
        return cls(heights=tuple(heights), ring_radii=radii,
                   material=material or DispersionModel())

    @property
    def params(self) -> np.ndarray:
        return np.asarray(self.heights, dtype=float)

    def with_params(self, params) -> "AnnularSurface":
        return replace(self, heights=tuple(float(p) for p in params))


@dataclass(frozen=True)
class OpticalConfig:
    """Complete prescription for PSF simulation.

    `sensor_distance=None` derives s from the thin-lens equation at the
    design focus. `depth_bins` are the scene depths at which PSFs are
    simulated. `crop_size` is the sensor-window side P; every cropped PSF
    is normalized to unit sum unless `normalize_psf` is False.
    `all_in_focus` replaces every PSF with a discrete delta (degenerate
    reference model).
    """

    lens: LensPrescription
    focus_distance: float
    grid: GridSpec
    depth_bins: tuple
    element: FreeformSurface | AnnularSurface | None = None
    wavelengths: tuple = (610e-9, 530e-9, 470e-9)
    sensor_distance: float | None = None
    crop_size: int = 64
    normalize_psf: bool = True
    all_in_focus: bool = False

    def __post_init__(self):
        depths = tuple(float(z) for z in self.depth_bins)
        if len(depths) == 0:
            raise ConfigError("depth_bins must not be empty")
        if any(z <= 0 for z in depths):
            raise ConfigError("all depth bins must be positive")
        diffs = np.diff(depths)
        if len(depths) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ConfigError("depth bins must be strictly monotone in depth")
        object.__setattr__(self, "depth_bins", depths)

        lams = tuple(float(w) for w in self.wavelengths)
        if len(lams) != 3 or any(w <= 0 for w in lams):
            raise ConfigError("wavelengths must be a positive (R, G, B) triple")
        object.__setattr__(self, "wavelengths", lams)

        derived = sensor_distance_for_focus(self.lens.focal_length,
                                            self.focus_distance)
        if self.sensor_distance is None:
            object.__setattr__(self, "sensor_distance", derived)

        if self.crop_size < 8 or self.crop_size % 2 != 0:
            raise ConfigError(f"crop size must be even and >= 8, got {self.crop_size}")
        if self.crop_size > self.grid.n:
            raise ConfigError(
                f"crop size {self.crop_size} exceeds grid n {self.grid.n}")

        for disp in self._dispersions():
            for lam in lams:
                if disp.index(lam) <= 1.0:
                    raise ConfigError(
                        f"refractive index must exceed 1 at λ={lam} m")

    def _dispersions(self):
        yield self.lens.dispersion
        if self.element is not None:
            yield self.element.material

    @property
    def n_params(self) -> int:
        """Number of optimizable surface parameters (0 if no element)."""
        if self.element is None:
            return 0
        return len(self.element.params)

    def with_element_params(self, params) -> "OpticalConfig":
        if self.element is None:
            raise ConfigError("config has no optimizable element")
        return replace(self, element=self.element.with_params(params))


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def _dispersion_to_dict(d: DispersionModel) -> dict:
    return {"mode": d.mode, "n_design": d.n_design, "cauchy_b": d.cauchy_b,
            "lambda_design": d.lambda_design}


def _dispersion_from_dict(d: dict) -> DispersionModel:
    return DispersionModel(**d)


def config_to_dict(config: OpticalConfig) -> dict:
    """Full-default echo: every field appears explicitly."""
    element: dict = {"type": "none"}
    if isinstance(config.element, FreeformSurface):
        element = {"type": "freeform", "coeffs": list(config.element.coeffs),
                   "norm_radius": config.element.norm_radius,
                   "material": _dispersion_to_dict(config.element.material)}
    elif isinstance(config.element, AnnularSurface):
        element = {"type": "annular", "heights": list(config.element.heights),
                   "ring_radii": list(config.element.ring_radii),
                   "material": _dispersion_to_dict(config.element.material)}
    return {
        "lens": {
            "focal_length": config.lens.focal_length,
            "aperture_diameter": config.lens.aperture_diameter,
            "dispersion": _dispersion_to_dict(config.lens.dispersion),
        },
        "element": element,
        "focus_distance": config.focus_distance,
        "sensor_distance": config.sensor_distance,
        "grid": {"n": config.grid.n, "pitch": config.grid.pitch},
        "wavelengths": list(config.wavelengths),
        "depth_bins": list(config.depth_bins),
        "crop_size": config.crop_size,
        "normalize_psf": config.normalize_psf,
        "all_in_focus": config.all_in_focus,
    }


def config_from_dict(data: dict) -> OpticalConfig:
    try:
        lens_d = data["lens"]
        lens = LensPrescription(
            focal_length=lens_d["focal_length"],
            aperture_diameter=lens_d["aperture_diameter"],
            dispersion=_dispersion_from_dict(
                lens_d.get("dispersion", _dispersion_to_dict(DispersionModel()))),
        )
        elem_d = data.get("element") or {"type": "none"}
        element: FreeformSurface | AnnularSurface | None
        if elem_d["type"] == "none":
            element = None
        elif elem_d["type"] == "freeform":
            element = FreeformSurface(
                coeffs=tuple(elem_d["coeffs"]),
                norm_radius=elem_d["norm_radius"],
                material=_dispersion_from_dict(elem_d["material"]),
            )
        elif elem_d["type"] == "annular":
            element = AnnularSurface(
                heights=tuple(elem_d["heights"]),
                ring_radii=tuple(elem_d["ring_radii"]),
                material=_dispersion_from_dict(elem_d["material"]),
            )
        else:
            raise ConfigError(f"unknown element type {elem_d['type']!r}")
        return OpticalConfig(
            lens=lens,
            element=element,
            focus_distance=data["focus_distance"],
            sensor_distance=data.get("sensor_distance"),
            grid=GridSpec(n=data["grid"]["n"], pitch=data["grid"]["pitch"]),
            wavelengths=tuple(data.get("wavelengths", (610e-9, 530e-9, 470e-9))),
            depth_bins=tuple(data["depth_bins"]),
            crop_size=data.get("crop_size", 64),
            normalize_psf=data.get("normalize_psf", True),
            all_in_focus=data.get("all_in_focus", False),
        )
    except KeyError as exc:
        raise ConfigError(f"config JSON missing required key: {exc}") from exc


def save_config(config: OpticalConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n")


def load_config(path) -> OpticalConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)
