"""Canonical camera configurations for the two benchmark scenes.

`nyu`: f/8, 50 mm singlet focused to 1 m, depths 0.7-7 m.
`kitti`: f/8, 80 mm singlet focused to 7.6 m, depths 2-50 m.

Six optical models are available per scene: all_in_focus, defocus,
astigmatism (both achromatic), chromatic, annular, and freeform (both
dispersive). The astigmatism model sets Noll mode 6 to two design
wavelengths of sag at the aperture edge; an optional spherical knob adds
Noll mode 11 for matching a physical lens.
"""

from __future__ import annotations

import numpy as np

from .config import (ACHROMATIC, AnnularSurface, DispersionModel,
                     FreeformSurface, LensPrescription, OpticalConfig)
from .errors import ConfigError
from .formation import depth_bins
from .grids import GridSpec
from .zernike import N_MODES

PRESET_NAMES = ("all_in_focus", "defocus", "astigmatism", "chromatic",
                "annular", "freeform")
SCENES = ("nyu", "kitti")

# Grid defaults are chosen so the converging pupil wavefront stays below
# the sampling limit (pitch <= λ s / D with defocus margin); coarser grids
# alias the pupil chirp and scatter most of the PSF energy off-axis.
_SCENE = {
    "nyu": dict(focal_length=0.050, focus_distance=1.0, d_min=0.7, d_max=7.0,
                n=2048, pitch=3.5e-6, crop_size=128),
    "kitti": dict(focal_length=0.080, focus_distance=7.6, d_min=2.0, d_max=50.0,
                  n=4096, pitch=3.5e-6, crop_size=160),
}


def scene_lens(scene: str = "nyu", dispersion: DispersionModel | None = None,
               f_number: float = 8.0) -> LensPrescription:
    if scene not in _SCENE:
        raise ConfigError(f"unknown scene {scene!r}; choose from {SCENES}")
    info = _SCENE[scene]
    return LensPrescription(
        focal_length=info["focal_length"],
        aperture_diameter=info["focal_length"] / f_number,
        dispersion=dispersion or DispersionModel(),
    )


def make_preset(name: str, scene: str = "nyu", n: int | None = None,
                pitch: float | None = None, bins: int = 12,
                crop_size: int | None = None, f_number: float = 8.0,
                spherical: float = 0.0,
                astigmatism_sag: float | None = None) -> OpticalConfig:
    """Build one of the six optical models as a simulation config.

    `spherical` is meters of Noll-11 sag added to any freeform-element
    preset (astigmatism/freeform). `astigmatism_sag` overrides the default
    2-λ astigmatism coefficient. Grid overrides are the caller's
    responsibility to keep below the pupil sampling limit.
    """
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    if scene not in _SCENE:
        raise ConfigError(f"unknown scene {scene!r}; choose from {SCENES}")
    info = _SCENE[scene]
    n = n if n is not None else info["n"]
    pitch = pitch if pitch is not None else info["pitch"]
    crop_size = crop_size if crop_size is not None else min(info["crop_size"], n)
    grid = GridSpec(n=n, pitch=pitch)
    centers, _ = depth_bins(info["d_min"], info["d_max"], bins)

    achromatic = name in ("defocus", "astigmatism", "all_in_focus")
    dispersion = ACHROMATIC if achromatic else DispersionModel()
    lens = scene_lens(scene, dispersion=dispersion, f_number=f_number)
    radius = lens.aperture_diameter / 2.0

    element = None
    if name in ("astigmatism", "freeform"):
        coeffs = np.zeros(N_MODES)
        if name == "astigmatism":
            sag = (astigmatism_sag if astigmatism_sag is not None
                   else 2.0 * dispersion.lambda_design)
            coeffs[5] = sag  # Noll 6
        if spherical:
            coeffs[10] = spherical  # Noll 11
        element = FreeformSurface(coeffs=tuple(coeffs), norm_radius=radius,
                                  material=dispersion)
    elif name == "annular":
        element = AnnularSurface.equal_area(radius, material=dispersion)

    return OpticalConfig(
        lens=lens,
        element=element,
        focus_distance=info["focus_distance"],
        grid=grid,
        depth_bins=tuple(centers),
        crop_size=crop_size,
        all_in_focus=(name == "all_in_focus"),
    )


def make_fast_preset(name: str, scene: str = "nyu", bins: int = 6) -> OpticalConfig:
    """Desk-scale variant: f/22 stop and a 256-sample grid.

    Stopping the aperture down keeps the pupil wavefront below the
    sampling limit on the small grid, so optimization and trend tests run
    quickly on physically valid PSFs.
    """
    return make_preset(name, scene=scene, n=256, pitch=10e-6, bins=bins,
                       crop_size=64, f_number=22.0)
