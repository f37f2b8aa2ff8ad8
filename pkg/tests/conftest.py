import hypothesis
import numpy as np
import pytest

from wavelens.config import (ACHROMATIC, DispersionModel, FreeformSurface,
                             LensPrescription, OpticalConfig)
from wavelens.grids import GridSpec

hypothesis.settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[hypothesis.HealthCheck.too_slow])
hypothesis.settings.load_profile("default")

np.seterr(all="raise", under="ignore")


def small_lens(dispersion=ACHROMATIC, f_number=22.0):
    """50 mm lens stopped down so a 256-sample grid resolves the pupil."""
    return LensPrescription(focal_length=0.050,
                            aperture_diameter=0.050 / f_number,
                            dispersion=dispersion)


def small_config(element=None, dispersion=ACHROMATIC, depths=(0.8, 1.0, 2.0),
                 n=256, pitch=10e-6, crop=64, wavelengths=None, **kwargs):
    return OpticalConfig(
        lens=small_lens(dispersion=dispersion),
        element=element,
        focus_distance=1.0,
        grid=GridSpec(n=n, pitch=pitch),
        depth_bins=depths,
        wavelengths=wavelengths or (610e-9, 530e-9, 470e-9),
        crop_size=crop,
        **kwargs,
    )


def small_freeform(coeffs=None, dispersion=None):
    coeffs = np.zeros(36) if coeffs is None else np.asarray(coeffs, float)
    return FreeformSurface(
        coeffs=tuple(coeffs),
        norm_radius=0.050 / 22.0 / 2.0,
        material=dispersion or DispersionModel(),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
