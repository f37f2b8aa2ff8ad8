"""Wave-optics camera simulation and depth-coding lens optimization."""

__version__ = "0.1.0"

from .adjoint import (FDReport, ParamGradient, finite_difference_check,
                      grad_psf, grad_render)
from .config import (ACHROMATIC, AnnularSurface, DispersionModel,
                     FreeformSurface, LensPrescription, OpticalConfig,
                     config_from_dict, config_to_dict, load_config,
                     save_config, sensor_distance_for_focus)
from .dataset import (RectanglesParams, RgbdSample, generate_dataset,
                      generate_rectangles, load_rgbd, save_sample)
from .errors import ConfigError, DataError, NumericalError, WavelensError
from .formation import (LayerMasks, depth_bins, layer_masks, quantize_depth,
                        render, soften_masks, srgb_decode, srgb_encode)
from .grids import GridSpec
from .optics import (PsfEngine, PSFStack, WavefrontField, aperture,
                     lens_phase, propagate, psf, psf_stack, spherical_wave,
                     surface_phase, transfer_function)
from .optimize import (AdamState, Objective, RunHistory, adam_step,
                       concentration_term, correlation_term,
                       discriminability_loss, loss_and_grad, optimize)
from .presets import PRESET_NAMES, SCENES, make_preset, scene_lens

__all__ = [
    "ACHROMATIC", "AdamState", "AnnularSurface", "ConfigError", "DataError",
    "DispersionModel", "FDReport", "FreeformSurface", "GridSpec",
    "LayerMasks", "LensPrescription", "NumericalError", "Objective",
    "OpticalConfig", "PRESET_NAMES", "ParamGradient", "PsfEngine", "PSFStack",
    "RectanglesParams", "RgbdSample", "RunHistory", "SCENES",
    "WavefrontField", "WavelensError", "adam_step", "aperture",
    "concentration_term", "config_from_dict", "config_to_dict",
    "correlation_term", "depth_bins", "discriminability_loss",
    "finite_difference_check", "generate_dataset", "generate_rectangles",
    "grad_psf", "grad_render", "layer_masks", "lens_phase", "load_config",
    "load_rgbd", "loss_and_grad", "make_preset", "optimize", "propagate",
    "psf", "psf_stack", "quantize_depth", "render", "save_config",
    "save_sample", "scene_lens", "sensor_distance_for_focus", "soften_masks",
    "spherical_wave", "srgb_decode", "srgb_encode", "surface_phase",
    "transfer_function",
]
