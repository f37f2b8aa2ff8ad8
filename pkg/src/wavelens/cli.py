"""Command-line interface.

Subcommands: psf, render, optimize, gradcheck, dataset. Every run writes a
manifest.json echoing the fully-resolved configuration so published runs
reproduce exactly. Errors print machine-readable JSON to stderr and map to
exit codes: 2 config, 3 numerical, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adjoint import finite_difference_check
from .config import config_to_dict, load_config, save_config
from .dataset import RectanglesParams, generate_dataset, load_rgbd
from .errors import ConfigError, DataError, NumericalError, WavelensError
from .formation import (DEFAULT_MASK_SIGMA, layer_masks, render, srgb_encode)
from .imageio import save_psf_stack, write_pfm, write_png
from .optics import PsfEngine
from .optimize import Objective, correlation_term, loss_and_grad, optimize
from .presets import PRESET_NAMES, SCENES, make_preset

THREADS_ENV = "WAVELENS_THREADS"


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    return 1


def _resolve_config(args):
    if getattr(args, "config", None):
        return load_config(args.config)
    kwargs = {}
    for name in ("n", "pitch", "bins", "crop_size", "f_number"):
        value = getattr(args, name, None)
        if value is not None:
            kwargs[name] = value
    return make_preset(args.preset, scene=args.scene, **kwargs)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, subcommand: str, config_dict, seed, started,
                    outputs, extra=None) -> None:
    manifest = {
        "tool": "wavelens",
        "version": __version__,
        "subcommand": subcommand,
        "seed": seed,
        "started": started,
        "finished": _utc_now(),
        "config": config_dict,
        "outputs": sorted(outputs),
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _tonemap_montage(stack) -> np.ndarray:
    """Non-quantitative preview: per-slice max normalization, depth×channel tiles."""
    num_depths, _, p, _ = stack.psfs.shape
    tiles = np.zeros((num_depths * p, 3 * p))
    for j in range(num_depths):
        for c in range(3):
            s = stack.psfs[j, c]
            peak = s.max()
            tiles[j * p:(j + 1) * p, c * p:(c + 1) * p] = s / peak if peak > 0 else s
    return (np.clip(tiles, 0, 1) * 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_psf(args) -> int:
    started = _utc_now()
    config = _resolve_config(args)
    out = _out_dir(args)
    threads = _resolve_threads(args)
    stack = PsfEngine(config).stack(threads=threads)
    manifest = save_psf_stack(out, stack)
    write_png(out / "preview.png", _tonemap_montage(stack))
    outputs = [e["file"] for e in manifest["files"]] + ["preview.png", "stack.json"]
    save_config(config, out / "config.json")
    outputs.append("config.json")
    _write_manifest(out, "psf", config_to_dict(config), getattr(args, "seed", None),
                    started, outputs)
    return 0


def cmd_render(args) -> int:
    started = _utc_now()
    config = _resolve_config(args)
    out = _out_dir(args)
    sample = load_rgbd(args.rgb, args.depth, depth_scale=args.depth_scale)
    threads = _resolve_threads(args)
    stack = PsfEngine(config).stack(threads=threads)
    from .formation import depth_bins as make_bins
    # bin edges from the config's depth range (uniform in inverse depth)
    depths = config.depth_bins
    _, edges = make_bins(min(depths), max(depths), len(depths))
    masks = layer_masks(sample.depth, edges, sigma=args.mask_sigma)
    image = render(sample.rgb, masks, stack)
    write_pfm(out / "sensor.pfm", image.astype(np.float32))
    write_png(out / "sensor.png", srgb_encode(image))
    outputs = ["sensor.pfm", "sensor.png"]
    if args.debug_masks:
        for j in range(masks.num_layers):
            name = f"mask_{j:02d}.pfm"
            write_pfm(out / name, masks.weights[j].astype(np.float32))
            outputs.append(name)
    _write_manifest(out, "render", config_to_dict(config), None, started, outputs,
                    extra={"rgb": str(args.rgb), "depth": str(args.depth),
                           "mask_sigma": args.mask_sigma})
    return 0


def cmd_optimize(args) -> int:
    started = _utc_now()
    if not args.config and args.init == "annular":
        args.preset = "annular"
    config = _resolve_config(args)
    if config.element is None:
        raise ConfigError(
            "optimization requires a config with a freeform or annular element")
    out = _out_dir(args)
    objective = Objective(w_correlation=args.w_correlation,
                          w_concentration=args.w_concentration)

    before = PsfEngine(config).stack()
    save_psf_stack(out / "stack_before", before)

    best_params, history = optimize(
        config, objective=objective, init=args.init, iters=args.iters,
        seed=args.seed, lr=args.lr, snapshot_interval=args.snapshot_interval,
        coarse_to_fine=args.coarse_to_fine)

    final_config = config.with_element_params(tuple(best_params))
    after = PsfEngine(final_config).stack()
    save_psf_stack(out / "stack_after", after)

    (out / "params.json").write_text(json.dumps({
        "params_meters": [float(p) for p in best_params],
        "init": args.init,
        "best_loss": history.best_loss,
        "best_iteration": history.best_iteration,
    }, indent=2) + "\n")
    (out / "history.json").write_text(
        json.dumps(history.to_dict(), indent=2) + "\n")
    with open(out / "loss_curve.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["iteration", "loss", "correlation_term"])
        for i, (loss, ncc) in enumerate(zip(history.losses,
                                            history.correlation_terms)):
            writer.writerow([i, repr(loss), repr(ncc)])
    save_config(final_config, out / "config.json")
    outputs = ["params.json", "history.json", "loss_curve.csv", "config.json",
               "stack_before/stack.json", "stack_after/stack.json"]
    _write_manifest(out, "optimize", config_to_dict(config), args.seed, started,
                    outputs, extra={"iters": args.iters, "lr": args.lr,
                                    "init": args.init})
    return 0


def cmd_gradcheck(args) -> int:
    started = _utc_now()
    if args.config:
        config = load_config(args.config)
    else:
        preset = "freeform" if args.element == "freeform" else "annular"
        config = make_preset(preset, scene=args.scene, n=args.n,
                             pitch=args.pitch, bins=args.bins)
    if config.element is None:
        raise ConfigError("gradcheck requires a config with an optimizable element")
    out = _out_dir(args)
    rng = np.random.default_rng(args.seed)
    params = rng.uniform(-args.magnitude, args.magnitude, config.n_params)

    engine = PsfEngine(config)
    objective = Objective()
    _, analytic, _ = loss_and_grad(engine, params, objective)

    from .optimize import discriminability_loss

    def loss_fn(p):
        return discriminability_loss(engine.stack(params=p), objective)

    report = finite_difference_check(loss_fn, analytic, params, h=args.h)
    payload = report.to_dict(threshold=args.threshold)
    payload["config"] = config_to_dict(config)
    payload["seed"] = args.seed
    (out / "gradcheck.json").write_text(json.dumps(payload, indent=2) + "\n")
    _write_manifest(out, "gradcheck", config_to_dict(config), args.seed, started,
                    ["gradcheck.json"],
                    extra={"max_rel_error": report.max_rel_error,
                           "passed": report.passed(args.threshold)})
    print(json.dumps({"max_rel_error": report.max_rel_error,
                      "passed": report.passed(args.threshold)}))
    return 0 if report.passed(args.threshold) else 3


def cmd_dataset(args) -> int:
    started = _utc_now()
    out = _out_dir(args)
    params = RectanglesParams(
        height=args.height, width=args.width, k_min=args.k_min, k_max=args.k_max,
        side_min=args.side_min, side_max=args.side_max, d_min=args.d_min,
        d_max=args.d_max, count=args.count, seed=args.seed)
    dataset_manifest = generate_dataset(params, out)
    outputs = [e["rgb"] for e in dataset_manifest["samples"]]
    outputs += [e["depth"] for e in dataset_manifest["samples"]]
    outputs.append("manifest.json")
    # single manifest carrying both the dataset declaration and the run record
    _write_manifest(out, "dataset", params.to_dict(), args.seed, started,
                    outputs, extra=dataset_manifest)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(sub, seed_required=False):
    sub.add_argument("--config", help="OpticalConfig JSON path")
    sub.add_argument("--preset", default="chromatic", choices=PRESET_NAMES,
                     help="built-in optical model (ignored with --config)")
    sub.add_argument("--scene", default="nyu", choices=SCENES)
    sub.add_argument("--n", type=int, default=None, help="grid samples per side")
    sub.add_argument("--pitch", type=float, default=None,
                     help="grid pitch in meters")
    sub.add_argument("--bins", type=int, default=None, help="depth bin count")
    sub.add_argument("--crop-size", dest="crop_size", type=int, default=None)
    sub.add_argument("--f-number", dest="f_number", type=float, default=None)
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--threads", type=int, default=None,
                     help=f"worker threads (default 1 or ${THREADS_ENV})")
    if seed_required:
        sub.add_argument("--seed", type=int, required=True)
    else:
        sub.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavelens",
        description="Wave-optics camera simulation and lens optimization")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p_psf = subs.add_parser("psf", help="simulate a PSF stack")
    _add_common(p_psf)
    p_psf.set_defaults(func=cmd_psf)

    p_render = subs.add_parser("render", help="render a sensor image")
    _add_common(p_render)
    p_render.add_argument("--rgb", required=True, help="input sRGB PNG")
    p_render.add_argument("--depth", required=True, help="input depth (PFM or PNG16)")
    p_render.add_argument("--depth-scale", dest="depth_scale", type=float,
                          default=None, help="meters per unit for PNG16 depth")
    p_render.add_argument("--mask-sigma", dest="mask_sigma", type=float,
                          default=DEFAULT_MASK_SIGMA)
    p_render.add_argument("--debug-masks", dest="debug_masks", action="store_true")
    p_render.set_defaults(func=cmd_render)

    p_opt = subs.add_parser("optimize", help="optimize element parameters")
    _add_common(p_opt, seed_required=True)
    p_opt.add_argument("--init", default="defocus",
                       choices=("defocus", "astigmatism", "annular"))
    p_opt.add_argument("--iters", type=int, default=500)
    p_opt.add_argument("--lr", type=float, default=1e-3)
    p_opt.add_argument("--w-correlation", dest="w_correlation", type=float,
                       default=1.0)
    p_opt.add_argument("--w-concentration", dest="w_concentration", type=float,
                       default=0.1)
    p_opt.add_argument("--snapshot-interval", dest="snapshot_interval", type=int,
                       default=0)
    p_opt.add_argument("--coarse-to-fine", dest="coarse_to_fine",
                       action="store_true")
    p_opt.set_defaults(func=cmd_optimize, preset="freeform")

    p_grad = subs.add_parser("gradcheck", help="verify analytic gradients")
    _add_common(p_grad)
    p_grad.add_argument("--element", default="freeform",
                        choices=("freeform", "annular"))
    p_grad.add_argument("--magnitude", type=float, default=1e-6,
                        help="random coefficient magnitude in meters")
    p_grad.add_argument("--h", type=float, default=1e-9,
                        help="finite-difference step in meters")
    p_grad.add_argument("--threshold", type=float, default=1e-4)
    # n=128 needs 64 um pitch for the extent to clear the f/8 aperture; the
    # full grid is kept as the PSF window
    p_grad.set_defaults(func=cmd_gradcheck, n=128, bins=4, pitch=64e-6,
                        crop_size=128)

    p_data = subs.add_parser("dataset", help="generate the Rectangles dataset")
    p_data.add_argument("--out", required=True)
    p_data.add_argument("--seed", type=int, required=True)
    p_data.add_argument("--count", type=int, default=100)
    p_data.add_argument("--height", type=int, default=128)
    p_data.add_argument("--width", type=int, default=128)
    p_data.add_argument("--k-min", dest="k_min", type=int, default=1)
    p_data.add_argument("--k-max", dest="k_max", type=int, default=5)
    p_data.add_argument("--side-min", dest="side_min", type=int, default=16)
    p_data.add_argument("--side-max", dest="side_max", type=int, default=64)
    p_data.add_argument("--d-min", dest="d_min", type=float, default=1.0)
    p_data.add_argument("--d-max", dest="d_max", type=float, default=5.0)
    p_data.set_defaults(func=cmd_dataset)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WavelensError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__,
                                     "message": str(exc)}) + "\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "OSError",
                                     "message": str(exc)}) + "\n")
        return DataError.exit_code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
