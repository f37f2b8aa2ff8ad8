"""PFM and PNG readers/writers plus PSF-stack serialization.

PFM follows the de-facto standard: 'PF' (color) or 'Pf' (grayscale)
header, width/height line, negative scale for little-endian float32, and
scanlines stored bottom-to-top.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError
from .optics import PSFStack

CHANNEL_NAMES = ("R", "G", "B")


def write_pfm(path, data: np.ndarray) -> None:
    """Write a (H, W) or (H, W, 3) float array as little-endian PFM."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        ident = b"Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        ident = b"PF"
    else:
        raise DataError(f"PFM output requires (H, W) or (H, W, 3), got {data.shape}")
    height, width = data.shape[:2]
    with open(path, "wb") as handle:
        handle.write(ident + b"\n")
        handle.write(f"{width} {height}\n".encode("ascii"))
        handle.write(b"-1.0\n")  # negative scale = little-endian
        handle.write(np.flipud(data).astype("<f4").tobytes())


def _read_token(handle) -> bytes:
    tok = b""
    while True:
        ch = handle.read(1)
        if not ch:
            raise DataError("unexpected end of PFM header")
        if ch.isspace():
            if tok:
                return tok
            continue
        tok += ch


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into float32 (H, W) or (H, W, 3), top-to-bottom rows."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"PFM file not found: {path}")
    with open(path, "rb") as handle:
        ident = _read_token(handle)
        if ident == b"PF":
            channels = 3
        elif ident == b"Pf":
            channels = 1
        else:
            raise DataError(f"{path}: not a PFM file (header {ident!r})")
        try:
            width = int(_read_token(handle))
            height = int(_read_token(handle))
            scale = float(_read_token(handle))
        except ValueError as exc:
            raise DataError(f"{path}: malformed PFM header") from exc
        count = width * height * channels
        raw = handle.read(count * 4)
        if len(raw) != count * 4:
            raise DataError(f"{path}: truncated PFM data")
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(raw, dtype=dtype).astype(np.float32)
    if channels == 3:
        data = data.reshape(height, width, 3)
    else:
        data = data.reshape(height, width)
    if abs(scale) not in (0.0, 1.0):
        data = data * np.float32(abs(scale))
    return np.flipud(data).copy()


def write_png(path, image: np.ndarray) -> None:
    """Write an 8-bit grayscale/RGB or 16-bit grayscale PNG."""
    image = np.asarray(image)
    if image.dtype == np.uint8:
        Image.fromarray(image).save(path)
    elif image.dtype == np.uint16:
        if image.ndim != 2:
            raise DataError("16-bit PNG output supports grayscale only")
        Image.fromarray(image).save(path)  # PIL infers I;16
    else:
        raise DataError(f"PNG output needs uint8 or uint16, got {image.dtype}")


def read_png(path) -> np.ndarray:
    """Read a PNG as uint8 (8-bit) or uint16 (16-bit grayscale)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"PNG file not found: {path}")
    try:
        with Image.open(path) as img:
            if img.mode in ("I;16", "I"):
                return np.asarray(img, dtype=np.uint16)
            if img.mode not in ("RGB", "L"):
                img = img.convert("RGB")
            return np.asarray(img).copy()
    except (OSError, SyntaxError) as exc:
        raise DataError(f"cannot read PNG {path}: {exc}") from exc


def write_depth_png16(path, depth_m: np.ndarray, scale: float) -> None:
    """Store depth (meters) as 16-bit PNG with `scale` meters per unit."""
    values = np.round(np.asarray(depth_m, dtype=float) / scale)
    if np.any(values < 0) or np.any(values > 65535):
        raise DataError("depth values do not fit 16-bit range at this scale")
    write_png(path, values.astype(np.uint16))


def read_depth_png16(path, scale: float) -> np.ndarray:
    data = read_png(path)
    if data.dtype != np.uint16:
        raise DataError(f"{path}: expected a 16-bit depth PNG")
    return data.astype(np.float32) * np.float32(scale)


# ---------------------------------------------------------------------------
# PSF stack files
# ---------------------------------------------------------------------------

def psf_slice_name(j: int, c: int) -> str:
    return f"psf_d{j:02d}_{CHANNEL_NAMES[c]}.pfm"


def save_psf_stack(directory, stack: PSFStack) -> dict:
    """One PFM per (depth, channel) slice plus a JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for j in range(stack.num_depths):
        for c in range(3):
            name = psf_slice_name(j, c)
            write_pfm(directory / name, stack.psfs[j, c])
            files.append({"depth_index": j, "channel": CHANNEL_NAMES[c],
                          "file": name})
    manifest = {
        "depths": list(stack.depths),
        "wavelengths": list(stack.wavelengths),
        "pitch": stack.pitch,
        "crop_size": stack.crop_size,
        "files": files,
    }
    (directory / "stack.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def load_psf_stack(directory) -> PSFStack:
    directory = Path(directory)
    manifest_path = directory / "stack.json"
    if not manifest_path.exists():
        raise DataError(f"stack manifest not found: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    depths = tuple(manifest["depths"])
    crop = manifest["crop_size"]
    psfs = np.zeros((len(depths), 3, crop, crop))
    for entry in manifest["files"]:
        j = entry["depth_index"]
        c = CHANNEL_NAMES.index(entry["channel"])
        psfs[j, c] = read_pfm(directory / entry["file"])
    return PSFStack(psfs=psfs, depths=depths,
                    wavelengths=tuple(manifest["wavelengths"]),
                    pitch=manifest["pitch"])
