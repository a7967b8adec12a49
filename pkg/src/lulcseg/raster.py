"""8-bit RGB raster I/O and resampling.

A raster is a numpy array of shape (height, width, 3), dtype uint8, row
major. PNG is the canonical interchange format; TIFF is accepted on ingest
only (3- or 4-band, extra bands dropped with a warning).
"""

import warnings
from typing import NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptImage, IoFailure, MissingFile, UnsupportedFormat

Image.MAX_IMAGE_PIXELS = None  # full GID scenes are 48 Mpx


class Dims(NamedTuple):
    width: int
    height: int


def ensure_raster(arr: np.ndarray) -> np.ndarray:
    if not isinstance(arr, np.ndarray) or arr.ndim != 3 or arr.shape[2] != 3:
        raise UnsupportedFormat(f"expected (h, w, 3) array, got {getattr(arr, 'shape', type(arr))}")
    if arr.dtype != np.uint8:
        raise UnsupportedFormat(f"expected uint8 raster, got {arr.dtype}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise UnsupportedFormat(f"degenerate raster dims {arr.shape}")
    return arr


def raster_dims(arr: np.ndarray) -> Dims:
    return Dims(width=arr.shape[1], height=arr.shape[0])


def load_rgb(path) -> np.ndarray:
    """Decode an 8-bit RGB image (PNG or TIFF) to a (h, w, 3) uint8 array."""
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError as exc:
        raise MissingFile(str(path)) from exc
    except UnidentifiedImageError as exc:
        raise CorruptImage(f"{path}: not a decodable image") from exc
    except OSError as exc:
        raise CorruptImage(f"{path}: {exc}") from exc

    if img.mode == "RGB":
        arr = np.asarray(img)
    elif img.mode == "RGBA":
        warnings.warn(f"{path}: alpha channel stripped on load")
        arr = np.asarray(img)[:, :, :3]
    else:
        raise UnsupportedFormat(
            f"{path}: unsupported mode {img.mode!r}; need 8-bit RGB (or RGBA/3-4 band TIFF)"
        )
    return ensure_raster(np.ascontiguousarray(arr))


def image_dims(path) -> Dims:
    """Read image dimensions from the file header without decoding pixels."""
    try:
        with Image.open(path) as img:
            return Dims(width=img.width, height=img.height)
    except FileNotFoundError as exc:
        raise MissingFile(str(path)) from exc
    except (UnidentifiedImageError, OSError) as exc:
        raise CorruptImage(f"{path}: {exc}") from exc


def save_rgb(raster: np.ndarray, path) -> None:
    """Write a raster as PNG. Round-trips bit-exactly through load_rgb."""
    ensure_raster(raster)
    try:
        Image.fromarray(raster, mode="RGB").save(path, format="PNG")
    except (OSError, ValueError) as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _sample_axis(src_size: int, dst_size: int):
    """Half-pixel-center source coordinates for one axis.

    Target pixel t samples source coordinate (t + 0.5) * scale - 0.5 with
    scale = src/dst. Returns integer neighbour indices and the blend weight.
    """
    scale = src_size / dst_size
    coords = (np.arange(dst_size, dtype=np.float64) + 0.5) * scale - 0.5
    coords = np.clip(coords, 0.0, src_size - 1.0)
    lo = np.floor(coords).astype(np.intp)
    hi = np.minimum(lo + 1, src_size - 1)
    frac = coords - lo
    return lo, hi, frac


def resize_bilinear(raster: np.ndarray, target: Dims) -> np.ndarray:
    """Bilinear resample with half-pixel-center alignment, round-half-up to uint8."""
    ensure_raster(raster)
    tw, th = int(target[0]), int(target[1])
    if tw < 1 or th < 1:
        raise UnsupportedFormat(f"target dims must be >= 1, got {target}")
    sh, sw = raster.shape[:2]
    if (tw, th) == (sw, sh):
        return raster.copy()

    y0, y1, fy = _sample_axis(sh, th)
    x0, x1, fx = _sample_axis(sw, tw)
    src = raster.astype(np.float64)
    top = src[y0][:, x0] * (1.0 - fx)[None, :, None] + src[y0][:, x1] * fx[None, :, None]
    bot = src[y1][:, x0] * (1.0 - fx)[None, :, None] + src[y1][:, x1] * fx[None, :, None]
    out = top * (1.0 - fy)[:, None, None] + bot * fy[:, None, None]
    return np.floor(out + 0.5).clip(0, 255).astype(np.uint8)


def resize_nearest(mask: np.ndarray, target: Dims) -> np.ndarray:
    """Nearest-neighbour resample of a 2-d label mask (either direction)."""
    tw, th = int(target[0]), int(target[1])
    sh, sw = mask.shape[:2]
    ys = np.minimum((np.floor((np.arange(th) + 0.5) * (sh / th))).astype(np.intp), sh - 1)
    xs = np.minimum((np.floor((np.arange(tw) + 0.5) * (sw / tw))).astype(np.intp), sw - 1)
    return mask[ys][:, xs]
