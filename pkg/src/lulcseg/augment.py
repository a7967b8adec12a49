"""Training-set augmentation: one original plus nine deterministic variants.

Six geometric transforms permute image and mask identically; three
photometric transforms touch the image only and pass the mask through.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DimMismatch, WrongKind


class AugmentKind(Enum):
    FLIP_H = "flip_h"
    FLIP_V = "flip_v"
    ROT90 = "rot90"
    ROT180 = "rot180"
    ROT270 = "rot270"
    TRANSPOSE = "transpose"
    CONTRAST_STRETCH = "contrast_stretch"
    GAMMA = "gamma"
    HUE_SHIFT = "hue_shift"


GEOMETRIC = (
    AugmentKind.FLIP_H, AugmentKind.FLIP_V, AugmentKind.ROT90,
    AugmentKind.ROT180, AugmentKind.ROT270, AugmentKind.TRANSPOSE,
)
PHOTOMETRIC = (AugmentKind.CONTRAST_STRETCH, AugmentKind.GAMMA, AugmentKind.HUE_SHIFT)


@dataclass
class AugmentConfig:
    kinds: tuple = tuple(AugmentKind)
    gamma: float = 1.5
    hue_degrees: float = 30.0
    stretch_percentiles: tuple = (2.0, 98.0)

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        lo, hi = self.stretch_percentiles
        if not 0 <= lo < hi <= 100:
            raise ValueError(f"bad stretch percentiles {self.stretch_percentiles}")


def _round_u8(values: np.ndarray) -> np.ndarray:
    return np.floor(values + 0.5).clip(0, 255).astype(np.uint8)


def apply_geometric(kind: AugmentKind, raster: np.ndarray, mask: np.ndarray):
    """Apply the same index permutation to raster and mask. Rotations are anti-clockwise."""
    if kind not in GEOMETRIC:
        raise WrongKind(f"{kind} is not a geometric transform")
    if raster.shape[:2] != mask.shape[:2]:
        raise DimMismatch(f"raster {raster.shape[:2]} vs mask {mask.shape[:2]}")

    if kind is AugmentKind.FLIP_H:
        op = np.fliplr
    elif kind is AugmentKind.FLIP_V:
        op = np.flipud
    elif kind is AugmentKind.ROT90:
        op = lambda a: np.rot90(a, 1)
    elif kind is AugmentKind.ROT180:
        op = lambda a: np.rot90(a, 2)
    elif kind is AugmentKind.ROT270:
        op = lambda a: np.rot90(a, 3)
    else:  # TRANSPOSE: flip across the main diagonal
        op = lambda a: a.transpose(1, 0, 2) if a.ndim == 3 else a.T

    return np.ascontiguousarray(op(raster)), np.ascontiguousarray(op(mask))


def contrast_stretch(raster: np.ndarray, percentiles=(2.0, 98.0)) -> np.ndarray:
    """Per-channel linear map of [p_lo, p_hi] percentile values to [0, 255]."""
    out = np.empty_like(raster)
    for c in range(3):
        chan = raster[:, :, c]
        lo, hi = np.percentile(chan, percentiles)
        if hi <= lo:  # constant channel: nothing to stretch
            out[:, :, c] = chan
            continue
        out[:, :, c] = _round_u8((chan.astype(np.float64) - lo) * (255.0 / (hi - lo)))
    return out


def gamma_correct(raster: np.ndarray, gamma: float) -> np.ndarray:
    """out = round(255 * (in/255)^gamma), round half up."""
    lut = _round_u8(255.0 * (np.arange(256, dtype=np.float64) / 255.0) ** gamma)
    return lut[raster]


def _rgb_to_hsv(rgb: np.ndarray):
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    v = maxc
    c = maxc - minc
    s = np.where(maxc > 0, c / np.where(maxc > 0, maxc, 1.0), 0.0)
    safe_c = np.where(c > 0, c, 1.0)
    h = np.select(
        [c == 0, maxc == r, maxc == g],
        [0.0, ((g - b) / safe_c) % 6.0, (b - r) / safe_c + 2.0],
        default=(r - g) / safe_c + 4.0,
    ) / 6.0
    return h, s, v


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(np.intp) % 6
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def hue_shift(raster: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate hue by the given angle, saturation and value untouched."""
    h, s, v = _rgb_to_hsv(raster.astype(np.float64) / 255.0)
    h = (h + degrees / 360.0) % 1.0
    return _round_u8(_hsv_to_rgb(h, s, v) * 255.0)


def apply_photometric(kind: AugmentKind, raster: np.ndarray,
                      cfg: AugmentConfig | None = None) -> np.ndarray:
    if kind not in PHOTOMETRIC:
        raise WrongKind(f"{kind} is not a photometric transform")
    cfg = cfg or AugmentConfig()
    if kind is AugmentKind.CONTRAST_STRETCH:
        return contrast_stretch(raster, cfg.stretch_percentiles)
    if kind is AugmentKind.GAMMA:
        return gamma_correct(raster, cfg.gamma)
    return hue_shift(raster, cfg.hue_degrees)


def augment_set(raster: np.ndarray, mask: np.ndarray,
                cfg: AugmentConfig | None = None) -> list:
    """The untouched original followed by the enabled kinds in config order.

    Photometric variants carry the original mask unchanged.
    """
    cfg = cfg or AugmentConfig()
    if raster.shape[:2] != mask.shape[:2]:
        raise DimMismatch(f"raster {raster.shape[:2]} vs mask {mask.shape[:2]}")
    out = [(raster.copy(), mask.copy())]
    for kind in cfg.kinds:
        if kind in GEOMETRIC:
            out.append(apply_geometric(kind, raster, mask))
        else:
            out.append((apply_photometric(kind, raster, cfg), mask.copy()))
    return out
