"""Ground-truth decoding, binary masks, and dataset selection/splitting.

A class map is a (h, w) uint8 array holding a LulcClass value per pixel, or
IGNORE for unrecognized ground truth. A binary mask is a (h, w) uint8 array
over {OTHER, TARGET, IGNORE} for one target class.
"""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import (
    DimMismatch,
    EmptySelection,
    InsufficientImages,
    UnmappedColor,
    UnsupportedFormat,
)


class LulcClass(IntEnum):
    FOREST = 0
    FARMLAND = 1
    BUILTUP = 2
    WATER = 3


IGNORE = 255  # unrecognized ground truth, excluded from loss and metrics
OTHER = 0
TARGET = 1

# Binary masks are serialized blue=target / red=other / black=ignore.
MASK_COLORS = {TARGET: (0, 0, 255), OTHER: (255, 0, 0), IGNORE: (0, 0, 0)}


@dataclass(frozen=True)
class Palette:
    """Label colors per class plus the ignore color. All five must differ."""

    colors: dict = field(default_factory=lambda: {
        LulcClass.BUILTUP: (255, 0, 0),
        LulcClass.FOREST: (0, 255, 255),
        LulcClass.FARMLAND: (0, 255, 0),
        LulcClass.WATER: (0, 0, 255),
    })
    ignore_color: tuple = (0, 0, 0)

    def __post_init__(self):
        entries = list(self.colors.values()) + [self.ignore_color]
        if len(set(entries)) != 5 or set(self.colors) != set(LulcClass):
            raise UnsupportedFormat("palette needs five pairwise distinct colors, one per class plus ignore")

    def entry_list(self):
        """(value, rgb) pairs in canonical order: four classes then ignore."""
        out = [(int(cls), self.colors[cls]) for cls in LulcClass]
        out.append((IGNORE, self.ignore_color))
        return out


@dataclass
class SplitConfig:
    presence_threshold: float = 0.05
    test_counts: dict = field(default_factory=lambda: {
        LulcClass.FOREST: 6,
        LulcClass.FARMLAND: 12,
        LulcClass.BUILTUP: 8,
        LulcClass.WATER: 9,
    })
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.presence_threshold < 1.0:
            raise ValueError(f"presence threshold must be in (0, 1), got {self.presence_threshold}")


def decode_labels(label_raster: np.ndarray, palette: Palette | None = None,
                  tolerance: int = 0) -> np.ndarray:
    """Map a color-coded label raster to a class map.

    Each pixel is assigned the palette entry within L-inf distance
    <= tolerance; the nearest entry wins, ties broken in canonical entry
    order. Raises UnmappedColor if any pixel matches nothing.
    """
    palette = palette or Palette()
    if label_raster.ndim != 3 or label_raster.shape[2] != 3:
        raise UnsupportedFormat(f"label raster must be (h, w, 3), got {label_raster.shape}")

    pix = label_raster.astype(np.int16)
    entries = palette.entry_list()
    dists = np.stack([
        np.abs(pix - np.array(rgb, dtype=np.int16)).max(axis=2)
        for _, rgb in entries
    ])
    best = dists.argmin(axis=0)  # first-wins on ties
    best_dist = np.take_along_axis(dists, best[None], axis=0)[0]

    unmapped = best_dist > tolerance
    if unmapped.any():
        ys, xs = np.nonzero(unmapped)
        y, x = int(ys[0]), int(xs[0])
        raise UnmappedColor(unmapped.sum(), (x, y), label_raster[y, x])

    values = np.array([v for v, _ in entries], dtype=np.uint8)
    return values[best]


def render_class_map(class_map: np.ndarray, palette: Palette | None = None) -> np.ndarray:
    """Inverse of decode_labels: paint a class map back to palette colors."""
    palette = palette or Palette()
    lut = np.zeros((256, 3), dtype=np.uint8)
    for value, rgb in palette.entry_list():
        lut[value] = rgb
    return lut[class_map]


def make_binary_mask(class_map: np.ndarray, target: LulcClass) -> np.ndarray:
    """Target class -> TARGET, other classes -> OTHER, ignore stays IGNORE."""
    mask = np.full(class_map.shape, OTHER, dtype=np.uint8)
    mask[class_map == int(target)] = TARGET
    mask[class_map == IGNORE] = IGNORE
    return mask


def render_mask(mask: np.ndarray) -> np.ndarray:
    """Binary mask to its blue/red/black PNG colors."""
    lut = np.zeros((256, 3), dtype=np.uint8)
    for value, rgb in MASK_COLORS.items():
        lut[value] = rgb
    return lut[mask]


def decode_mask(raster: np.ndarray) -> np.ndarray:
    """Inverse of render_mask; exact colors required."""
    mask = np.full(raster.shape[:2], 254, dtype=np.uint8)
    for value, rgb in MASK_COLORS.items():
        mask[(raster == np.array(rgb, dtype=np.uint8)).all(axis=2)] = value
    bad = mask == 254
    if bad.any():
        ys, xs = np.nonzero(bad)
        y, x = int(ys[0]), int(xs[0])
        raise UnmappedColor(bad.sum(), (x, y), raster[y, x])
    return mask


def class_fraction(class_map: np.ndarray, cls: LulcClass) -> float:
    """Fraction of all pixels (ignore included in the denominator) in cls."""
    return float(np.count_nonzero(class_map == int(cls))) / class_map.size


def ignore_fraction(class_map: np.ndarray) -> float:
    return float(np.count_nonzero(class_map == IGNORE)) / class_map.size


def select_images(fractions, cls: LulcClass, cfg: SplitConfig) -> list:
    """Indices of images whose class presence meets the threshold (>=), in order.

    ``fractions`` is either a sequence of class maps or a sequence of
    precomputed presence fractions for ``cls``.
    """
    vals = [
        class_fraction(item, cls) if isinstance(item, np.ndarray) else float(item)
        for item in fractions
    ]
    selected = [i for i, v in enumerate(vals) if v >= cfg.presence_threshold]
    if not selected:
        raise EmptySelection(f"no image has >= {cfg.presence_threshold:.0%} of {cls.name}")
    return selected


def split_train_test(selected: list, cls: LulcClass, cfg: SplitConfig):
    """Deterministic seeded shuffle; the last k shuffled images become the test set."""
    k = int(cfg.test_counts[cls])
    if k >= len(selected):
        raise InsufficientImages(
            f"{cls.name}: need test count {k} < {len(selected)} selected images"
        )
    rng = np.random.default_rng([cfg.rng_seed, int(cls)])
    order = [selected[i] for i in rng.permutation(len(selected))]
    return order[:-k], order[-k:]


def ensure_same_dims(a: np.ndarray, b: np.ndarray):
    if a.shape[:2] != b.shape[:2]:
        raise DimMismatch(f"dims differ: {a.shape[:2]} vs {b.shape[:2]}")
