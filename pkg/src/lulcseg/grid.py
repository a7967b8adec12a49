"""Non-overlapping tiling of full rasters and stitching of tile predictions.

The grid covers the source with ceil-division; ragged right/bottom edges are
filled by reflecting the source (numpy 'symmetric' padding), never by
fabricating constant borders. Stitching is the exact inverse: concatenate in
row-major order, then crop the padding away.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import IndexOutOfGrid, MissingTile, WrongTileDims
from .raster import Dims

DEFAULT_TILE = 224


class TileIndex(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class TileGrid:
    width: int
    height: int
    tile: int
    rows: int
    cols: int
    pad_right: int
    pad_bottom: int

    @property
    def count(self) -> int:
        return self.rows * self.cols

    def indices(self):
        """Row-major enumeration of all tile indices."""
        return [TileIndex(r, c) for r in range(self.rows) for c in range(self.cols)]


def plan_grid(dims: Dims, tile: int = DEFAULT_TILE) -> TileGrid:
    width, height = int(dims[0]), int(dims[1])
    if tile < 1:
        raise ValueError(f"tile size must be >= 1, got {tile}")
    cols = -(-width // tile)
    rows = -(-height // tile)
    return TileGrid(
        width=width, height=height, tile=tile, rows=rows, cols=cols,
        pad_right=cols * tile - width, pad_bottom=rows * tile - height,
    )


def _pad_source(array: np.ndarray, grid: TileGrid) -> np.ndarray:
    if grid.pad_right == 0 and grid.pad_bottom == 0:
        return array
    pad = [(0, grid.pad_bottom), (0, grid.pad_right)] + [(0, 0)] * (array.ndim - 2)
    return np.pad(array, pad, mode="symmetric")


def extract_tile(array: np.ndarray, grid: TileGrid, idx) -> np.ndarray:
    """One tile x tile crop; out-of-source pixels reflect-padded."""
    row, col = int(idx[0]), int(idx[1])
    if not (0 <= row < grid.rows and 0 <= col < grid.cols):
        raise IndexOutOfGrid(f"tile ({row}, {col}) outside {grid.rows}x{grid.cols} grid")
    t = grid.tile
    y0, x0 = row * t, col * t
    if y0 + t <= grid.height and x0 + t <= grid.width:
        return np.ascontiguousarray(array[y0:y0 + t, x0:x0 + t])
    padded = _pad_source(array, grid)
    return np.ascontiguousarray(padded[y0:y0 + t, x0:x0 + t])


def extract_all(array: np.ndarray, grid: TileGrid) -> list:
    """All tiles in row-major order; pads the source once."""
    padded = _pad_source(array, grid)
    t = grid.tile
    return [
        np.ascontiguousarray(padded[r * t:(r + 1) * t, c * t:(c + 1) * t])
        for r in range(grid.rows) for c in range(grid.cols)
    ]


def stitch(tiles, grid: TileGrid) -> np.ndarray:
    """Reassemble tiles (mapping keyed by (row, col), or row-major sequence).

    Works for rasters and masks alike; padding introduced at extraction is
    cropped away, so stitch(extract_all(x)) == x bit-exactly.
    """
    if hasattr(tiles, "keys"):
        lookup = {(int(k[0]), int(k[1])): v for k, v in tiles.items()}
        ordered = []
        for r in range(grid.rows):
            for c in range(grid.cols):
                if (r, c) not in lookup:
                    raise MissingTile(f"tile ({r}, {c}) missing")
                ordered.append(lookup[(r, c)])
        if len(lookup) != grid.count:
            raise WrongTileDims(f"expected {grid.count} tiles, got {len(lookup)}")
    else:
        ordered = list(tiles)
        if len(ordered) != grid.count:
            raise MissingTile(f"expected {grid.count} tiles, got {len(ordered)}")

    t = grid.tile
    first = ordered[0]
    for tile_arr in ordered:
        if tile_arr.shape[:2] != (t, t) or tile_arr.ndim != first.ndim:
            raise WrongTileDims(f"tile shape {tile_arr.shape}, expected ({t}, {t}, ...)")

    canvas_shape = (grid.rows * t, grid.cols * t) + first.shape[2:]
    canvas = np.empty(canvas_shape, dtype=first.dtype)
    i = 0
    for r in range(grid.rows):
        for c in range(grid.cols):
            canvas[r * t:(r + 1) * t, c * t:(c + 1) * t] = ordered[i]
            i += 1
    return np.ascontiguousarray(canvas[:grid.height, :grid.width])
