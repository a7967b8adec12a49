"""Exception hierarchy shared across the pipeline.

Grouping matters for the CLI exit codes: ConfigError maps to 2, DataError
subclasses to 3, DivergedLoss to 4 and IoFailure to 5.
"""


class LulcError(Exception):
    """Base class for everything raised by this package."""


class ConfigError(LulcError):
    """Invalid configuration. Carries every problem found, not just the first."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DataError(LulcError):
    """Problems with user-supplied rasters, labels or derived data."""


class IoFailure(LulcError):
    """Read/write failure on an output path."""


# --- raster ---------------------------------------------------------------

class MissingFile(DataError):
    pass


class UnsupportedFormat(DataError):
    """Image exists but is not 8-bit RGB (or strippable RGBA / 3-4 band TIFF)."""


class CorruptImage(DataError):
    pass


# --- labels ---------------------------------------------------------------

class UnmappedColor(DataError):
    """A label pixel matched no palette entry within the tolerance."""

    def __init__(self, count, first_xy, first_rgb):
        self.count = int(count)
        self.first_xy = tuple(int(v) for v in first_xy)
        self.first_rgb = tuple(int(v) for v in first_rgb)
        super().__init__(
            f"{self.count} pixel(s) match no palette entry; first at "
            f"(x={self.first_xy[0]}, y={self.first_xy[1]}) rgb={self.first_rgb}"
        )


class EmptySelection(DataError):
    pass


class InsufficientImages(DataError):
    pass


# --- augment / grid / eval shape problems ----------------------------------

class DimMismatch(DataError):
    pass


class WrongKind(LulcError):
    """Geometric transform requested from the photometric entry point or vice versa."""


class IndexOutOfGrid(DataError):
    pass


class MissingTile(DataError):
    pass


class WrongTileDims(DataError):
    pass


# --- net -------------------------------------------------------------------

class ShapeMismatch(LulcError):
    pass


class StaleCache(LulcError):
    """backward() called with a cache from before the last parameter update."""


class AllPixelsIgnored(DataError):
    """Loss requested on a batch whose ground truth is entirely ignore pixels."""


# --- training --------------------------------------------------------------

class EmptySplit(DataError):
    pass


class DivergedLoss(LulcError):
    """Training hit a non-finite loss. Carries the last good state."""

    def __init__(self, epoch, loss_log, checkpoint=None):
        self.epoch = epoch
        self.loss_log = list(loss_log)
        self.checkpoint = checkpoint
        super().__init__(f"non-finite loss in epoch {epoch}")


class CheckpointFormatError(DataError):
    """Unreadable checkpoint file (bad magic, truncated header, bad JSON)."""


class HashMismatch(CheckpointFormatError):
    pass


class SchemaVersionUnknown(CheckpointFormatError):
    pass


# --- eval -------------------------------------------------------------------

class EmptyComparison(DataError):
    """Confusion matrix with zero compared pixels."""


class MissingClass(DataError):
    pass
