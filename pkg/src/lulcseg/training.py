"""Per-class training loops, whole-raster prediction, and the weight-file format.

Two regimes share one trainer. Downsample mode shrinks each source image to
224x224 and expands it through the augmentation set; grid mode feeds every
native-resolution tile and never augments. Either way the stream yields
(input, mask) pairs where the input is float32 (3, 224, 224) scaled to [0, 1]
and the mask is uint8 {OTHER, TARGET, IGNORE}.
"""

import hashlib
import io
import json
import struct
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .augment import AugmentConfig, augment_set
from .errors import (CheckpointFormatError, ConfigError, DimMismatch,
                     DivergedLoss, EmptySplit, HashMismatch, IoFailure,
                     SchemaVersionUnknown)
from .grid import plan_grid, extract_all, extract_tile, stitch
from .labels import LulcClass
from .net import Fcn8Model, WIDTH_CHOICES, init_model, softmax_cross_entropy
from .raster import Dims, ensure_raster, resize_bilinear, resize_nearest

TILE = 224

CHECKPOINT_MAGIC = b"FCN8CKPT"
CHECKPOINT_VERSION = 1


class TrainMode(Enum):
    DOWNSAMPLE = "downsample"
    GRID = "grid"


@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.01
    batch_size: int = 8
    mode: TrainMode = TrainMode.DOWNSAMPLE
    seed: int = 0
    target_class: LulcClass = LulcClass.FOREST
    width_multiplier: float = 1.0
    # None = default augmentation in downsample mode, nothing in grid mode
    augment: AugmentConfig | None = None

    def __post_init__(self):
        if isinstance(self.mode, str):
            self.mode = TrainMode(self.mode)
        problems = []
        if self.epochs < 1:
            problems.append(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            problems.append(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            problems.append(f"batch_size must be >= 1, got {self.batch_size}")
        if self.width_multiplier not in WIDTH_CHOICES:
            problems.append(
                f"width_multiplier must be one of {WIDTH_CHOICES}, "
                f"got {self.width_multiplier}")
        if self.mode is TrainMode.GRID and self.augment is not None:
            problems.append("grid mode does not augment; remove the augment config")
        if problems:
            raise ConfigError(problems)

    def augment_config(self) -> AugmentConfig | None:
        if self.mode is TrainMode.GRID:
            return None
        return self.augment if self.augment is not None else AugmentConfig()


def _to_input(tile: np.ndarray) -> np.ndarray:
    # (h, w, 3) uint8 -> (3, h, w) float32 in [0, 1]
    return np.ascontiguousarray(tile.transpose(2, 0, 1), dtype=np.float32) / 255.0


class TrainingSet:
    """Random-access sample source built from (raster, mask) pairs.

    A pair may also be given as ((width, height), loader) where the loader is
    a zero-argument callable returning the actual (raster, mask); only one
    loaded source is held at a time, so full-size rasters stream through
    without all residing in memory. Samples are materialized on demand; the
    expansion of the most recently touched source image is cached. Index
    order is source-major and deterministic.
    """

    def __init__(self, pairs, cfg: TrainConfig):
        pairs = list(pairs)
        if not pairs:
            raise EmptySplit("no training images")
        dims = []
        for first, second in pairs:
            if callable(second):
                dims.append(Dims(int(first[0]), int(first[1])))
            else:
                ensure_raster(first)
                if first.shape[:2] != second.shape[:2]:
                    raise DimMismatch(
                        f"raster {first.shape[:2]} vs mask {second.shape[:2]}")
                dims.append(Dims(first.shape[1], first.shape[0]))
        self._pairs = pairs
        self._cfg = cfg
        if cfg.mode is TrainMode.DOWNSAMPLE:
            per = 1 + len(cfg.augment_config().kinds)
            self._starts = [i * per for i in range(len(pairs) + 1)]
        else:
            counts = [plan_grid(d, TILE).count for d in dims]
            self._starts = list(np.concatenate([[0], np.cumsum(counts)]))
        self._cache_key = None
        self._cache = None

    def __len__(self):
        return int(self._starts[-1])

    def _load(self, src_idx: int):
        first, second = self._pairs[src_idx]
        if callable(second):
            raster, mask = second()
            ensure_raster(raster)
            if raster.shape[:2] != mask.shape[:2]:
                raise DimMismatch(
                    f"raster {raster.shape[:2]} vs mask {mask.shape[:2]}")
            return raster, mask
        return first, second

    def _expand(self, src_idx: int) -> list:
        if self._cache_key == src_idx:
            return self._cache
        raster, mask = self._load(src_idx)
        if self._cfg.mode is TrainMode.DOWNSAMPLE:
            small = resize_bilinear(raster, Dims(TILE, TILE))
            small_mask = resize_nearest(mask, Dims(TILE, TILE))
            samples = [(_to_input(r), m)
                       for r, m in augment_set(small, small_mask,
                                               self._cfg.augment_config())]
        else:
            grid = plan_grid(Dims(raster.shape[1], raster.shape[0]), TILE)
            samples = [(_to_input(r), m)
                       for r, m in zip(extract_all(raster, grid),
                                       extract_all(mask, grid))]
        self._cache_key = src_idx
        self._cache = samples
        return samples

    def __getitem__(self, i: int):
        if not 0 <= i < len(self):
            raise IndexError(i)
        src = int(np.searchsorted(self._starts, i, side="right")) - 1
        return self._expand(src)[i - self._starts[src]]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def build_training_set(pairs, cfg: TrainConfig) -> TrainingSet:
    """Expand (raster, mask) pairs into the per-mode sample stream.

    Downsample: each image resized to 224x224, then the full augmentation set
    (10 samples per image with the default config). Grid: every tile of every
    image at native resolution, no augmentation.
    """
    return TrainingSet(pairs, cfg)


def train(model: Fcn8Model, stream, cfg: TrainConfig):
    """Plain SGD over the stream, shuffled each epoch. Returns (model, loss log).

    The loss log has exactly cfg.epochs entries (mean batch loss per epoch).
    A non-finite batch loss aborts immediately: the raised DivergedLoss carries
    the parameter snapshot from the last completed epoch boundary.
    """
    n = len(stream)
    if n == 0:
        raise EmptySplit("empty training stream")
    rng = np.random.default_rng(cfg.seed)
    order = np.arange(n)
    loss_log = []
    last_good = model.snapshot()
    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        batch_losses = []
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            xs = np.stack([stream[i][0] for i in idx])
            ys = np.stack([stream[i][1] for i in idx])
            logits, state = model.forward(xs, want_state=True)
            loss, grad = softmax_cross_entropy(logits, ys)
            if not np.isfinite(loss):
                raise DivergedLoss(epoch, loss_log, checkpoint=last_good)
            model.backward(state, grad)
            model.sgd_step(cfg.learning_rate)
            batch_losses.append(loss)
        loss_log.append(float(np.mean(batch_losses)))
        last_good = model.snapshot()
    return model, loss_log


def _predict_batch(model: Fcn8Model, xs: np.ndarray) -> np.ndarray:
    logits = model.forward(xs)
    return np.argmax(logits, axis=1).astype(np.uint8)


def predict_grid(model: Fcn8Model, raster: np.ndarray,
                 batch_size: int = 8) -> np.ndarray:
    """Tile, forward, per-pixel argmax, stitch. Output dims equal input dims."""
    ensure_raster(raster)
    grid = plan_grid(Dims(raster.shape[1], raster.shape[0]), TILE)
    out_tiles = []
    pending = []
    for idx in grid.indices():
        pending.append(_to_input(extract_tile(raster, grid, idx)))
        if len(pending) == batch_size:
            out_tiles.extend(_predict_batch(model, np.stack(pending)))
            pending = []
    if pending:
        out_tiles.extend(_predict_batch(model, np.stack(pending)))
    return stitch(out_tiles, grid)


def predict_downsampled(model: Fcn8Model, raster: np.ndarray) -> np.ndarray:
    """Resize to 224x224, forward once, scale the labels back up (nearest)."""
    ensure_raster(raster)
    h, w = raster.shape[:2]
    small = resize_bilinear(raster, Dims(TILE, TILE))
    pred = _predict_batch(model, _to_input(small)[None])[0]
    if (h, w) == (TILE, TILE):
        return pred
    return resize_nearest(pred, Dims(w, h))


# --- checkpoint file format --------------------------------------------------
#
# magic "FCN8CKPT" | u16 version | u32 manifest length | manifest JSON (UTF-8)
# | parameter blobs, raw float32, in manifest order. Integers little-endian.
# The manifest's sha256 field covers the concatenated blob bytes.


@dataclass
class Checkpoint:
    manifest: dict
    blobs: list = field(default_factory=list)  # ordered (name, float32 array)

    def target_class(self) -> LulcClass | None:
        name = self.manifest.get("target_class")
        return LulcClass[name.upper()] if name else None


def checkpoint_from_model(model: Fcn8Model, cfg: TrainConfig,
                          epoch: int | None = None,
                          metrics: dict | None = None) -> Checkpoint:
    blobs = [(name, np.ascontiguousarray(arr, dtype=np.float32))
             for name, arr in model.params()]
    manifest = {
        "architecture": "fcn8",
        "width_multiplier": cfg.width_multiplier,
        "num_classes": model.num_classes,
        "target_class": cfg.target_class.name.lower(),
        "mode": cfg.mode.value,
        "epochs": cfg.epochs,
        "epoch": cfg.epochs if epoch is None else epoch,
        "learning_rate": cfg.learning_rate,
        "batch_size": cfg.batch_size,
        "seed": cfg.seed,
        "metrics": metrics,
        "blobs": [{"name": n, "shape": list(a.shape), "dtype": "float32"}
                  for n, a in blobs],
        "sha256": _blob_digest(blobs),
    }
    return Checkpoint(manifest, blobs)


def model_from_checkpoint(cp: Checkpoint, dtype=np.float32) -> Fcn8Model:
    man = cp.manifest
    model = init_model(seed=int(man.get("seed", 0)),
                       width_multiplier=float(man["width_multiplier"]),
                       num_classes=int(man.get("num_classes", 2)),
                       dtype=dtype)
    named = [(n, a.astype(dtype, copy=False)) for n, a in cp.blobs]
    model.load_params(named, strict=True)
    return model


def check_target_class(cp: Checkpoint, expected: LulcClass) -> None:
    got = cp.target_class()
    if got is not None and got != expected:
        warnings.warn(
            f"checkpoint was trained for class {got.name.lower()}, "
            f"using it for {expected.name.lower()}", stacklevel=2)


def _blob_digest(blobs) -> str:
    digest = hashlib.sha256()
    for _, arr in blobs:
        digest.update(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return digest.hexdigest()


def save_checkpoint(cp: Checkpoint, path) -> None:
    manifest = dict(cp.manifest)
    manifest["blobs"] = [{"name": n, "shape": list(a.shape), "dtype": "float32"}
                         for n, a in cp.blobs]
    manifest["sha256"] = _blob_digest(cp.blobs)
    body = json.dumps(manifest, sort_keys=True).encode("utf-8")
    try:
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<HI", CHECKPOINT_VERSION, len(body)))
            fh.write(body)
            for _, arr in cp.blobs:
                fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write checkpoint {path}: {exc}") from exc


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read checkpoint {path}: {exc}") from exc
    buf = io.BytesIO(raw)
    if buf.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"{path}: not a checkpoint file")
    header = buf.read(6)
    if len(header) != 6:
        raise CheckpointFormatError(f"{path}: truncated header")
    version, man_len = struct.unpack("<HI", header)
    if version != CHECKPOINT_VERSION:
        raise SchemaVersionUnknown(f"{path}: schema version {version}")
    body = buf.read(man_len)
    if len(body) != man_len:
        raise CheckpointFormatError(f"{path}: truncated manifest")
    try:
        manifest = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"{path}: bad manifest: {exc}") from exc

    blobs = []
    for entry in manifest.get("blobs", []):
        shape = tuple(int(v) for v in entry["shape"])
        if entry.get("dtype", "float32") != "float32":
            raise CheckpointFormatError(
                f"{path}: unsupported blob dtype {entry.get('dtype')}")
        nbytes = int(np.prod(shape, dtype=np.int64)) * 4
        chunk = buf.read(nbytes)
        if len(chunk) != nbytes:
            raise CheckpointFormatError(f"{path}: truncated blob {entry['name']}")
        arr = np.frombuffer(chunk, dtype="<f4").reshape(shape).copy()
        blobs.append((entry["name"], arr))
    if _blob_digest(blobs) != manifest.get("sha256"):
        raise HashMismatch(f"{path}: blob hash does not match manifest")
    return Checkpoint(manifest, blobs)
