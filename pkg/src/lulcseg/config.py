"""Pipeline configuration: one JSON file, CLI-flag overrides, and validation
that reports every problem at once instead of stopping at the first.

The dataset is either listed inline ("dataset": {"images": [...]}), referenced
as a manifest JSON of the same shape, or given as a directory holding
image_RGB/ and label_5classes/ subdirectories whose files pair by stem
(labels may carry a "_label" suffix). Relative paths resolve against the file
that mentions them.
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .augment import AugmentConfig, AugmentKind
from .errors import ConfigError
from .labels import LulcClass, Palette, SplitConfig
from .net import WIDTH_CHOICES
from .training import TrainConfig, TrainMode

_TRAIN_FIELDS = ("epochs", "learning_rate", "batch_size", "mode",
                 "width_multiplier")
_TOP_KEYS = {"dataset", "palette", "split", "augment", "train",
             "output_dir", "threads", "seed"}

_IMAGE_SUFFIXES = (".png", ".tif", ".tiff", ".jpg", ".jpeg", ".bmp")


@dataclass(frozen=True)
class ImageEntry:
    stem: str
    image: Path
    labels: Path | None = None


@dataclass
class PipelineConfig:
    images: list = field(default_factory=list)
    palette: Palette = field(default_factory=Palette)
    split: SplitConfig = field(default_factory=SplitConfig)
    augment: AugmentConfig | None = None
    train_defaults: dict = field(default_factory=dict)
    train_per_class: dict = field(default_factory=dict)
    output_dir: Path = Path("out")
    threads: int | None = None
    seed: int = 0
    snapshot: dict = field(default_factory=dict)

    def entry(self, stem: str) -> ImageEntry:
        for e in self.images:
            if e.stem == stem:
                return e
        raise ConfigError([f"no dataset entry named {stem!r}"])

    def train_config_for(self, cls: LulcClass,
                         mode: str | TrainMode | None = None) -> TrainConfig:
        fields = dict(self.train_defaults)
        fields.update(self.train_per_class.get(cls, {}))
        if mode is not None:
            fields["mode"] = mode
        if TrainMode(fields.get("mode", "downsample")) is TrainMode.GRID:
            aug = None
        else:
            aug = self.augment
        return TrainConfig(target_class=cls, seed=self.class_seed(cls),
                           augment=aug, **fields)

    def class_seed(self, cls: LulcClass) -> int:
        # distinct per-class streams derived from the one user-facing seed
        seq = np.random.SeedSequence(entropy=[int(self.seed), int(cls)])
        return int(seq.generate_state(1, np.uint64)[0])


def _problem_wrap(problems: list, label: str, fn):
    try:
        return fn()
    except (ValueError, KeyError, TypeError, ConfigError) as exc:
        problems.append(f"{label}: {exc}")
        return None


def _parse_palette(raw: dict, problems: list) -> Palette | None:
    colors = dict(Palette().colors)
    ignore = (0, 0, 0)
    for name, rgb in raw.items():
        try:
            value = tuple(int(v) for v in rgb)
        except (TypeError, ValueError):
            problems.append(f"palette.{name}: not an RGB triple: {rgb!r}")
            continue
        if len(value) != 3 or not all(0 <= v <= 255 for v in value):
            problems.append(f"palette.{name}: not an RGB triple: {rgb!r}")
            continue
        if name == "ignore":
            ignore = value
        else:
            cls = _class_named(name, problems, f"palette.{name}")
            if cls is not None:
                colors[cls] = value
    return _problem_wrap(problems, "palette",
                         lambda: Palette(colors=colors, ignore_color=ignore))


def _class_named(name: str, problems: list, label: str) -> LulcClass | None:
    try:
        return LulcClass[str(name).upper()]
    except KeyError:
        known = ", ".join(c.name.lower() for c in LulcClass)
        problems.append(f"{label}: unknown class {name!r} (known: {known})")
        return None


def _parse_split(raw: dict, problems: list) -> SplitConfig | None:
    kwargs = {}
    if "presence_threshold" in raw:
        kwargs["presence_threshold"] = float(raw["presence_threshold"])
    if "seed" in raw:
        kwargs["rng_seed"] = int(raw["seed"])
    if "test_counts" in raw:
        counts = dict(SplitConfig().test_counts)
        for name, k in raw["test_counts"].items():
            cls = _class_named(name, problems, "split.test_counts")
            if cls is None:
                continue
            if int(k) < 1:
                problems.append(f"split.test_counts.{name}: must be >= 1, got {k}")
                continue
            counts[cls] = int(k)
        kwargs["test_counts"] = counts
    return _problem_wrap(problems, "split", lambda: SplitConfig(**kwargs))


def _parse_augment(raw: dict, problems: list) -> AugmentConfig | None:
    kwargs = {}
    if "kinds" in raw:
        kinds = []
        for name in raw["kinds"]:
            try:
                kinds.append(AugmentKind(str(name)))
            except ValueError:
                known = ", ".join(k.value for k in AugmentKind)
                problems.append(f"augment.kinds: unknown kind {name!r} (known: {known})")
        kwargs["kinds"] = tuple(kinds)
    for key in ("gamma", "hue_degrees"):
        if key in raw:
            kwargs[key] = float(raw[key])
    if "stretch_percentiles" in raw:
        kwargs["stretch_percentiles"] = tuple(float(v) for v in raw["stretch_percentiles"])
    return _problem_wrap(problems, "augment", lambda: AugmentConfig(**kwargs))


def _check_train_fields(fields: dict, label: str, problems: list) -> dict:
    out = {}
    for key, value in fields.items():
        if key not in _TRAIN_FIELDS:
            problems.append(f"{label}.{key}: unknown setting "
                            f"(known: {', '.join(_TRAIN_FIELDS)})")
            continue
        out[key] = value
    if "mode" in out:
        try:
            TrainMode(out["mode"])
        except ValueError:
            problems.append(f"{label}.mode: must be 'downsample' or 'grid', "
                            f"got {out['mode']!r}")
            del out["mode"]
    if "width_multiplier" in out and out["width_multiplier"] not in WIDTH_CHOICES:
        problems.append(f"{label}.width_multiplier: must be one of "
                        f"{WIDTH_CHOICES}, got {out['width_multiplier']}")
        del out["width_multiplier"]
    for key, minimum in (("epochs", 1), ("batch_size", 1)):
        if key in out and int(out[key]) < minimum:
            problems.append(f"{label}.{key}: must be >= {minimum}, got {out[key]}")
            del out[key]
    if "learning_rate" in out and float(out["learning_rate"]) <= 0:
        problems.append(f"{label}.learning_rate: must be > 0, "
                        f"got {out['learning_rate']}")
        del out["learning_rate"]
    return out


def _pair_by_stem(images: list, labels: list) -> list:
    by_stem = {}
    for p in labels:
        stem = p.stem
        if stem.endswith("_label"):
            stem = stem[:-len("_label")]
        by_stem[stem] = p
    return [ImageEntry(p.stem, p, by_stem.get(p.stem)) for p in images]


def _list_images(directory: Path) -> list:
    return sorted(p for p in directory.iterdir()
                  if p.suffix.lower() in _IMAGE_SUFFIXES)


def _load_dataset(spec, base: Path, problems: list) -> list:
    if isinstance(spec, str):
        path = (base / spec).resolve() if not os.path.isabs(spec) else Path(spec)
        if path.is_dir():
            img_dir = path / "image_RGB"
            lbl_dir = path / "label_5classes"
            if not img_dir.is_dir():
                problems.append(f"dataset: {path} has no image_RGB/ directory")
                return []
            labels = _list_images(lbl_dir) if lbl_dir.is_dir() else []
            return _pair_by_stem(_list_images(img_dir), labels)
        if not path.is_file():
            problems.append(f"dataset: manifest {path} does not exist")
            return []
        try:
            spec = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            problems.append(f"dataset: cannot read manifest {path}: {exc}")
            return []
        base = path.parent

    entries = []
    rows = spec.get("images", []) if isinstance(spec, dict) else []
    if not isinstance(spec, dict):
        problems.append("dataset: expected a path or {\"images\": [...]}")
    for i, row in enumerate(rows):
        image = row.get("image")
        if not image:
            problems.append(f"dataset.images[{i}]: missing 'image' path")
            continue
        img_path = (base / image).resolve()
        stem = row.get("name") or img_path.stem
        lbl_path = (base / row["labels"]).resolve() if row.get("labels") else None
        if not img_path.is_file():
            problems.append(f"dataset.images[{i}]: {img_path} does not exist")
        if lbl_path is not None and not lbl_path.is_file():
            problems.append(f"dataset.images[{i}]: labels {lbl_path} does not exist")
        entries.append(ImageEntry(stem, img_path, lbl_path))
    stems = [e.stem for e in entries]
    for stem in sorted({s for s in stems if stems.count(s) > 1}):
        problems.append(f"dataset: duplicate image name {stem!r}")
    return entries


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    """Read, merge and validate; raises ConfigError listing every problem."""
    overrides = dict(overrides or {})
    raw = {}
    base = Path.cwd()
    if path is not None:
        p = Path(path)
        try:
            raw = json.loads(p.read_text())
        except OSError as exc:
            raise ConfigError([f"cannot read config {p}: {exc}"]) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config {p} is not valid JSON: {exc}"]) from exc
        base = p.resolve().parent
    if not isinstance(raw, dict):
        raise ConfigError([f"config root must be a JSON object, got {type(raw).__name__}"])

    problems = []
    for key in sorted(set(raw) - _TOP_KEYS):
        problems.append(f"unknown setting {key!r} "
                        f"(known: {', '.join(sorted(_TOP_KEYS))})")

    images = _load_dataset(raw.get("dataset", {}), base, problems) \
        if raw.get("dataset") else []
    palette = _parse_palette(raw.get("palette", {}), problems) or Palette()
    split = _parse_split(raw.get("split", {}), problems) or SplitConfig()
    augment = _parse_augment(raw["augment"], problems) if "augment" in raw else None

    train_raw = dict(raw.get("train", {}))
    per_class_raw = train_raw.pop("per_class", {}) or {}
    train_defaults = _check_train_fields(train_raw, "train", problems)
    train_per_class = {}
    for name, fields in per_class_raw.items():
        cls = _class_named(name, problems, "train.per_class")
        if cls is None:
            continue
        train_per_class[cls] = _check_train_fields(
            fields, f"train.per_class.{name}", problems)

    # flag overrides win over the file
    out_dir = overrides.pop("output_dir", None) or raw.get("output_dir", "out")
    threads = overrides.pop("threads", None)
    if threads is None:
        threads = raw.get("threads")
    if threads is not None and int(threads) < 1:
        problems.append(f"threads: must be >= 1, got {threads}")
    seed = overrides.pop("seed", None)
    if seed is None:
        seed = raw.get("seed", 0)
    # one --seed governs everything unless the split pins its own
    if "seed" not in raw.get("split", {}):
        split.rng_seed = int(seed)
    for key, value in overrides.items():
        if value is None:
            continue
        train_defaults.update(_check_train_fields({key: value}, "flags", problems))

    if problems:
        raise ConfigError(problems)

    out_path = Path(out_dir)
    if path is not None and not out_path.is_absolute():
        out_path = base / out_path

    cfg = PipelineConfig(
        images=images, palette=palette, split=split, augment=augment,
        train_defaults=train_defaults, train_per_class=train_per_class,
        output_dir=out_path, threads=int(threads) if threads else None,
        seed=int(seed),
    )
    cfg.snapshot = _snapshot(cfg)
    return cfg


def _snapshot(cfg: PipelineConfig) -> dict:
    """Fully resolved, JSON-safe view of the configuration."""
    return {
        "dataset": [{"name": e.stem, "image": str(e.image),
                     "labels": str(e.labels) if e.labels else None}
                    for e in cfg.images],
        "palette": {**{c.name.lower(): list(cfg.palette.colors[c])
                       for c in LulcClass},
                    "ignore": list(cfg.palette.ignore_color)},
        "split": {
            "presence_threshold": cfg.split.presence_threshold,
            "test_counts": {c.name.lower(): int(cfg.split.test_counts[c])
                            for c in LulcClass},
            "seed": cfg.split.rng_seed,
        },
        "augment": None if cfg.augment is None else {
            "kinds": [k.value for k in cfg.augment.kinds],
            "gamma": cfg.augment.gamma,
            "hue_degrees": cfg.augment.hue_degrees,
            "stretch_percentiles": list(cfg.augment.stretch_percentiles),
        },
        "train": {"defaults": dict(cfg.train_defaults),
                  "per_class": {c.name.lower(): dict(v)
                                for c, v in cfg.train_per_class.items()}},
        "output_dir": str(cfg.output_dir),
        "threads": cfg.threads,
        "seed": cfg.seed,
    }
