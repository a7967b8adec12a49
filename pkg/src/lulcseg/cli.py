"""Command-line interface: the whole pipeline as subcommands over one config.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 training
divergence, 5 I/O failure. Every run writes a reproducibility record
(resolved config, seeds, versions, backend) into the output directory.
"""

import argparse
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .augment import AugmentConfig, augment_set
from .config import PipelineConfig, load_config
from .errors import (ConfigError, DataError, DivergedLoss, IoFailure,
                     LulcError, MissingFile)
from .evaluate import (REFERENCE_ECOGNITION, MetricsRow, confusion, error_map,
                       mean_rows, metrics_from_confusion, report)
from .grid import extract_tile, plan_grid, stitch
from .labels import (LulcClass, class_fraction, decode_labels, decode_mask,
                     make_binary_mask, render_mask, select_images,
                     split_train_test)
from .net import init_model, kernels
from .raster import Dims, image_dims, load_rgb, resize_nearest, save_rgb
from .training import (TrainMode, build_training_set, check_target_class,
                       checkpoint_from_model, load_checkpoint,
                       model_from_checkpoint, predict_downsampled,
                       predict_grid, save_checkpoint, train)

_CLASS_NAMES = [c.name.lower() for c in LulcClass]


def _class_arg(name: str) -> LulcClass:
    return LulcClass[name.upper()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lulcseg",
        description="Per-class binary land-cover segmentation pipeline.")
    parser.add_argument("--version", action="version", version=__version__)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config JSON")
    common.add_argument("--output-dir", help="overrides the config output_dir")
    common.add_argument("--seed", type=int, help="overrides config seed "
                        "(LULC_SEED env var sits between this flag and the file)")
    common.add_argument("--threads", type=int,
                        help="kernel threads; 1 gives bit-exact runs")
    common.add_argument("--dry-run", action="store_true",
                        help="validate config and dataset layout, then stop")

    classed = argparse.ArgumentParser(add_help=False)
    classed.add_argument("--class", dest="cls", choices=_CLASS_NAMES,
                         required=True, help="target class")
    moded = argparse.ArgumentParser(add_help=False)
    moded.add_argument("--mode", choices=["downsample", "grid"],
                       help="training/inference regime (default from config)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("masks", parents=[common],
                       help="decode label rasters into per-class binary mask PNGs")
    p.add_argument("--class", dest="cls", choices=_CLASS_NAMES,
                   help="restrict to one class (default: all four)")
    p.add_argument("--name", action="append",
                   help="restrict to named dataset entries")

    sub.add_parser("split", parents=[common],
                   help="select images (>= presence threshold) and split train/test")

    p = sub.add_parser("augment", parents=[common],
                       help="write the ten augmentation variants of one image")
    p.add_argument("--name", help="dataset entry to expand")
    p.add_argument("--image", help="explicit image path (alternative to --name)")
    p.add_argument("--class", dest="cls", choices=_CLASS_NAMES,
                   help="also write the paired binary masks for this class")

    p = sub.add_parser("tile", parents=[common],
                       help="cut an image into 224x224 grid tiles")
    p.add_argument("--name", help="dataset entry")
    p.add_argument("--image", help="explicit image path")

    p = sub.add_parser("stitch", parents=[common],
                       help="reassemble grid tiles into a full image")
    p.add_argument("--tiles-dir", required=True,
                   help="directory of <stem>.r<row>c<col>.png tiles")
    p.add_argument("--like", help="image whose dims the output should match")
    p.add_argument("--width", type=int, help="output width")
    p.add_argument("--height", type=int, help="output height")

    p = sub.add_parser("train", parents=[common, classed, moded],
                       help="train one per-class model on the train split")
    p.add_argument("--split-file", help="split JSON (default <out>/split.json)")

    p = sub.add_parser("predict", parents=[common, classed, moded],
                       help="segment images with a trained checkpoint")
    p.add_argument("--checkpoint", help="checkpoint path "
                   "(default <out>/checkpoints/<class>.<mode>.ckpt)")
    p.add_argument("--name", action="append",
                   help="dataset entries (default: the class's test split)")
    p.add_argument("--split-file", help="split JSON (default <out>/split.json)")

    p = sub.add_parser("evaluate", parents=[common, classed, moded],
                       help="score predictions against ground truth")
    p.add_argument("--split-file", help="split JSON (default <out>/split.json)")
    p.add_argument("--pred-dir", help="directory of prediction PNGs "
                   "(default <out>/predictions)")

    p = sub.add_parser("errormap", parents=[common],
                       help="render TP/FN/FP/TN maps for prediction PNGs")
    p.add_argument("--pred", help="prediction mask PNG")
    p.add_argument("--gt", help="ground-truth mask PNG")
    p.add_argument("--class", dest="cls", choices=_CLASS_NAMES,
                   help="render for this class's whole test split instead")
    p.add_argument("--mode", choices=["downsample", "grid"])
    p.add_argument("--split-file")
    p.add_argument("--pred-dir")

    p = sub.add_parser("report", parents=[common, moded],
                       help="combine the four class metric files into one table")
    p.add_argument("--reference", choices=["ecognition", "none"],
                   default="none", help="add published baseline columns")

    sub.add_parser("pipeline", parents=[common, classed, moded],
                   help="masks, split, train, predict, evaluate, error maps "
                        "for one class and mode")
    return parser


# --- shared plumbing ---------------------------------------------------------


def _ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {path}: {exc}") from exc
    return path


def _write_json(path: Path, payload) -> None:
    _ensure_dir(path.parent)
    try:
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _read_json(path: Path):
    try:
        return json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise MissingFile(f"{path} does not exist (run the earlier stage first)") from exc
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from exc


def _write_run_record(cfg: PipelineConfig, command: str, threads: int) -> None:
    import PIL
    record = {
        "command": command,
        "config": cfg.snapshot,
        "seed": cfg.seed,
        "threads": threads,
        "kernel_backend": kernels.BACKEND,
        "versions": {
            "lulcseg": __version__,
            "python": ".".join(map(str, sys.version_info[:3])),
            "numpy": np.__version__,
            "pillow": PIL.__version__,
        },
    }
    _write_json(cfg.output_dir / "run_record.json", record)


def _load_labels_map(cfg: PipelineConfig, entry) -> np.ndarray:
    if entry.labels is None:
        raise MissingFile(f"{entry.stem}: no labels file configured")
    return decode_labels(load_rgb(entry.labels), cfg.palette)


def _split_path(cfg: PipelineConfig, args) -> Path:
    given = getattr(args, "split_file", None)
    return Path(given) if given else cfg.output_dir / "split.json"


def _mode_of(cfg: PipelineConfig, cls: LulcClass, args) -> TrainMode:
    return cfg.train_config_for(cls, getattr(args, "mode", None)).mode


def _checkpoint_path(cfg: PipelineConfig, cls: LulcClass, mode: TrainMode) -> Path:
    return cfg.output_dir / "checkpoints" / f"{cls.name.lower()}.{mode.value}.ckpt"


def _pred_path(out_dir: Path, stem: str, cls: LulcClass, mode: TrainMode) -> Path:
    return out_dir / f"{stem}.{cls.name.lower()}.{mode.value}.png"


def _test_stems(cfg: PipelineConfig, args, cls: LulcClass) -> list:
    doc = _read_json(_split_path(cfg, args))
    try:
        return list(doc["classes"][cls.name.lower()]["test"])
    except KeyError as exc:
        raise DataError(f"split file has no test list for {cls.name.lower()}") from exc


def _train_stems(cfg: PipelineConfig, args, cls: LulcClass) -> list:
    doc = _read_json(_split_path(cfg, args))
    try:
        return list(doc["classes"][cls.name.lower()]["train"])
    except KeyError as exc:
        raise DataError(f"split file has no train list for {cls.name.lower()}") from exc


# --- subcommands -------------------------------------------------------------


def cmd_masks(cfg: PipelineConfig, args) -> int:
    classes = [_class_arg(args.cls)] if getattr(args, "cls", None) else list(LulcClass)
    entries = cfg.images
    if getattr(args, "name", None):
        entries = [cfg.entry(n) for n in args.name]
    if not entries:
        raise DataError("config lists no dataset images")
    out = _ensure_dir(cfg.output_dir / "masks")
    written = 0
    for entry in entries:
        class_map = _load_labels_map(cfg, entry)
        for cls in classes:
            mask = make_binary_mask(class_map, cls)
            save_rgb(render_mask(mask),
                     out / f"{entry.stem}.{cls.name.lower()}.mask.png")
            written += 1
    print(f"wrote {written} mask(s) for {len(entries)} image(s) to {out}")
    return 0


def cmd_split(cfg: PipelineConfig, args) -> int:
    if not cfg.images:
        raise DataError("config lists no dataset images")
    fractions = {}
    for entry in cfg.images:
        class_map = _load_labels_map(cfg, entry)
        fractions[entry.stem] = {c: class_fraction(class_map, c) for c in LulcClass}

    stems = [e.stem for e in cfg.images]
    doc = {"classes": {}, "presence_threshold": cfg.split.presence_threshold}
    for cls in LulcClass:
        vals = [fractions[s][cls] for s in stems]
        selected_idx = select_images(vals, cls, cfg.split)
        train_idx, test_idx = split_train_test(selected_idx, cls, cfg.split)
        name = cls.name.lower()
        doc["classes"][name] = {
            "selected": [stems[i] for i in selected_idx],
            "train": [stems[i] for i in train_idx],
            "test": [stems[i] for i in test_idx],
            "fractions": {stems[i]: vals[i] for i in selected_idx},
        }
        print(f"{name}: selected {len(selected_idx)}, "
              f"train {len(train_idx)}, test {len(test_idx)}")
    _write_json(_split_path(cfg, args), doc)
    return 0


def cmd_augment(cfg: PipelineConfig, args) -> int:
    if args.image:
        image_path = Path(args.image)
        stem, labels = image_path.stem, None
    elif args.name:
        entry = cfg.entry(args.name)
        image_path, stem, labels = entry.image, entry.stem, entry.labels
    else:
        raise ConfigError(["augment needs --name or --image"])
    raster = load_rgb(image_path)
    cls = _class_arg(args.cls) if args.cls else None
    if cls is not None and labels is not None:
        mask = make_binary_mask(decode_labels(load_rgb(labels), cfg.palette), cls)
    else:
        mask = np.zeros(raster.shape[:2], dtype=np.uint8)
    out = _ensure_dir(cfg.output_dir / "augment")
    variants = augment_set(raster, mask, cfg.augment)
    kinds = (cfg.augment or AugmentConfig()).kinds
    names = ["original"] + [k.value for k in kinds]
    for name, (r, m) in zip(names, variants):
        save_rgb(r, out / f"{stem}.{name}.png")
        if cls is not None and labels is not None:
            save_rgb(render_mask(m), out / f"{stem}.{name}.mask.png")
    print(f"wrote {len(variants)} variant(s) of {stem} to {out}")
    return 0


def cmd_tile(cfg: PipelineConfig, args) -> int:
    if args.image:
        image_path = Path(args.image)
        stem = image_path.stem
    elif args.name:
        entry = cfg.entry(args.name)
        image_path, stem = entry.image, entry.stem
    else:
        raise ConfigError(["tile needs --name or --image"])
    raster = load_rgb(image_path)
    grid = plan_grid(Dims(raster.shape[1], raster.shape[0]))
    out = _ensure_dir(cfg.output_dir / "tiles" / stem)
    for idx in grid.indices():
        save_rgb(extract_tile(raster, grid, idx),
                 out / f"{stem}.r{idx.row}c{idx.col}.png")
    print(f"{stem}: {grid.cols} cols x {grid.rows} rows = {grid.count} tiles -> {out}")
    return 0


_TILE_NAME = re.compile(r"^(?P<stem>.+)\.r(?P<row>\d+)c(?P<col>\d+)\.png$")


def cmd_stitch(cfg: PipelineConfig, args) -> int:
    tiles_dir = Path(args.tiles_dir)
    if not tiles_dir.is_dir():
        raise MissingFile(f"{tiles_dir} is not a directory")
    found = {}
    stem = None
    for p in sorted(tiles_dir.iterdir()):
        m = _TILE_NAME.match(p.name)
        if not m:
            continue
        stem = m.group("stem")
        found[(int(m.group("row")), int(m.group("col")))] = p
    if not found:
        raise DataError(f"no <stem>.r<row>c<col>.png tiles in {tiles_dir}")
    if args.like:
        dims = image_dims(args.like)
    elif args.width and args.height:
        dims = Dims(args.width, args.height)
    else:
        raise ConfigError(["stitch needs --like or both --width and --height"])
    grid = plan_grid(dims)
    tiles = {key: load_rgb(path) for key, path in found.items()}
    full = stitch(tiles, grid)
    out = _ensure_dir(cfg.output_dir / "stitched") / f"{stem}.png"
    save_rgb(full, out)
    print(f"stitched {len(tiles)} tiles -> {out} ({dims.width}x{dims.height})")
    return 0


def _training_pairs(cfg: PipelineConfig, stems: list, cls: LulcClass) -> list:
    pairs = []
    for stem in stems:
        entry = cfg.entry(stem)
        if entry.labels is None:
            raise MissingFile(f"{stem}: no labels file configured")
        dims = image_dims(entry.image)

        def loader(e=entry):
            raster = load_rgb(e.image)
            mask = make_binary_mask(
                decode_labels(load_rgb(e.labels), cfg.palette), cls)
            return raster, mask

        pairs.append((dims, loader))
    return pairs


def cmd_train(cfg: PipelineConfig, args) -> int:
    cls = _class_arg(args.cls)
    tc = cfg.train_config_for(cls, args.mode)
    stems = _train_stems(cfg, args, cls)
    pairs = _training_pairs(cfg, stems, cls)
    stream = build_training_set(pairs, tc)
    print(f"training {cls.name.lower()} ({tc.mode.value}): "
          f"{len(stems)} image(s), {len(stream)} sample(s), "
          f"{tc.epochs} epoch(s), lr {tc.learning_rate}")
    model = init_model(seed=tc.seed, width_multiplier=tc.width_multiplier)
    ckpt_path = _checkpoint_path(cfg, cls, tc.mode)
    _ensure_dir(ckpt_path.parent)
    try:
        model, loss_log = train(model, stream, tc)
    except DivergedLoss as exc:
        if exc.checkpoint is not None:
            model.restore(exc.checkpoint)
            rescue = checkpoint_from_model(model, tc, epoch=exc.epoch)
            save_checkpoint(rescue, ckpt_path.with_suffix(".diverged.ckpt"))
        raise
    cp = checkpoint_from_model(model, tc, metrics={"final_loss": loss_log[-1]})
    save_checkpoint(cp, ckpt_path)
    _write_json(cfg.output_dir / "loss" / f"{cls.name.lower()}.{tc.mode.value}.json",
                {"class": cls.name.lower(), "mode": tc.mode.value,
                 "learning_rate": tc.learning_rate, "epochs": tc.epochs,
                 "loss": loss_log})
    print(f"final loss {loss_log[-1]:.6f}; checkpoint -> {ckpt_path}")
    return 0


def cmd_predict(cfg: PipelineConfig, args) -> int:
    cls = _class_arg(args.cls)
    tc = cfg.train_config_for(cls, args.mode)
    ckpt_path = Path(args.checkpoint) if args.checkpoint \
        else _checkpoint_path(cfg, cls, tc.mode)
    cp = load_checkpoint(ckpt_path)
    check_target_class(cp, cls)
    model = model_from_checkpoint(cp)
    stems = args.name or _test_stems(cfg, args, cls)
    out = _ensure_dir(cfg.output_dir / "predictions")
    for stem in stems:
        raster = load_rgb(cfg.entry(stem).image)
        if tc.mode is TrainMode.GRID:
            pred = predict_grid(model, raster, batch_size=tc.batch_size)
        else:
            pred = predict_downsampled(model, raster)
        path = _pred_path(out, stem, cls, tc.mode)
        save_rgb(render_mask(pred), path)
        print(f"{stem}: predicted {pred.shape[1]}x{pred.shape[0]} -> {path}")
    return 0


def _gt_mask(cfg: PipelineConfig, stem: str, cls: LulcClass) -> np.ndarray:
    return make_binary_mask(_load_labels_map(cfg, cfg.entry(stem)), cls)


def cmd_evaluate(cfg: PipelineConfig, args) -> int:
    cls = _class_arg(args.cls)
    mode = _mode_of(cfg, cls, args)
    pred_dir = Path(args.pred_dir) if args.pred_dir \
        else cfg.output_dir / "predictions"
    stems = _test_stems(cfg, args, cls)
    per_image = {}
    rows = []
    pooled = None
    for stem in stems:
        pred = decode_mask(load_rgb(_pred_path(pred_dir, stem, cls, mode)))
        gt = _gt_mask(cfg, stem, cls)
        if pred.shape != gt.shape:
            # downsample-mode predictions score at full resolution
            pred = resize_nearest(pred, Dims(gt.shape[1], gt.shape[0]))
        cm = confusion(pred, gt)
        row = metrics_from_confusion(cm)
        pooled = cm if pooled is None else pooled + cm
        rows.append(row)
        per_image[stem] = {
            "counts": {"tp": cm.tp, "fp": cm.fp, "fn": cm.fn, "tn": cm.tn},
            "metrics": _row_payload(row),
        }
        print(f"{stem}: acc {row.accuracy:.3f} iou {row.iou:.3f} "
              f"recall {row.recall:.3f} precision {row.precision:.3f} "
              f"f1 {row.f1:.3f}")
    class_row = mean_rows(rows)
    payload = {
        "class": cls.name.lower(),
        "mode": mode.value,
        "per_image": per_image,
        "row": _row_payload(class_row),
        "pooled": {
            "counts": {"tp": pooled.tp, "fp": pooled.fp,
                       "fn": pooled.fn, "tn": pooled.tn},
            "metrics": _row_payload(metrics_from_confusion(pooled)),
        },
        "aggregation": "row = unweighted mean over the per-image metric rows",
    }
    path = cfg.output_dir / "metrics" / f"{cls.name.lower()}.{mode.value}.json"
    _write_json(path, payload)
    print(f"{cls.name.lower()} ({mode.value}): mean acc {class_row.accuracy:.3f} "
          f"iou {class_row.iou:.3f} -> {path}")
    return 0


def _row_payload(row: MetricsRow) -> dict:
    return {"accuracy": row.accuracy, "iou": row.iou, "recall": row.recall,
            "precision": row.precision, "f1": row.f1,
            "mean_iou": row.mean_iou, "flags": list(row.flags)}


def _row_from_payload(d: dict) -> MetricsRow:
    return MetricsRow(d["accuracy"], d["iou"], d["recall"], d["precision"],
                      d["f1"], mean_iou=d.get("mean_iou"),
                      flags=tuple(d.get("flags", ())))


def cmd_errormap(cfg: PipelineConfig, args) -> int:
    out = _ensure_dir(cfg.output_dir / "errormaps")
    if args.pred and args.gt:
        pred = decode_mask(load_rgb(args.pred))
        gt = decode_mask(load_rgb(args.gt))
        path = out / f"{Path(args.pred).stem}.errors.png"
        save_rgb(error_map(pred, gt), path)
        print(f"error map -> {path}")
        return 0
    if not args.cls:
        raise ConfigError(["errormap needs --pred/--gt or --class"])
    cls = _class_arg(args.cls)
    mode = _mode_of(cfg, cls, args)
    pred_dir = Path(args.pred_dir) if args.pred_dir \
        else cfg.output_dir / "predictions"
    for stem in _test_stems(cfg, args, cls):
        pred = decode_mask(load_rgb(_pred_path(pred_dir, stem, cls, mode)))
        gt = _gt_mask(cfg, stem, cls)
        if pred.shape != gt.shape:
            pred = resize_nearest(pred, Dims(gt.shape[1], gt.shape[0]))
        path = out / f"{stem}.{cls.name.lower()}.{mode.value}.errors.png"
        save_rgb(error_map(pred, gt), path)
        print(f"{stem}: error map -> {path}")
    return 0


def cmd_report(cfg: PipelineConfig, args) -> int:
    mode = TrainMode(args.mode) if args.mode else \
        cfg.train_config_for(LulcClass.FOREST).mode
    rows = {}
    for cls in LulcClass:
        path = cfg.output_dir / "metrics" / f"{cls.name.lower()}.{mode.value}.json"
        rows[cls] = _row_from_payload(_read_json(path)["row"])
    reference = REFERENCE_ECOGNITION if args.reference == "ecognition" else None
    doc = report(rows, reference=reference,
                 title=f"Per-class segmentation performance ({mode.value})")
    txt = cfg.output_dir / f"report.{mode.value}.txt"
    _ensure_dir(txt.parent)
    txt.write_text(doc.text + "\n")
    _write_json(cfg.output_dir / f"report.{mode.value}.json", doc.data)
    print(doc.text)
    return 0


def cmd_pipeline(cfg: PipelineConfig, args) -> int:
    cls = _class_arg(args.cls)
    mode = _mode_of(cfg, cls, args)
    steps = ["masks", "split", "train", "predict", "evaluate", "errormap"]
    ns = argparse.Namespace(**vars(args))
    ns.name = None
    ns.checkpoint = None
    ns.pred = None
    ns.gt = None
    ns.pred_dir = None
    ns.split_file = None
    ns.mode = mode.value
    for i, step in enumerate(steps, start=1):
        print(f"[{i}/{len(steps)}] {step}")
        {"masks": cmd_masks, "split": cmd_split, "train": cmd_train,
         "predict": cmd_predict, "evaluate": cmd_evaluate,
         "errormap": cmd_errormap}[step](cfg, ns)
    have = [c for c in LulcClass
            if (cfg.output_dir / "metrics" / f"{c.name.lower()}.{mode.value}.json").is_file()]
    if len(have) == len(LulcClass):
        print("[+] report")
        ns.reference = "none"
        cmd_report(cfg, ns)
    else:
        print(f"report skipped: metrics present for {len(have)}/4 classes")
    return 0


_COMMANDS = {
    "masks": cmd_masks, "split": cmd_split, "augment": cmd_augment,
    "tile": cmd_tile, "stitch": cmd_stitch, "train": cmd_train,
    "predict": cmd_predict, "evaluate": cmd_evaluate,
    "errormap": cmd_errormap, "report": cmd_report, "pipeline": cmd_pipeline,
}


def _dry_run(cfg: PipelineConfig) -> int:
    problems = []
    for entry in cfg.images:
        try:
            dims = image_dims(entry.image)
            if entry.labels is not None:
                ldims = image_dims(entry.labels)
                if ldims != dims:
                    problems.append(f"{entry.stem}: image {dims.width}x{dims.height} "
                                    f"vs labels {ldims.width}x{ldims.height}")
        except LulcError as exc:
            problems.append(f"{entry.stem}: {exc}")
    if problems:
        raise ConfigError(problems)
    print(f"config ok: {len(cfg.images)} image(s), output {cfg.output_dir}")
    return 0


def _effective_overrides(args) -> dict:
    overrides = {}
    if getattr(args, "output_dir", None):
        overrides["output_dir"] = args.output_dir
    if getattr(args, "threads", None):
        overrides["threads"] = args.threads
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    elif os.environ.get("LULC_SEED"):
        try:
            overrides["seed"] = int(os.environ["LULC_SEED"])
        except ValueError as exc:
            raise ConfigError([f"LULC_SEED must be an integer, "
                               f"got {os.environ['LULC_SEED']!r}"]) from exc
    return overrides


def _error_line(exc: Exception) -> str:
    msg = " ".join(str(exc).split())
    return f"lulcseg: error: {type(exc).__name__}: {msg}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _effective_overrides(args))
        threads = args.threads or cfg.threads or os.cpu_count() or 1
        kernels.set_num_threads(threads)
        _write_run_record(cfg, args.command, threads)
        if args.dry_run:
            return _dry_run(cfg)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"lulcseg: config: {problem}", file=sys.stderr)
        print(_error_line(exc), file=sys.stderr)
        return 2
    except DivergedLoss as exc:
        print(_error_line(exc), file=sys.stderr)
        return 4
    except IoFailure as exc:
        print(_error_line(exc), file=sys.stderr)
        return 5
    except DataError as exc:
        print(_error_line(exc), file=sys.stderr)
        return 3
    except LulcError as exc:
        print(_error_line(exc), file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
