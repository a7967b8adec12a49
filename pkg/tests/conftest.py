import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from lulcseg.labels import LulcClass, Palette

# class -> (label color, plausible image base color)
_LABEL = {c: Palette().colors[c] for c in LulcClass}
_BASE = {
    LulcClass.FOREST: (20, 120, 30),
    LulcClass.FARMLAND: (170, 160, 60),
    LulcClass.BUILTUP: (150, 150, 150),
    LulcClass.WATER: (30, 60, 140),
}


def paint_scene(rng, height, width, ignore_rows=4):
    """Synthetic (image, label raster) pair with all four classes present."""
    order = [LulcClass.FARMLAND, LulcClass.FOREST, LulcClass.BUILTUP,
             LulcClass.WATER]
    cls_map = np.full((height, width), int(order[0]), dtype=np.uint8)
    for cls in order[1:]:
        h = int(rng.integers(height // 4, height // 2))
        w = int(rng.integers(width // 4, width // 2))
        y = int(rng.integers(0, height - h))
        x = int(rng.integers(0, width - w))
        cls_map[y:y + h, x:x + w] = int(cls)
    label = np.zeros((height, width, 3), np.uint8)
    image = np.zeros((height, width, 3), np.uint8)
    for cls in order:
        sel = cls_map == int(cls)
        label[sel] = _LABEL[cls]
        noise = rng.integers(-15, 16, (int(sel.sum()), 3))
        image[sel] = np.clip(np.array(_BASE[cls]) + noise, 0, 255)
    if ignore_rows:
        label[:ignore_rows] = (0, 0, 0)
    return image, label


@pytest.fixture
def toy_dataset(tmp_path):
    """Writes a small dataset + config JSON; returns (config_path, out_dir)."""

    def build(n_images=6, side=224, epochs=1, mode="grid", seed=9,
              test_counts=1, batch_size=2):
        rng = np.random.default_rng(seed)
        img_dir = tmp_path / "data" / "images"
        lbl_dir = tmp_path / "data" / "labels"
        img_dir.mkdir(parents=True, exist_ok=True)
        lbl_dir.mkdir(parents=True, exist_ok=True)
        entries = []
        for i in range(n_images):
            image, label = paint_scene(rng, side, side)
            name = f"scene{i:02d}"
            Image.fromarray(image).save(img_dir / f"{name}.png")
            Image.fromarray(label).save(lbl_dir / f"{name}.png")
            entries.append({"image": f"data/images/{name}.png",
                            "labels": f"data/labels/{name}.png"})
        config = {
            "dataset": {"images": entries},
            "split": {"presence_threshold": 0.05,
                      "test_counts": {c.name.lower(): test_counts
                                      for c in LulcClass}},
            "train": {"epochs": epochs, "learning_rate": 0.01,
                      "batch_size": batch_size, "mode": mode,
                      "width_multiplier": 0.0625},
            "output_dir": "out",
            "seed": 5,
        }
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(config, indent=2))
        return cfg_path, tmp_path / "out"

    return build
