"""Synthetic shape dataset for desk-scale training and testing.

Each image holds 1-5 non-overlapping filled shapes over a textured
background. Every foreground class has a fixed shape kind (rectangle,
ellipse, triangle, ring, cross) and a base color; instances jitter both
color and geometry so the task is nontrivial but learnable in minutes.
Generation is a pure function of the seed: the same call writes
byte-identical files.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import ConfigError
from .descriptor import DatasetDescriptor, load_descriptor, write_meta

# class 0 is background; foreground kinds are assigned in this order
SHAPE_KINDS = ("rectangle", "ellipse", "triangle", "ring", "cross")

CLASS_COLORS = np.array(
    [
        (45, 45, 45),     # background (palette entry only)
        (205, 62, 58),    # rectangle: red
        (66, 178, 82),    # ellipse: green
        (64, 92, 214),    # triangle: blue
        (222, 202, 58),   # ring: yellow
        (192, 74, 198),   # cross: magenta
    ],
    dtype=np.float64,
)

MAX_CLASSES = 1 + len(SHAPE_KINDS)


def _shape_region(kind: str, height: int, width: int, rng) -> np.ndarray | None:
    """Rasterize one randomly-parameterized shape as a boolean mask."""
    m = min(height, width)
    smin = max(4, int(0.10 * m))
    smax = max(smin + 2, int(0.20 * m))
    yy, xx = np.mgrid[0:height, 0:width]

    if kind == "rectangle":
        hy = int(rng.integers(smin, smax + 1))
        hx = int(rng.integers(smin, smax + 1))
        margin = max(hy, hx) + 1
    elif kind == "ellipse":
        a = int(rng.integers(smin, smax + 1))
        b = int(rng.integers(smin, smax + 1))
        margin = max(a, b) + 1
    elif kind == "triangle":
        r = int(rng.integers(smin, smax + 1))
        margin = r + 1
    elif kind == "ring":
        r_out = int(rng.integers(smin, smax + 1))
        margin = r_out + 1
    elif kind == "cross":
        arm = int(rng.integers(smin, smax + 1))
        thick = max(2, arm // 3)
        margin = arm + 1
    else:
        raise ValueError(f"unknown shape kind {kind!r}")

    if 2 * margin >= min(height, width):
        return None
    cy = int(rng.integers(margin, height - margin))
    cx = int(rng.integers(margin, width - margin))

    if kind == "rectangle":
        return (np.abs(yy - cy) <= hy) & (np.abs(xx - cx) <= hx)
    if kind == "ellipse":
        return ((yy - cy) / a) ** 2 + ((xx - cx) / b) ** 2 <= 1.0
    if kind == "triangle":
        # upright isoceles: apex (cx, cy-r), base corners (cx -/+ r, cy+r);
        # half-width grows linearly from 0 at the apex to r at the base
        apex_y, base_y = cy - r, cy + r
        inside = (yy >= apex_y) & (yy <= base_y)
        return inside & (np.abs(xx - cx) <= (yy - apex_y) / 2.0)
    if kind == "ring":
        r_in = max(1.0, 0.55 * r_out)
        d2 = (yy - cy) ** 2 + (xx - cx) ** 2
        return (d2 <= r_out**2) & (d2 >= r_in**2)
    if kind == "cross":
        horiz = (np.abs(yy - cy) <= thick) & (np.abs(xx - cx) <= arm)
        vert = (np.abs(xx - cx) <= thick) & (np.abs(yy - cy) <= arm)
        return horiz | vert
    return None


def _textured_background(height: int, width: int, rng) -> np.ndarray:
    base = rng.uniform(80, 150, size=3)
    yy, xx = np.mgrid[0:height, 0:width]
    tex = np.zeros((height, width), dtype=np.float64)
    for _ in range(3):
        fy = rng.uniform(0.5, 3.0)
        fx = rng.uniform(0.5, 3.0)
        phase = rng.uniform(0, 2 * np.pi)
        tex += rng.uniform(4, 9) * np.sin(2 * np.pi * (fy * yy / height + fx * xx / width) + phase)
    image = base[None, None, :] + tex[:, :, None]
    image += rng.normal(0.0, 5.0, size=(height, width, 3))
    return image


def _render_sample(height: int, width: int, num_classes: int, rng):
    image = _textured_background(height, width, rng)
    annotation = np.zeros((height, width), dtype=np.uint8)
    occupied = np.zeros((height, width), dtype=bool)

    n_shapes = int(rng.integers(1, 6))
    placed = 0
    for _ in range(n_shapes):
        cls = int(rng.integers(1, num_classes))
        kind = SHAPE_KINDS[cls - 1]
        for _ in range(40):
            region = _shape_region(kind, height, width, rng)
            if region is None or not region.any():
                continue
            if (region & occupied).any():
                continue
            color = CLASS_COLORS[cls] + rng.normal(0.0, 18.0, size=3)
            image[region] = color + rng.normal(0.0, 4.0, size=(int(region.sum()), 3))
            annotation[region] = cls
            occupied |= region
            placed += 1
            break
    if placed == 0:
        # guarantee at least one labeled shape per image
        region = _shape_region(SHAPE_KINDS[0], height, width, rng)
        if region is not None:
            image[region] = CLASS_COLORS[1]
            annotation[region] = 1

    image = np.clip(image, 0, 255).astype(np.uint8)
    return image, annotation


def generate_synthetic_dataset(seed: int, count: int, size, num_classes: int,
                               out_dir, val_count: int = 0) -> DatasetDescriptor:
    """Generate a dataset under ``out_dir`` and return its train descriptor.

    ``count`` is the total number of samples; the last ``val_count`` ids
    form the val split and the rest the train split. Each sample is
    generated from its own seed stream ``(seed, index)``, so the output
    is byte-identical across calls with equal arguments.
    """
    if num_classes < 2:
        raise ConfigError(f"num_classes must be >= 2 (class 0 is background), got {num_classes}")
    if num_classes > MAX_CLASSES:
        raise ConfigError(
            f"num_classes must be <= {MAX_CLASSES} (one shape kind per foreground class), "
            f"got {num_classes}"
        )
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    if not 0 <= val_count < count:
        raise ConfigError(f"val_count must be in [0, count), got {val_count}")
    height, width = (size, size) if isinstance(size, int) else (int(size[0]), int(size[1]))

    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "annotations").mkdir(parents=True, exist_ok=True)

    ids = [f"{i:06d}" for i in range(count)]
    for i, sample_id in enumerate(ids):
        rng = np.random.default_rng([seed, i])
        image, annotation = _render_sample(height, width, num_classes, rng)
        Image.fromarray(image, "RGB").save(out_dir / "images" / f"{sample_id}.png")
        Image.fromarray(annotation, "L").save(out_dir / "annotations" / f"{sample_id}.png")

    class_names = ["background"] + list(SHAPE_KINDS[: num_classes - 1])
    palette = CLASS_COLORS[:num_classes].astype(int).tolist()
    write_meta(
        out_dir,
        num_classes=num_classes,
        ignore_index=255,
        palette=palette,
        class_names=class_names,
        splits={
            "train": ids[: count - val_count] if val_count else ids,
            "val": ids[count - val_count:] if val_count else [],
            "test": [],
        },
        extra={"seed": seed, "image_size": [height, width]},
    )
    return load_descriptor(out_dir, "train")
