"""On-disk dataset descriptor.

A dataset root holds paired directories ``images/`` (RGB PNG) and
``annotations/`` (single-channel 8-bit index PNG, one byte per pixel,
value = class index or ignore_index) plus a ``meta.json`` descriptor
carrying class count, ignore index, palette, class names, and split id
lists. Converted copies of public benchmarks fit the same layout.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError

META_FILENAME = "meta.json"
META_FORMAT_VERSION = 1

SPLITS = ("train", "val", "test")


@dataclass
class DatasetDescriptor:
    """Everything needed to interpret one split of an on-disk dataset."""

    root: Path
    split: str
    num_classes: int
    ignore_index: int
    palette: list = field(default_factory=list)
    class_names: list = field(default_factory=list)
    ids: list = field(default_factory=list)

    def __post_init__(self):
        self.root = Path(self.root)
        if self.split not in SPLITS:
            raise ConfigError(f"unknown split {self.split!r}; expected one of {SPLITS}")
        k = self.num_classes
        if k < 2:
            raise ConfigError(f"num_classes must be >= 2, got {k}")
        if len(self.palette) != k or len(self.class_names) != k:
            raise ConfigError(
                f"palette ({len(self.palette)}) and class_names ({len(self.class_names)}) "
                f"must both have num_classes ({k}) entries"
            )
        if 0 <= self.ignore_index < k:
            raise ConfigError(
                f"ignore_index {self.ignore_index} collides with class indices 0..{k - 1}"
            )

    def image_path(self, sample_id: str) -> Path:
        return self.root / "images" / f"{sample_id}.png"

    def annotation_path(self, sample_id: str) -> Path:
        return self.root / "annotations" / f"{sample_id}.png"

    def __len__(self) -> int:
        return len(self.ids)


def write_meta(root, *, num_classes, ignore_index, palette, class_names, splits, extra=None):
    """Write ``meta.json`` under ``root``; key order is fixed for reproducibility."""
    meta = {
        "format_version": META_FORMAT_VERSION,
        "num_classes": num_classes,
        "ignore_index": ignore_index,
        "class_names": list(class_names),
        "palette": [list(map(int, c)) for c in palette],
        "splits": {name: list(ids) for name, ids in splits.items()},
    }
    if extra:
        meta.update(extra)
    path = Path(root) / META_FILENAME
    path.write_text(json.dumps(meta, indent=2) + "\n")
    return path


def load_descriptor(root, split: str) -> DatasetDescriptor:
    """Read ``meta.json`` and bind it to one split."""
    meta_path = Path(root) / META_FILENAME
    if not meta_path.is_file():
        raise ConfigError(f"no {META_FILENAME} under {root}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse {meta_path}: {exc}") from exc
    version = meta.get("format_version")
    if version != META_FORMAT_VERSION:
        raise ConfigError(
            f"{meta_path}: unsupported descriptor version {version!r} "
            f"(expected {META_FORMAT_VERSION})"
        )
    splits = meta.get("splits", {})
    if split not in splits:
        raise ConfigError(f"{meta_path}: no split {split!r}; available: {sorted(splits)}")
    return DatasetDescriptor(
        root=Path(root),
        split=split,
        num_classes=meta["num_classes"],
        ignore_index=meta["ignore_index"],
        palette=meta["palette"],
        class_names=meta["class_names"],
        ids=list(splits[split]),
    )
