"""Folder-backed segmentation dataset."""

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..registry import DATASETS
from .descriptor import load_descriptor
from .sample import SegSample
from .transforms import build_pipeline


class CorruptSampleError(RuntimeError):
    """A sample's files are unreadable or image/mask sizes disagree."""


class IndexOutOfRangeError(IndexError):
    """Sample index outside [0, len(dataset))."""


@DATASETS.register("folder")
class FolderDataset:
    """Loads image/annotation PNG pairs described by ``meta.json``.

    Images decode to float32 in [0, 1] before any normalization; masks
    decode as raw class indices (never color-mapped). ``fetch`` applies
    the configured transform pipeline with a caller-supplied generator,
    so loading is a pure per-sample function safe for parallel workers.
    """

    def __init__(self, root, split="train", pipeline=()):
        self.descriptor = load_descriptor(root, split)
        self.pipeline = build_pipeline(pipeline)

    def __len__(self) -> int:
        return len(self.descriptor)

    @property
    def num_classes(self) -> int:
        return self.descriptor.num_classes

    @property
    def ignore_index(self) -> int:
        return self.descriptor.ignore_index

    def _check_index(self, index: int) -> None:
        if not 0 <= index < len(self):
            raise IndexOutOfRangeError(
                f"index {index} out of range for split {self.descriptor.split!r} "
                f"of length {len(self)}"
            )

    def load_sample(self, index: int) -> SegSample:
        """Decode one raw sample, before the transform pipeline."""
        self._check_index(index)
        sample_id = self.descriptor.ids[index]
        image_path = self.descriptor.image_path(sample_id)
        mask_path = self.descriptor.annotation_path(sample_id)
        try:
            with Image.open(image_path) as im:
                image = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
            with Image.open(mask_path) as ann:
                if ann.mode != "L":
                    raise CorruptSampleError(
                        f"{mask_path}: annotation must be single-channel 8-bit, got mode {ann.mode!r}"
                    )
                mask = np.asarray(ann, dtype=np.int64)
        except (OSError, UnidentifiedImageError) as exc:
            raise CorruptSampleError(f"cannot decode sample {sample_id!r}: {exc}") from exc
        if image.shape[:2] != mask.shape:
            raise CorruptSampleError(
                f"sample {sample_id!r}: image {image.shape[:2]} and mask {mask.shape} "
                "sizes disagree"
            )
        legal = (mask == self.ignore_index) | ((0 <= mask) & (mask < self.num_classes))
        if not np.all(legal):
            bad = np.unique(mask[~legal])
            raise CorruptSampleError(
                f"sample {sample_id!r}: mask contains illegal labels {bad.tolist()}"
            )
        meta = {
            "id": sample_id,
            "original_size": tuple(mask.shape),
            "current_size": tuple(mask.shape),
            "ignore_index": self.ignore_index,
        }
        return SegSample(image=image, mask=mask, meta=meta)

    def fetch(self, index: int, rng=None) -> SegSample:
        """Load and transform one sample."""
        if rng is None:
            rng = np.random.default_rng([0, index])
        sample = self.load_sample(index)
        for transform in self.pipeline:
            sample = transform(sample, rng)
        return sample

    def __getitem__(self, index: int) -> SegSample:
        return self.fetch(index)
