"""Sample transforms.

Geometric transforms apply the same spatial map to image and mask; mask
resampling is nearest-neighbor only (anything else corrupts labels).
Random transforms draw from the generator handed to ``__call__`` so the
data stream stays a pure function of the run seed.

Registered types: ``resize``, ``random_crop``, ``random_flip``,
``normalize``, ``pad``.
"""

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import ConfigError
from ..registry import TRANSFORMS, UnknownTypeError, InvalidParamsError
from .sample import SegSample

__all__ = [
    "BadPipelineError",
    "Resize",
    "RandomCrop",
    "RandomFlip",
    "Normalize",
    "Pad",
    "build_pipeline",
    "apply_pipeline",
]


class BadPipelineError(ConfigError):
    """Pipeline names an unknown transform or passes invalid parameters."""


def _resize_image(image: np.ndarray, size) -> np.ndarray:
    # bilinear with half-pixel centers (align_corners=False semantics)
    t = torch.from_numpy(image).permute(2, 0, 1).unsqueeze(0)
    t = F.interpolate(t, size=size, mode="bilinear", align_corners=False)
    return t.squeeze(0).permute(1, 2, 0).contiguous().numpy()


def _resize_mask(mask: np.ndarray, size) -> np.ndarray:
    t = torch.from_numpy(mask.astype(np.float32)).unsqueeze(0).unsqueeze(0)
    t = F.interpolate(t, size=size, mode="nearest-exact")
    return t.squeeze(0).squeeze(0).numpy().astype(mask.dtype)


@TRANSFORMS.register("resize")
class Resize:
    """Resize image (bilinear) and mask (nearest) together.

    ``target`` is either a single int (the longer side, requires
    keep_ratio) or an ``[h, w]`` pair. With ``keep_ratio`` the scale is
    chosen so the result fits inside the target while preserving aspect
    ratio; sizes round to the nearest integer.
    """

    def __init__(self, target, keep_ratio: bool = True):
        if isinstance(target, int):
            if not keep_ratio:
                raise ConfigError("resize: integer target requires keep_ratio=true")
            if target < 1:
                raise ConfigError(f"resize: target must be positive, got {target}")
        else:
            target = tuple(int(v) for v in target)
            if len(target) != 2 or min(target) < 1:
                raise ConfigError(f"resize: bad target {target!r}")
        self.target = target
        self.keep_ratio = keep_ratio

    def _output_size(self, h: int, w: int):
        if isinstance(self.target, int):
            scale = self.target / max(h, w)
        elif self.keep_ratio:
            scale = min(self.target[0] / h, self.target[1] / w)
        else:
            return self.target
        return max(1, round(h * scale)), max(1, round(w * scale))

    def __call__(self, sample: SegSample, rng) -> SegSample:
        h, w = sample.mask.shape
        size = self._output_size(h, w)
        if size == (h, w):
            return sample
        meta = dict(sample.meta)
        meta["current_size"] = size
        return SegSample(
            image=_resize_image(sample.image, size),
            mask=_resize_mask(sample.mask, size),
            meta=meta,
        )


@TRANSFORMS.register("random_crop")
class RandomCrop:
    """Random fixed-size crop with a category-balance retry rule.

    If a single category covers more than ``max_category_ratio`` of the
    crop, the window is re-drawn (up to ``max_attempts - 1`` times), and
    the final draw is accepted regardless. Crops never exceed the image.
    """

    def __init__(self, size, max_category_ratio: float = 0.75, max_attempts: int = 11):
        if isinstance(size, int):
            size = (size, size)
        self.size = tuple(int(v) for v in size)
        if min(self.size) < 1:
            raise ConfigError(f"random_crop: bad size {self.size!r}")
        if not 0.0 < max_category_ratio <= 1.0:
            raise ConfigError(
                f"random_crop: max_category_ratio must be in (0, 1], got {max_category_ratio}"
            )
        self.max_category_ratio = max_category_ratio
        self.max_attempts = max_attempts

    def _dominant_ratio(self, mask: np.ndarray, ignore_index) -> float:
        labels, counts = np.unique(mask, return_counts=True)
        counts = counts[labels != ignore_index]
        if counts.sum() == 0:
            return 1.0
        return counts.max() / counts.sum()

    def __call__(self, sample: SegSample, rng) -> SegSample:
        h, w = sample.mask.shape
        ch, cw = min(self.size[0], h), min(self.size[1], w)
        ignore_index = sample.meta.get("ignore_index", 255)
        y0 = x0 = 0
        for _ in range(self.max_attempts):
            y0 = int(rng.integers(0, h - ch + 1))
            x0 = int(rng.integers(0, w - cw + 1))
            window = sample.mask[y0:y0 + ch, x0:x0 + cw]
            if self.max_category_ratio >= 1.0:
                break
            if self._dominant_ratio(window, ignore_index) <= self.max_category_ratio:
                break
        meta = dict(sample.meta)
        meta["current_size"] = (ch, cw)
        meta["crop_offset"] = (y0, x0)
        return SegSample(
            image=np.ascontiguousarray(sample.image[y0:y0 + ch, x0:x0 + cw]),
            mask=np.ascontiguousarray(sample.mask[y0:y0 + ch, x0:x0 + cw]),
            meta=meta,
        )


@TRANSFORMS.register("random_flip")
class RandomFlip:
    """Horizontal flip with probability ``prob``; flipping twice restores."""

    def __init__(self, prob: float = 0.5):
        if not 0.0 <= prob <= 1.0:
            raise ConfigError(f"random_flip: prob must be in [0, 1], got {prob}")
        self.prob = prob

    def __call__(self, sample: SegSample, rng) -> SegSample:
        if float(rng.random()) >= self.prob:
            return sample
        return SegSample(
            image=np.ascontiguousarray(sample.image[:, ::-1]),
            mask=np.ascontiguousarray(sample.mask[:, ::-1]),
            meta=dict(sample.meta),
        )


@TRANSFORMS.register("normalize")
class Normalize:
    """Per-channel (x - mean) / std on the image; the mask is untouched."""

    def __init__(self, mean=(0.5, 0.5, 0.5), std=(0.5, 0.5, 0.5)):
        self.mean = np.asarray(mean, dtype=np.float32)
        self.std = np.asarray(std, dtype=np.float32)
        if np.any(self.std == 0):
            raise ConfigError("normalize: std must be nonzero")

    def __call__(self, sample: SegSample, rng) -> SegSample:
        return SegSample(
            image=(sample.image - self.mean) / self.std,
            mask=sample.mask,
            meta=dict(sample.meta),
        )


@TRANSFORMS.register("pad")
class Pad:
    """Bottom/right padding to a fixed size or a size divisor.

    Image pixels pad with ``pad_value``; mask pixels pad with the
    sample's ignore_index so they never enter the loss.
    """

    def __init__(self, size=None, size_divisor=None, pad_value: float = 0.0):
        if (size is None) == (size_divisor is None):
            raise ConfigError("pad: exactly one of size / size_divisor is required")
        if size is not None and isinstance(size, int):
            size = (size, size)
        self.size = tuple(size) if size is not None else None
        self.size_divisor = size_divisor
        self.pad_value = pad_value

    def _target(self, h: int, w: int):
        if self.size is not None:
            return max(h, self.size[0]), max(w, self.size[1])
        d = self.size_divisor
        return -(-h // d) * d, -(-w // d) * d

    def __call__(self, sample: SegSample, rng) -> SegSample:
        h, w = sample.mask.shape
        th, tw = self._target(h, w)
        if (th, tw) == (h, w):
            return sample
        ignore_index = sample.meta.get("ignore_index", 255)
        image = np.pad(
            sample.image, ((0, th - h), (0, tw - w), (0, 0)),
            constant_values=self.pad_value,
        )
        mask = np.pad(
            sample.mask, ((0, th - h), (0, tw - w)),
            constant_values=ignore_index,
        )
        meta = dict(sample.meta)
        meta["current_size"] = (th, tw)
        return SegSample(image=image.astype(np.float32), mask=mask, meta=meta)


def build_pipeline(pipeline_cfgs) -> list:
    """Instantiate a transform list from config nodes."""
    transforms = []
    for node in pipeline_cfgs:
        try:
            transforms.append(TRANSFORMS.build(node))
        except (UnknownTypeError, InvalidParamsError, ConfigError) as exc:
            raise BadPipelineError(str(exc)) from exc
    return transforms


def apply_pipeline(sample: SegSample, pipeline, rng=None) -> SegSample:
    """Run a sample through transform configs or prebuilt transforms."""
    if rng is None:
        rng = np.random.default_rng(0)
    if pipeline and isinstance(pipeline[0], dict):
        pipeline = build_pipeline(pipeline)
    for transform in pipeline:
        sample = transform(sample, rng)
    return sample
