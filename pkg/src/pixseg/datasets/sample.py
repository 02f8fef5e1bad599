"""Sample and batch containers plus padding collation."""

import math
from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import ShapeError

DEFAULT_SIZE_DIVISOR = 32


class EmptyBatchError(ValueError):
    """collate() was handed zero samples."""


@dataclass
class SegSample:
    """One (image, mask, meta) record.

    ``image`` is H x W x 3 float32; ``mask`` is H x W integer labels.
    The two always share spatial dimensions; ``meta`` carries at least
    ``id``, ``original_size``, ``current_size``, and ``ignore_index``.
    """

    image: np.ndarray
    mask: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.image.ndim != 3:
            raise ShapeError(f"image must be HxWxC, got shape {self.image.shape}")
        if self.mask.ndim != 2:
            raise ShapeError(f"mask must be HxW, got shape {self.mask.shape}")
        if self.image.shape[:2] != self.mask.shape:
            raise ShapeError(
                f"image {self.image.shape[:2]} and mask {self.mask.shape} sizes differ"
            )
        self.meta.setdefault("current_size", tuple(self.mask.shape))


@dataclass
class Batch:
    """N stacked samples: images N x C x H x W, masks N x H x W."""

    images: torch.Tensor
    masks: torch.Tensor
    metas: list

    def __len__(self) -> int:
        return self.images.shape[0]

    def slice(self, start: int, stop: int) -> "Batch":
        return Batch(self.images[start:stop], self.masks[start:stop], self.metas[start:stop])


def _round_up(value: int, divisor: int) -> int:
    return int(math.ceil(value / divisor)) * divisor


def collate(samples, pad_value: float = 0.0, ignore_index: int = 255,
            size_divisor: int = DEFAULT_SIZE_DIVISOR) -> Batch:
    """Stack samples into a batch, bottom/right-padding to a shared size.

    The shared H, W is the per-dimension maximum over samples rounded up
    to a multiple of ``size_divisor``. Padded image pixels carry
    ``pad_value`` and padded mask pixels carry ``ignore_index`` so they
    drop out of the loss.
    """
    if len(samples) == 0:
        raise EmptyBatchError("cannot collate an empty list of samples")
    channels = {s.image.shape[2] for s in samples}
    if len(channels) != 1:
        raise ShapeError(f"samples disagree on channel count: {sorted(channels)}")
    c = channels.pop()
    out_h = _round_up(max(s.image.shape[0] for s in samples), size_divisor)
    out_w = _round_up(max(s.image.shape[1] for s in samples), size_divisor)

    images = np.full((len(samples), out_h, out_w, c), pad_value, dtype=np.float32)
    masks = np.full((len(samples), out_h, out_w), ignore_index, dtype=np.int64)
    metas = []
    for i, s in enumerate(samples):
        h, w = s.mask.shape
        images[i, :h, :w] = s.image
        masks[i, :h, :w] = s.mask
        metas.append(dict(s.meta))
    return Batch(
        images=torch.from_numpy(images).permute(0, 3, 1, 2).contiguous(),
        masks=torch.from_numpy(masks),
        metas=metas,
    )
