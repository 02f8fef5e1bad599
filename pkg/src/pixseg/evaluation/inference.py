"""Single-scale inference: whole image and sliding window.

Both modes return per-pixel class labels from a single forward pass per
window (no flip or multi-scale averaging). Sliding window accumulates
raw logits into sum/count buffers; argmax ties break to the lowest
class index.
"""

import math

import numpy as np
import torch

from ..errors import ShapeError


class BadWindowError(ValueError):
    """Sliding-window geometry violates stride <= window."""


def _pad_to_divisor(images: torch.Tensor, divisor: int, value: float = 0.0):
    h, w = images.shape[-2:]
    ph = math.ceil(h / divisor) * divisor - h
    pw = math.ceil(w / divisor) * divisor - w
    if ph or pw:
        images = torch.nn.functional.pad(images, (0, pw, 0, ph), value=value)
    return images, (h, w)


def labels_from_logits(logits: torch.Tensor) -> np.ndarray:
    """(K, H, W) logits -> (H, W) labels; ties go to the lowest index."""
    return np.argmax(logits.detach().cpu().numpy(), axis=0).astype(np.int64)


@torch.no_grad()
def _forward_logits(model, images: torch.Tensor) -> torch.Tensor:
    out = model(images)
    logits = out.main_logits if hasattr(out, "main_logits") else out
    if logits.shape[-2:] != images.shape[-2:]:
        raise ShapeError(
            f"segmentor returned logits {tuple(logits.shape[-2:])} for input "
            f"{tuple(images.shape[-2:])}"
        )
    return logits


@torch.no_grad()
def whole_logits(model, image: torch.Tensor, size_divisor: int = 32) -> torch.Tensor:
    """Single forward pass on the (padded) image, cropped back: (K, H, W)."""
    if image.dim() != 3:
        raise ShapeError(f"image must be CxHxW, got shape {tuple(image.shape)}")
    batch, (h, w) = _pad_to_divisor(image.unsqueeze(0), size_divisor)
    logits = _forward_logits(model, batch)
    return logits[0, :, :h, :w]


def infer_whole(model, image: torch.Tensor, size_divisor: int = 32) -> np.ndarray:
    return labels_from_logits(whole_logits(model, image, size_divisor))


@torch.no_grad()
def slide_logits(model, image: torch.Tensor, window, stride,
                 size_divisor: int = 32) -> torch.Tensor:
    """Tile the image, average window logits where they overlap."""
    if image.dim() != 3:
        raise ShapeError(f"image must be CxHxW, got shape {tuple(image.shape)}")
    wh, ww = (window, window) if isinstance(window, int) else tuple(window)
    sh, sw = (stride, stride) if isinstance(stride, int) else tuple(stride)
    if min(wh, ww, sh, sw) < 1:
        raise BadWindowError(f"window {window!r} and stride {stride!r} must be positive")
    if sh > wh or sw > ww:
        raise BadWindowError(
            f"stride ({sh}, {sw}) must not exceed window ({wh}, {ww})"
        )
    h, w = image.shape[-2:]
    wh, ww = min(wh, h), min(ww, w)

    num_classes = None
    total = None
    count = torch.zeros(1, h, w)
    ys = list(range(0, max(h - wh, 0) + 1, sh))
    xs = list(range(0, max(w - ww, 0) + 1, sw))
    if ys[-1] + wh < h:
        ys.append(h - wh)  # clamp the last window to the border
    if xs[-1] + ww < w:
        xs.append(w - ww)
    for y0 in ys:
        for x0 in xs:
            crop = image[:, y0:y0 + wh, x0:x0 + ww]
            logits = whole_logits(model, crop, size_divisor)
            if total is None:
                num_classes = logits.shape[0]
                total = torch.zeros(num_classes, h, w, dtype=logits.dtype)
            total[:, y0:y0 + wh, x0:x0 + ww] += logits
            count[:, y0:y0 + wh, x0:x0 + ww] += 1
    return total / count


def infer_slide(model, image: torch.Tensor, window, stride,
                size_divisor: int = 32) -> np.ndarray:
    return labels_from_logits(slide_logits(model, image, window, stride, size_divisor))
