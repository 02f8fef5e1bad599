"""Dataset-level evaluation: inference + global confusion matrix."""

from pathlib import Path

import numpy as np
import torch
from PIL import Image

from ..segmentors.common import resize
from .confusion import ConfusionMatrix
from .inference import infer_slide, infer_whole, labels_from_logits, slide_logits, whole_logits
from .metrics import MetricsReport, compute_metrics


def _to_tensor(image_hwc: np.ndarray, dtype) -> torch.Tensor:
    return torch.from_numpy(image_hwc).permute(2, 0, 1).contiguous().to(dtype)


def _colorize(labels: np.ndarray, palette) -> np.ndarray:
    table = np.asarray(palette, dtype=np.uint8)
    return table[labels]


def evaluate(model, dataset, mode: str = "whole", window=None, stride=None,
             size_divisor: int = 32, save_dir=None) -> MetricsReport:
    """Run single-scale inference over a split and compute global metrics.

    Iterates the split in index order accumulating one confusion matrix;
    predictions are compared against the untransformed annotation (head
    logits are resized back when the eval pipeline changed geometry).
    With ``save_dir``, raw index PNGs and palette-colorized PNGs are
    written per image.
    """
    if mode not in ("whole", "slide"):
        raise ValueError(f"mode must be 'whole' or 'slide', got {mode!r}")
    if mode == "slide" and (window is None or stride is None):
        raise ValueError("slide mode needs window and stride")
    desc = dataset.descriptor
    cm = ConfusionMatrix(desc.num_classes, desc.ignore_index)

    was_training = getattr(model, "training", False)
    model.eval()
    needs_gt = getattr(model, "needs_ground_truth", False)
    dtype = torch.float32
    for p in model.parameters():
        dtype = p.dtype
        break

    if save_dir is not None:
        save_dir = Path(save_dir)
        (save_dir / "pred").mkdir(parents=True, exist_ok=True)
        (save_dir / "pred_color").mkdir(parents=True, exist_ok=True)

    for index in range(len(dataset)):
        raw = dataset.load_sample(index)
        gt = raw.mask
        if needs_gt:
            out = model.forward_with_mask(torch.from_numpy(gt).unsqueeze(0))
            labels = labels_from_logits(out.main_logits[0])
        else:
            sample = dataset.fetch(index, rng=np.random.default_rng([0, index]))
            image = _to_tensor(sample.image, dtype)
            if mode == "whole":
                logits = whole_logits(model, image, size_divisor)
            else:
                logits = slide_logits(model, image, window, stride, size_divisor)
            if logits.shape[-2:] != gt.shape:
                logits = resize(logits.float().unsqueeze(0), gt.shape)[0]
            labels = labels_from_logits(logits)
        cm.update(labels, gt)

        if save_dir is not None:
            sample_id = raw.meta["id"]
            Image.fromarray(labels.astype(np.uint8), "L").save(
                save_dir / "pred" / f"{sample_id}.png"
            )
            Image.fromarray(_colorize(labels, desc.palette), "RGB").save(
                save_dir / "pred_color" / f"{sample_id}.png"
            )

    if was_training:
        model.train()
    return compute_metrics(cm, inference_mode=mode, class_names=desc.class_names)
