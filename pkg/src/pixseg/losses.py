"""Objective functions.

The pixel loss is cross-entropy normalized over valid (non-ignored)
pixels — a per-pixel mean, not a per-image mean of means, so runs are
reproducible when ignore counts vary. A fully ignored target yields
loss 0 with weight 0 rather than an error (fully padded crops are
legitimate).
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import LabelOutOfRangeError
from .registry import LOSSES

__all__ = [
    "cross_entropy",
    "CrossEntropyLoss",
    "SegmentationCriterion",
    "combine_losses",
]


def cross_entropy(logits, target, ignore_index=255, class_weights=None,
                  label_smoothing=0.0):
    """Mean of -log softmax(logits)[target] over non-ignored pixels.

    With ``class_weights`` the mean is weighted: sum(w_t * nll) /
    sum(w_t). Returns ``(loss, valid_weight)`` where ``valid_weight`` is
    the normalization denominator (the valid pixel count when
    unweighted); it is the correct factor for averaging gradients
    across data-parallel shards.
    """
    k = logits.shape[1]
    valid = target != ignore_index
    bad = valid & ((target < 0) | (target >= k))
    if bool(bad.any()):
        bad_values = torch.unique(target[bad]).tolist()
        raise LabelOutOfRangeError(
            f"target contains labels {bad_values} outside 0..{k - 1} "
            f"(ignore_index={ignore_index})"
        )
    if not bool(valid.any()):
        return logits.sum() * 0.0, 0.0

    logp = F.log_softmax(logits.float(), dim=1)
    safe_target = target.masked_fill(~valid, 0)
    picked = logp.gather(1, safe_target.unsqueeze(1)).squeeze(1)
    if label_smoothing > 0.0:
        picked = (1.0 - label_smoothing) * picked + label_smoothing * logp.mean(dim=1)
    nll = -picked

    if class_weights is not None:
        weights = torch.as_tensor(class_weights, dtype=logp.dtype, device=logits.device)
        if weights.numel() != k or bool((weights < 0).any()):
            raise ValueError(f"class_weights must be {k} non-negative values")
        pixel_w = weights[safe_target] * valid
        denom = pixel_w.sum()
        return (nll * pixel_w).sum() / denom, float(denom)
    denom = valid.sum()
    return (nll * valid).sum() / denom, float(denom)


@LOSSES.register("cross_entropy")
class CrossEntropyLoss(nn.Module):
    def __init__(self, ignore_index=255, class_weights=None, label_smoothing=0.0):
        super().__init__()
        self.ignore_index = ignore_index
        self.class_weights = class_weights
        self.label_smoothing = label_smoothing

    def forward(self, logits, target):
        return cross_entropy(
            logits,
            target,
            ignore_index=self.ignore_index,
            class_weights=self.class_weights,
            label_smoothing=self.label_smoothing,
        )


def _scalar(value) -> float:
    return float(value.detach()) if torch.is_tensor(value) else float(value)


def combine_losses(main, aux, aux_weight=0.4):
    """total = main + aux_weight * sum(aux); returns (total, breakdown)."""
    total = main
    breakdown = {"main": _scalar(main)}
    for i, term in enumerate(aux):
        total = total + aux_weight * term
        breakdown[f"aux{i}"] = _scalar(term)
    breakdown["total"] = _scalar(total)
    return total, breakdown


class SegmentationCriterion(nn.Module):
    """Applies the pixel loss to main and auxiliary logits.

    Config keys other than ``aux_weight`` go to the loss registry, e.g.
    ``{type: cross_entropy, ignore_index: 255, aux_weight: 0.4}``.
    """

    def __init__(self, loss_cfg):
        super().__init__()
        cfg = dict(loss_cfg)
        self.aux_weight = cfg.pop("aux_weight", 0.4)
        if self.aux_weight < 0:
            raise ValueError(f"aux_weight must be >= 0, got {self.aux_weight}")
        self.base = LOSSES.build(cfg)
        self.ignore_index = getattr(self.base, "ignore_index", 255)

    def forward(self, output, target):
        """Returns (total, breakdown dict, valid_weight of the main term)."""
        main, valid_weight = self.base(output.main_logits, target)
        aux_terms = [self.base(a, target)[0] for a in output.aux_logits]
        total, breakdown = combine_losses(main, aux_terms, self.aux_weight)
        return total, breakdown, valid_weight
