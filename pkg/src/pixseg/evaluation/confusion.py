"""Confusion matrix accumulation.

The per-pixel counting loop is the hot path of dataset-scale
evaluation, so it has two interchangeable backends: a compiled Cython
kernel (built by setup.py) and a numpy fallback. The compiled kernel is
preferred when importable; set ``PIXSEG_NO_COMPILED_KERNEL=1`` to force
the fallback. ``BACKEND`` reports which one is active.
"""

import os

import numpy as np

from ..errors import LabelOutOfRangeError
from ..errors import ShapeError
from . import _confusion_np


def _load_backend():
    if os.environ.get("PIXSEG_NO_COMPILED_KERNEL"):
        return "numpy", _confusion_np.update_counts
    try:
        from . import _confusion_fast
    except ImportError:
        return "numpy", _confusion_np.update_counts
    return "compiled", _confusion_fast.update_counts


BACKEND, _update_counts = _load_backend()


def _as_flat_int64(array, name):
    arr = np.ascontiguousarray(np.asarray(array), dtype=np.int64)
    return arr.reshape(-1)


class ConfusionMatrix:
    """K x K pixel counts: rows are ground truth, columns prediction.

    Pixels whose ground truth is ``ignore_index`` contribute to no
    cell, so the total always equals the number of evaluated pixels.
    Accumulation is associative and commutative: matrices built from
    any permutation or sharding of the images merge to the same counts.
    """

    def __init__(self, num_classes: int, ignore_index: int = 255):
        if num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {num_classes}")
        self.num_classes = num_classes
        self.ignore_index = ignore_index
        self.counts = np.zeros((num_classes, num_classes), dtype=np.int64)

    def update(self, pred, gt) -> "ConfusionMatrix":
        """Accumulate one prediction/ground-truth pair (any equal shape)."""
        pred_flat = _as_flat_int64(pred, "pred")
        gt_flat = _as_flat_int64(gt, "gt")
        if pred_flat.shape != gt_flat.shape:
            raise ShapeError(
                f"pred {np.shape(pred)} and gt {np.shape(gt)} sizes differ"
            )
        bad = _update_counts(gt_flat, pred_flat, self.counts, self.ignore_index)
        if bad >= 0:
            raise LabelOutOfRangeError(
                f"illegal label pair at flat position {bad}: "
                f"gt={int(gt_flat[bad])}, pred={int(pred_flat[bad])}, "
                f"num_classes={self.num_classes}, ignore_index={self.ignore_index}"
            )
        return self

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.num_classes != self.num_classes:
            raise ShapeError("cannot merge confusion matrices of different K")
        self.counts += other.counts
        return self

    def reset(self) -> None:
        self.counts[:] = 0

    @property
    def total(self) -> int:
        return int(self.counts.sum())
