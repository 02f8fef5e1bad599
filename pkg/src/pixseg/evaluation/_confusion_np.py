"""Pure-numpy confusion accumulation kernel (fallback backend)."""

import numpy as np


def update_counts(counts: np.ndarray, gt: np.ndarray, pred: np.ndarray,
                  ignore_index: int) -> int:
    """Accumulate label pairs into ``counts`` (rows = gt, cols = pred).

    ``gt`` and ``pred`` are flat int64 arrays of equal length; pixels
    whose ground truth equals ``ignore_index`` contribute nothing.
    Returns the flat position of the first illegal label, or -1. The
    caller raises; this keeps both backends to one calling convention.
    """
    k = counts.shape[0]
    valid = gt != ignore_index
    legal_gt = valid & (gt >= 0) & (gt < k)
    legal_pred = (pred >= 0) & (pred < k)
    bad = (valid & ~legal_gt) | ~legal_pred
    if bad.any():
        return int(np.argmax(bad))
    g = gt[valid]
    p = pred[valid]
    counts += np.bincount(g * k + p, minlength=k * k).reshape(k, k)
    return -1
