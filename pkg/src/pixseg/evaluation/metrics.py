"""Metric computation from an accumulated confusion matrix.

All metrics derive from the single global matrix (not a mean of
per-image scores). A class absent from both ground truth and prediction
has undefined IoU/accuracy and is excluded from the means rather than
counted as 0 or 1.
"""

from dataclasses import dataclass, field

import numpy as np
import yaml


class EmptyMatrixError(ValueError):
    """No evaluated pixels: metrics are undefined."""


@dataclass
class MetricsReport:
    per_class_iou: list          # float or None per class
    per_class_acc: list          # float or None per class
    miou: float
    aacc: float
    macc: float
    total_pixels: int
    per_class_pixels: list       # ground-truth pixels per class
    inference_mode: str | None = None
    class_names: list = field(default_factory=list)

    def to_tree(self) -> dict:
        names = self.class_names or [f"class_{i}" for i in range(len(self.per_class_iou))]
        rows = []
        for i, name in enumerate(names):
            rows.append(
                {
                    "class": name,
                    "iou": self.per_class_iou[i],
                    "acc": self.per_class_acc[i],
                    "gt_pixels": int(self.per_class_pixels[i]),
                }
            )
        return {
            "miou": self.miou,
            "aacc": self.aacc,
            "macc": self.macc,
            "total_pixels": self.total_pixels,
            "inference_mode": self.inference_mode,
            "per_class": rows,
        }

    def dump_yaml(self) -> str:
        return yaml.safe_dump(self.to_tree(), sort_keys=False)

    def render(self) -> str:
        names = self.class_names or [f"class_{i}" for i in range(len(self.per_class_iou))]
        width = max(len(n) for n in names + ["class"])
        lines = [f"{'class':<{width}}  {'iou':>8}  {'acc':>8}  {'gt_pixels':>10}"]
        for i, name in enumerate(names):
            iou = "n/a" if self.per_class_iou[i] is None else f"{self.per_class_iou[i]:.4f}"
            acc = "n/a" if self.per_class_acc[i] is None else f"{self.per_class_acc[i]:.4f}"
            lines.append(f"{name:<{width}}  {iou:>8}  {acc:>8}  {self.per_class_pixels[i]:>10}")
        lines.append(
            f"mIoU {self.miou:.4f} | aAcc {self.aacc:.4f} | mAcc {self.macc:.4f} "
            f"| pixels {self.total_pixels}"
            + (f" | mode {self.inference_mode}" if self.inference_mode else "")
        )
        return "\n".join(lines)


def compute_metrics(cm, inference_mode=None, class_names=None) -> MetricsReport:
    """IoU_k = tp / (gt_k + pred_k - tp); mIoU averages defined classes."""
    counts = np.asarray(getattr(cm, "counts", cm), dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        raise EmptyMatrixError("confusion matrix is empty; nothing was evaluated")
    tp = np.diag(counts).astype(np.float64)
    gt_per_class = counts.sum(axis=1).astype(np.float64)
    pred_per_class = counts.sum(axis=0).astype(np.float64)
    union = gt_per_class + pred_per_class - tp

    iou = [None if union[i] == 0 else float(tp[i] / union[i]) for i in range(len(tp))]
    acc = [
        None if gt_per_class[i] == 0 else float(tp[i] / gt_per_class[i])
        for i in range(len(tp))
    ]
    defined_iou = [v for v in iou if v is not None]
    defined_acc = [v for v in acc if v is not None]
    ignore_index = getattr(cm, "ignore_index", None)
    return MetricsReport(
        per_class_iou=iou,
        per_class_acc=acc,
        miou=float(np.mean(defined_iou)) if defined_iou else float("nan"),
        aacc=float(tp.sum() / total),
        macc=float(np.mean(defined_acc)) if defined_acc else float("nan"),
        total_pixels=total,
        per_class_pixels=[int(v) for v in gt_per_class],
        inference_mode=inference_mode,
        class_names=list(class_names) if class_names else [],
    )
