"""Encoder-decoder segmentor base.

A segmentor runs backbone -> decode head -> classifier and upsamples
all logits bilinearly to the input resolution. The optional auxiliary
head is a one-conv FCN head on an intermediate pyramid level (stage 3
by default) whose loss regularizes training; for OCR-style heads its
logits double as the soft region masks.
"""

from dataclasses import dataclass, field

import torch
import torch.nn as nn

from ..errors import ConfigError
from ..registry import BACKBONES
from .common import resize


@dataclass
class SegmentorOutput:
    """Main logits at input resolution plus optional auxiliary logits."""

    main_logits: torch.Tensor
    aux_logits: list = field(default_factory=list)
    internals: dict | None = None


class DecodeHead(nn.Module):
    """Base class: dropout + 1x1 classifier over the head's feature map."""

    def __init__(self, channels, num_classes, dropout=0.1, in_index=-1):
        super().__init__()
        if num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {num_classes}")
        if not 0.0 <= dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {dropout}")
        self.num_classes = num_classes
        self.in_index = in_index
        self.dropout = nn.Dropout2d(dropout) if dropout > 0 else None
        self.conv_seg = nn.Conv2d(channels, num_classes, 1)
        nn.init.normal_(self.conv_seg.weight, std=0.01)
        nn.init.zeros_(self.conv_seg.bias)

    @property
    def required_indices(self):
        return [self.in_index]

    def cls_seg(self, feat):
        if self.dropout is not None:
            feat = self.dropout(feat)
        return self.conv_seg(feat)


class EncoderDecoder(nn.Module):
    """Backbone + decode head + optional auxiliary head.

    Subclasses pick the decode head via ``_build_head``. ``backbone``,
    ``head`` and ``aux_head`` are config subtrees; ``aux_head: null``
    disables the auxiliary branch.
    """

    def __init__(self, backbone, num_classes, head=None, aux_head=None):
        super().__init__()
        if not isinstance(backbone, dict):
            raise ConfigError("segmentor: 'backbone' must be a config mapping")
        self.num_classes = num_classes
        self.backbone = BACKBONES.build(backbone)
        out_channels = self.backbone.out_channels

        head = dict(head) if head else {}
        self.head = self._build_head(out_channels, num_classes, head)
        for index in self.head.required_indices:
            self._check_index(index, "decode head")

        self.aux_head = None
        if aux_head is not None:
            self.aux_head = self._build_aux_head(out_channels, num_classes, dict(aux_head))
            self._check_index(self.aux_head.in_index, "auxiliary head")
        if getattr(self.head, "needs_region_logits", False) and self.aux_head is None:
            raise ConfigError(
                f"{type(self).__name__}: this head consumes the auxiliary logits as "
                "soft regions; aux_head cannot be null"
            )

    def _build_head(self, out_channels, num_classes, params) -> DecodeHead:
        raise NotImplementedError

    def _build_aux_head(self, out_channels, num_classes, params):
        from .fcn import FCNHead

        in_index = params.pop("in_index", 2)
        self._check_index(in_index, "auxiliary head")
        mid = params.pop("mid_channels", None) or out_channels[in_index]
        return FCNHead(
            in_channels=out_channels[in_index],
            num_classes=num_classes,
            mid_channels=mid,
            num_convs=params.pop("num_convs", 1),
            dropout=params.pop("dropout", 0.1),
            in_index=in_index,
            **params,
        )

    def _check_index(self, index, who: str) -> None:
        n = len(self.backbone.out_channels)
        if not -n <= index < n:
            raise ConfigError(
                f"{who} wants pyramid level {index} but the backbone emits only "
                f"{n} levels (strides {self.backbone.out_strides})"
            )

    def forward(self, images, return_internals=False) -> SegmentorOutput:
        size = images.shape[-2:]
        pyramid = self.backbone(images)

        aux_logits = self.aux_head(pyramid) if self.aux_head is not None else None
        if getattr(self.head, "needs_region_logits", False):
            main_logits = self.head(pyramid, aux_logits)
        else:
            main_logits = self.head(pyramid)

        internals = None
        if return_internals:
            internals = {
                "pyramid_strides": pyramid.strides,
                "head_logits": main_logits,
            }
            if aux_logits is not None:
                internals["aux_head_logits"] = aux_logits

        main_up = resize(main_logits, size)
        aux_up = [resize(aux_logits, size)] if aux_logits is not None else []
        return SegmentorOutput(main_up, aux_up, internals)
