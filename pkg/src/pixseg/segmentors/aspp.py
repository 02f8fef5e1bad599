"""Atrous spatial pyramid pooling heads (parallel form)."""

import torch
import torch.nn as nn

from ..errors import ConfigError
from ..registry import SEGMENTORS
from .base import DecodeHead, EncoderDecoder
from .common import ConvModule, resize

# conventional rates: {12, 24, 36} at output stride 8, {6, 12, 18} at 16
DEFAULT_RATES = {8: (12, 24, 36), 16: (6, 12, 18)}


class ASPP(nn.Module):
    """Parallel 1x1 + atrous 3x3 branches, optional image-level pooling.

    Branches concatenate to (1 + len(rates) + with_global) * mid channels
    and fuse through a 1x1 conv back to ``mid_channels``.
    """

    def __init__(self, in_channels, mid_channels, rates=(12, 24, 36), with_global=True):
        super().__init__()
        if not rates or any(int(r) < 1 for r in rates):
            raise ConfigError(f"aspp: rates must be positive integers, got {rates}")
        self.rates = tuple(int(r) for r in rates)
        self.with_global = with_global
        branches = [ConvModule(in_channels, mid_channels, 1)]
        branches += [
            ConvModule(in_channels, mid_channels, 3, padding=r, dilation=r)
            for r in self.rates
        ]
        self.branches = nn.ModuleList(branches)
        if with_global:
            self.global_branch = nn.Sequential(
                nn.AdaptiveAvgPool2d(1),
                ConvModule(in_channels, mid_channels, 1),
            )
        n_branches = len(branches) + int(with_global)
        self.fuse = ConvModule(n_branches * mid_channels, mid_channels, 1)

    def forward(self, x):
        size = x.shape[-2:]
        outs = [branch(x) for branch in self.branches]
        if self.with_global:
            outs.append(resize(self.global_branch(x), size))
        return self.fuse(torch.cat(outs, dim=1))


class ASPPHead(DecodeHead):
    def __init__(self, in_channels, num_classes, mid_channels=512,
                 rates=(12, 24, 36), with_global=True, dropout=0.1, in_index=-1):
        super().__init__(mid_channels, num_classes, dropout=dropout, in_index=in_index)
        self.aspp = ASPP(in_channels, mid_channels, rates, with_global)

    def forward(self, pyramid):
        x = pyramid[self.in_index].map
        return self.cls_seg(self.aspp(x))


class DepthFusedASPPHead(DecodeHead):
    """ASPP on the deep level refined with projected stride-4 features.

    The low-level map is reduced by a 1x1 conv (``low_channels``, default
    48), concatenated with the upsampled ASPP output, and fused by two
    3x3 convs; the head output sits at the low level's resolution.
    """

    def __init__(self, in_channels, low_in_channels, num_classes, mid_channels=512,
                 rates=(12, 24, 36), with_global=True, low_channels=48,
                 dropout=0.1, in_index=-1, low_index=0):
        super().__init__(mid_channels, num_classes, dropout=dropout, in_index=in_index)
        self.low_index = low_index
        self.aspp = ASPP(in_channels, mid_channels, rates, with_global)
        self.low_proj = ConvModule(low_in_channels, low_channels, 1)
        self.fuse = nn.Sequential(
            ConvModule(mid_channels + low_channels, mid_channels, 3, padding=1),
            ConvModule(mid_channels, mid_channels, 3, padding=1),
        )

    @property
    def required_indices(self):
        return [self.low_index, self.in_index]

    def forward(self, pyramid):
        low = self.low_proj(pyramid[self.low_index].map)
        deep = self.aspp(pyramid[self.in_index].map)
        deep = resize(deep, low.shape[-2:])
        return self.cls_seg(self.fuse(torch.cat([deep, low], dim=1)))


@SEGMENTORS.register("deeplabv3")
class DeepLabV3(EncoderDecoder):
    """Segmentor with parallel atrous convolution context."""

    def _build_head(self, out_channels, num_classes, params):
        in_index = params.pop("in_index", -1)
        self._check_index(in_index, "decode head")
        params.setdefault("rates", DEFAULT_RATES.get(self.backbone.output_stride, (12, 24, 36))
                          if hasattr(self.backbone, "output_stride") else (12, 24, 36))
        return ASPPHead(
            in_channels=out_channels[in_index],
            num_classes=num_classes,
            in_index=in_index,
            **params,
        )


@SEGMENTORS.register("deeplabv3plus")
class DeepLabV3Plus(EncoderDecoder):
    """DeepLabV3 extended with a low-level-feature decoder."""

    def _build_head(self, out_channels, num_classes, params):
        in_index = params.pop("in_index", -1)
        low_index = params.pop("low_index", 0)
        self._check_index(in_index, "decode head")
        self._check_index(low_index, "decode head (low level)")
        params.setdefault("rates", DEFAULT_RATES.get(self.backbone.output_stride, (12, 24, 36))
                          if hasattr(self.backbone, "output_stride") else (12, 24, 36))
        return DepthFusedASPPHead(
            in_channels=out_channels[in_index],
            low_in_channels=out_channels[low_index],
            num_classes=num_classes,
            in_index=in_index,
            low_index=low_index,
            **params,
        )
