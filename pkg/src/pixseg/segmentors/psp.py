"""Pyramid pooling decode head."""

import torch
import torch.nn as nn

from ..errors import ConfigError
from ..registry import SEGMENTORS
from .base import DecodeHead, EncoderDecoder
from .common import ConvModule, resize


class PyramidPooling(nn.Module):
    """Multi-bin adaptive average pooling fused with the input feature.

    Each bin pools to b x b, projects with a 1x1 conv, and upsamples back;
    the branches concatenate with the input (in + len(bins) * mid channels)
    and fuse through a 3x3 conv down to ``mid_channels``.
    """

    def __init__(self, in_channels, mid_channels, bins=(1, 2, 3, 6)):
        super().__init__()
        if not bins or any(int(b) < 1 for b in bins):
            raise ConfigError(f"ppm: bins must be positive integers, got {bins}")
        self.bins = tuple(int(b) for b in bins)
        self.branches = nn.ModuleList(
            nn.Sequential(
                nn.AdaptiveAvgPool2d(b),
                ConvModule(in_channels, mid_channels, 1),
            )
            for b in self.bins
        )
        self.fuse = ConvModule(
            in_channels + len(self.bins) * mid_channels, mid_channels, 3, padding=1
        )

    def forward(self, x):
        size = x.shape[-2:]
        outs = [x]
        outs += [resize(branch(x), size) for branch in self.branches]
        return self.fuse(torch.cat(outs, dim=1))


class PSPHead(DecodeHead):
    def __init__(self, in_channels, num_classes, mid_channels=512,
                 bins=(1, 2, 3, 6), dropout=0.1, in_index=-1):
        super().__init__(mid_channels, num_classes, dropout=dropout, in_index=in_index)
        self.ppm = PyramidPooling(in_channels, mid_channels, bins)

    def forward(self, pyramid):
        x = pyramid[self.in_index].map
        return self.cls_seg(self.ppm(x))


@SEGMENTORS.register("pspnet")
class PSPNet(EncoderDecoder):
    """Segmentor with a pyramid pooling head for multi-scale context."""

    def _build_head(self, out_channels, num_classes, params):
        in_index = params.pop("in_index", -1)
        self._check_index(in_index, "decode head")
        return PSPHead(
            in_channels=out_channels[in_index],
            num_classes=num_classes,
            in_index=in_index,
            **params,
        )
