"""Unified perceptual parsing head: FPN fusion over the whole pyramid."""

import torch
import torch.nn as nn

from ..errors import ConfigError
from ..registry import SEGMENTORS
from .base import DecodeHead, EncoderDecoder
from .common import ConvModule, resize
from .psp import PyramidPooling


class UPerHead(DecodeHead):
    """Pyramid pooling on the deepest level, then top-down FPN fusion.

    Lateral 1x1 convs bring every level to a common width; features are
    merged top-down by upsample-and-add, smoothed per level with a 3x3
    conv, upsampled to the shallowest level's size, concatenated, and
    fused by a final 3x3 conv.
    """

    def __init__(self, in_channels, num_classes, mid_channels=512,
                 bins=(1, 2, 3, 6), dropout=0.1):
        if len(in_channels) < 2:
            raise ConfigError(
                f"upernet head needs >= 2 pyramid levels, got {len(in_channels)}"
            )
        super().__init__(mid_channels, num_classes, dropout=dropout, in_index=-1)
        self.n_levels = len(in_channels)
        self.ppm = PyramidPooling(in_channels[-1], mid_channels, bins)
        self.laterals = nn.ModuleList(
            ConvModule(c, mid_channels, 1) for c in in_channels[:-1]
        )
        self.smooth = nn.ModuleList(
            ConvModule(mid_channels, mid_channels, 3, padding=1)
            for _ in in_channels[:-1]
        )
        self.fuse = ConvModule(self.n_levels * mid_channels, mid_channels, 3, padding=1)

    @property
    def required_indices(self):
        return list(range(self.n_levels))

    def forward(self, pyramid):
        feats = [lateral(pyramid[i].map) for i, lateral in enumerate(self.laterals)]
        feats.append(self.ppm(pyramid[-1].map))
        for i in range(len(feats) - 2, -1, -1):
            feats[i] = feats[i] + resize(feats[i + 1], feats[i].shape[-2:])
        outs = [smooth(feats[i]) for i, smooth in enumerate(self.smooth)]
        outs.append(feats[-1])
        size = outs[0].shape[-2:]
        outs = [resize(o, size) for o in outs]
        return self.cls_seg(self.fuse(torch.cat(outs, dim=1)))


@SEGMENTORS.register("upernet")
class UPerNet(EncoderDecoder):
    """Segmentor fusing heterogeneous pyramid levels FPN-style."""

    def _build_head(self, out_channels, num_classes, params):
        return UPerHead(in_channels=out_channels, num_classes=num_classes, **params)
