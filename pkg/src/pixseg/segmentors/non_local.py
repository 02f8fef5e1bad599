"""Non-local block (embedded Gaussian) and its decode head."""

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..registry import SEGMENTORS
from .base import DecodeHead, EncoderDecoder
from .common import ConvModule


class NonLocalBlock(nn.Module):
    """y = x + W_z . softmax((theta x)(phi x)^T / sqrt(d)) . (g x).

    Softmax runs over the key axis per query position; d is the inner
    channel count (channels // 2, at least 1). The output projection
    W_z starts at zero so the block is an exact identity at init.
    """

    def __init__(self, channels, inner_channels=None):
        super().__init__()
        inner = inner_channels or max(1, channels // 2)
        self.inner_channels = inner
        self.theta = nn.Conv2d(channels, inner, 1)
        self.phi = nn.Conv2d(channels, inner, 1)
        self.g = nn.Conv2d(channels, inner, 1)
        self.out_proj = nn.Conv2d(inner, channels, 1)
        nn.init.zeros_(self.out_proj.weight)
        nn.init.zeros_(self.out_proj.bias)

    def forward(self, x):
        b, c, h, w = x.shape
        n = h * w
        q = self.theta(x).flatten(2).transpose(1, 2)           # b, n, inner
        k = self.phi(x).flatten(2)                             # b, inner, n
        v = self.g(x).flatten(2).transpose(1, 2)               # b, n, inner
        energy = torch.bmm(q, k) / math.sqrt(self.inner_channels)
        attn = F.softmax(energy, dim=-1)                       # keys on the last axis
        y = torch.bmm(attn, v).transpose(1, 2).reshape(b, self.inner_channels, h, w)
        return x + self.out_proj(y)


class NonLocalHead(DecodeHead):
    def __init__(self, in_channels, num_classes, mid_channels=512,
                 inner_channels=None, dropout=0.1, in_index=-1):
        super().__init__(mid_channels, num_classes, dropout=dropout, in_index=in_index)
        self.conv_in = ConvModule(in_channels, mid_channels, 3, padding=1)
        self.block = NonLocalBlock(mid_channels, inner_channels)
        self.conv_out = ConvModule(mid_channels, mid_channels, 3, padding=1)

    def forward(self, pyramid):
        x = self.conv_in(pyramid[self.in_index].map)
        x = self.block(x)
        return self.cls_seg(self.conv_out(x))


@SEGMENTORS.register("nonlocal")
class NonLocalNet(EncoderDecoder):
    """Segmentor with a non-local block for long-range dependencies."""

    def _build_head(self, out_channels, num_classes, params):
        in_index = params.pop("in_index", -1)
        self._check_index(in_index, "decode head")
        return NonLocalHead(
            in_channels=out_channels[in_index],
            num_classes=num_classes,
            in_index=in_index,
            **params,
        )
