"""Criss-cross attention: each position attends to its row and column."""

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ConfigError
from ..registry import SEGMENTORS
from .base import DecodeHead, EncoderDecoder
from .common import ConvModule


class CrissCrossAttention(nn.Module):
    """One criss-cross unit with a residual, zero-initialized gate.

    For query (i, j) the key set is its column plus its row (h + w - 1
    positions; the duplicate self is masked out of the column path so it
    counts once). The aggregated value map is scaled by a learnable
    scalar gamma starting at 0, making the unit an identity at init.
    Two chained applications reach the full image.
    """

    def __init__(self, channels, reduction=8):
        super().__init__()
        inner = max(1, channels // reduction)
        self.query = nn.Conv2d(channels, inner, 1)
        self.key = nn.Conv2d(channels, inner, 1)
        self.value = nn.Conv2d(channels, channels, 1)
        self.gamma = nn.Parameter(torch.zeros(1))

    def forward(self, x):
        b, c, h, w = x.shape
        q = self.query(x)
        k = self.key(x)
        v = self.value(x)

        # energies along the column (keys indexed by p) and row (by r)
        e_col = torch.einsum("bcij,bcpj->bijp", q, k)
        e_row = torch.einsum("bcij,bcir->bijr", q, k)
        # mask the column-path self so the self position counts once
        self_mask = torch.diag(e_col.new_full((h,), float("-inf")))
        e_col = e_col + self_mask.view(1, h, 1, h)

        attn = F.softmax(torch.cat([e_col, e_row], dim=-1), dim=-1)
        a_col, a_row = attn[..., :h], attn[..., h:]
        out = torch.einsum("bijp,bcpj->bcij", a_col, v)
        out = out + torch.einsum("bijr,bcir->bcij", a_row, v)
        return x + self.gamma * out


class CCHead(DecodeHead):
    def __init__(self, in_channels, num_classes, mid_channels=512,
                 recurrence=2, reduction=8, dropout=0.1, in_index=-1):
        if recurrence < 1:
            raise ConfigError(f"ccnet head: recurrence must be >= 1, got {recurrence}")
        super().__init__(mid_channels, num_classes, dropout=dropout, in_index=in_index)
        self.recurrence = recurrence
        self.conv_in = ConvModule(in_channels, mid_channels, 3, padding=1)
        self.attention = CrissCrossAttention(mid_channels, reduction)
        self.conv_out = ConvModule(mid_channels, mid_channels, 3, padding=1)

    def forward(self, pyramid):
        x = self.conv_in(pyramid[self.in_index].map)
        for _ in range(self.recurrence):
            x = self.attention(x)
        return self.cls_seg(self.conv_out(x))


@SEGMENTORS.register("ccnet")
class CCNet(EncoderDecoder):
    """Segmentor gathering full-image context via recurrent criss-cross attention."""

    def _build_head(self, out_channels, num_classes, params):
        in_index = params.pop("in_index", -1)
        self._check_index(in_index, "decode head")
        return CCHead(
            in_channels=out_channels[in_index],
            num_classes=num_classes,
            in_index=in_index,
            **params,
        )
