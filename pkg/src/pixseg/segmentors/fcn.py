"""Plain convolutional decode head."""

import torch.nn as nn

from ..errors import ConfigError
from ..registry import SEGMENTORS
from .base import DecodeHead, EncoderDecoder
from .common import ConvModule


class FCNHead(DecodeHead):
    """num_convs 3x3 conv+norm+relu blocks, dropout, 1x1 classifier."""

    def __init__(self, in_channels, num_classes, mid_channels=None, num_convs=2,
                 kernel_size=3, dropout=0.1, in_index=-1):
        if num_convs < 1:
            raise ConfigError(f"fcn head: num_convs must be >= 1, got {num_convs}")
        mid = mid_channels or in_channels
        super().__init__(mid, num_classes, dropout=dropout, in_index=in_index)
        convs = [ConvModule(in_channels, mid, kernel_size, padding=kernel_size // 2)]
        for _ in range(num_convs - 1):
            convs.append(ConvModule(mid, mid, kernel_size, padding=kernel_size // 2))
        self.convs = nn.Sequential(*convs)

    def forward(self, pyramid):
        x = pyramid[self.in_index].map
        return self.cls_seg(self.convs(x))


@SEGMENTORS.register("fcn")
class FCN(EncoderDecoder):
    """Conventional encoder-decoder segmentor with a plain conv head."""

    def _build_head(self, out_channels, num_classes, params):
        in_index = params.pop("in_index", -1)
        self._check_index(in_index, "decode head")
        return FCNHead(
            in_channels=out_channels[in_index],
            num_classes=num_classes,
            in_index=in_index,
            **params,
        )
