"""UNet encoder-decoder backbone.

The symmetric decoder means this backbone can emit full-resolution
features: pyramid levels are ordered by ascending stride, so index 0 is
the stride-1 decoder output with ``base_channels`` channels and the
last level is the bottleneck at stride ``2**(num_stages - 1)``.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ShapeError
from ..registry import BACKBONES
from .features import FeatureLevel, FeaturePyramid
from .resnet import InvalidSpecError, _scaled


def _double_conv(in_channels, out_channels):
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, 3, padding=1, bias=False),
        nn.BatchNorm2d(out_channels),
        nn.ReLU(inplace=True),
        nn.Conv2d(out_channels, out_channels, 3, padding=1, bias=False),
        nn.BatchNorm2d(out_channels),
        nn.ReLU(inplace=True),
    )


@BACKBONES.register("unet")
class UNet(nn.Module):
    """Classic UNet; stage i of the decoder has base * 2**i channels.

    Args:
        base_channels: width of the stride-1 stage before scaling.
        num_stages: encoder depth; the bottleneck sits at stride
            2**(num_stages - 1).
        out_indices: indices into the ascending-stride level list.
    """

    def __init__(self, in_channels=3, base_channels=64, num_stages=5,
                 width_multiplier=1.0, out_indices=(0,), init_from=None):
        super().__init__()
        if num_stages < 2:
            raise InvalidSpecError(f"num_stages must be >= 2, got {num_stages}")
        if width_multiplier <= 0:
            raise InvalidSpecError(f"width_multiplier must be > 0, got {width_multiplier}")
        out_indices = tuple(out_indices)
        if not out_indices or any(not 0 <= i < num_stages for i in out_indices):
            raise InvalidSpecError(
                f"out_indices must be a nonempty subset of 0..{num_stages - 1}, got {out_indices}"
            )
        if list(out_indices) != sorted(out_indices):
            raise InvalidSpecError(f"out_indices must be ascending, got {out_indices}")

        widths = [_scaled(base_channels * 2**i, width_multiplier) for i in range(num_stages)]
        self.num_stages = num_stages
        self.out_indices = out_indices
        self.size_divisor = 2 ** (num_stages - 1)

        self.encoders = nn.ModuleList()
        ch = in_channels
        for width in widths:
            self.encoders.append(_double_conv(ch, width))
            ch = width
        self.pool = nn.MaxPool2d(2)

        # decoder stage i refines stride 2**i from stride 2**(i+1)
        self.up_convs = nn.ModuleList()
        self.decoders = nn.ModuleList()
        for i in range(num_stages - 1):
            self.up_convs.append(nn.Conv2d(widths[i + 1], widths[i], 1))
            self.decoders.append(_double_conv(2 * widths[i], widths[i]))

        self._widths = widths
        self._init_weights()
        if init_from is not None:
            from .pretrained import load_pretrained

            load_pretrained(self, init_from)

    def _init_weights(self):
        for m in self.modules():
            if isinstance(m, nn.Conv2d):
                nn.init.kaiming_normal_(m.weight, mode="fan_out", nonlinearity="relu")
                if m.bias is not None:
                    nn.init.zeros_(m.bias)
            elif isinstance(m, nn.BatchNorm2d):
                nn.init.ones_(m.weight)
                nn.init.zeros_(m.bias)

    @property
    def out_channels(self) -> list[int]:
        return [self._widths[i] for i in self.out_indices]

    @property
    def out_strides(self) -> list[int]:
        return [2**i for i in self.out_indices]

    def forward(self, x) -> FeaturePyramid:
        h, w = x.shape[-2:]
        if h % self.size_divisor or w % self.size_divisor:
            raise ShapeError(f"input {h}x{w} must be divisible by {self.size_divisor}")

        skips = []
        for i, enc in enumerate(self.encoders):
            if i > 0:
                x = self.pool(x)
            x = enc(x)
            skips.append(x)

        # decode bottom-up; features[i] = best map at stride 2**i
        features = [None] * self.num_stages
        features[-1] = skips[-1]
        x = skips[-1]
        for i in range(self.num_stages - 2, -1, -1):
            up = F.interpolate(x, size=skips[i].shape[-2:], mode="bilinear",
                               align_corners=False)
            up = self.up_convs[i](up)
            x = self.decoders[i](torch.cat([skips[i], up], dim=1))
            features[i] = x

        return FeaturePyramid(
            [FeatureLevel(2**i, features[i]) for i in self.out_indices]
        )
