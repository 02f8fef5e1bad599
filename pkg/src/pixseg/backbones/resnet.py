"""ResNet encoder with controllable output stride.

For output_stride 8 the last two stages trade their spatial stride for
dilation (rates 2 and 4); for output_stride 16 only the last stage does
(rate 2). Changing output_stride never changes parameter shapes, so one
checkpoint loads into any stride variant.
"""

import torch.nn as nn

from ..errors import ShapeError
from ..registry import BACKBONES
from .features import FeatureLevel, FeaturePyramid


class InvalidSpecError(ValueError):
    """Backbone configuration outside the supported domain."""


def _scaled(channels: int, multiplier: float) -> int:
    return max(1, round(channels * multiplier))


class BasicBlock(nn.Module):
    expansion = 1

    def __init__(self, in_channels, planes, stride=1, dilation=1, downsample=None):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, planes, 3, stride=stride,
                               padding=dilation, dilation=dilation, bias=False)
        self.bn1 = nn.BatchNorm2d(planes)
        self.conv2 = nn.Conv2d(planes, planes, 3, padding=dilation,
                               dilation=dilation, bias=False)
        self.bn2 = nn.BatchNorm2d(planes)
        self.relu = nn.ReLU(inplace=True)
        self.downsample = downsample

    def forward(self, x):
        identity = x
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        if self.downsample is not None:
            identity = self.downsample(x)
        return self.relu(out + identity)


class Bottleneck(nn.Module):
    expansion = 4

    def __init__(self, in_channels, planes, stride=1, dilation=1, downsample=None):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, planes, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(planes)
        self.conv2 = nn.Conv2d(planes, planes, 3, stride=stride,
                               padding=dilation, dilation=dilation, bias=False)
        self.bn2 = nn.BatchNorm2d(planes)
        self.conv3 = nn.Conv2d(planes, planes * self.expansion, 1, bias=False)
        self.bn3 = nn.BatchNorm2d(planes * self.expansion)
        self.relu = nn.ReLU(inplace=True)
        self.downsample = downsample

    def forward(self, x):
        identity = x
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.relu(self.bn2(self.conv2(out)))
        out = self.bn3(self.conv3(out))
        if self.downsample is not None:
            identity = self.downsample(x)
        return self.relu(out + identity)


_ARCH = {
    18: (BasicBlock, (2, 2, 2, 2)),
    50: (Bottleneck, (3, 4, 6, 3)),
}

# per-stage (stride, dilation) for each supported output stride
_STRIDE_PLANS = {
    32: ((1, 1), (2, 1), (2, 1), (2, 1)),
    16: ((1, 1), (2, 1), (2, 1), (1, 2)),
    8: ((1, 1), (2, 1), (1, 2), (1, 4)),
}


@BACKBONES.register("resnet")
class ResNet(nn.Module):
    """Dilated ResNet returning a stride-tagged feature pyramid.

    Args:
        depth: 18 (basic blocks) or 50 (bottlenecks).
        output_stride: 8, 16, or 32; smaller strides substitute dilation
            for downsampling in the later stages.
        out_indices: which of the four stages to emit.
        width_multiplier: channel scale for desk-size variants.
        stage_blocks: optional per-stage block counts overriding the
            depth preset (tiny presets use [1, 1, 1, 1]).
        zero_init_residual: zero the last norm gain in each block.
        init_from: optional path to a name->array archive of pretrained
            weights (checkpoint container format).
    """

    size_divisor = 32

    def __init__(self, depth=50, in_channels=3, output_stride=32,
                 out_indices=(0, 1, 2, 3), width_multiplier=1.0,
                 stage_blocks=None, zero_init_residual=False, init_from=None):
        super().__init__()
        if depth not in _ARCH:
            raise InvalidSpecError(f"resnet depth must be one of {sorted(_ARCH)}, got {depth}")
        if output_stride not in _STRIDE_PLANS:
            raise InvalidSpecError(
                f"output_stride must be one of {sorted(_STRIDE_PLANS)}, got {output_stride}"
            )
        if width_multiplier <= 0:
            raise InvalidSpecError(f"width_multiplier must be > 0, got {width_multiplier}")
        block, default_blocks = _ARCH[depth]
        blocks = tuple(stage_blocks) if stage_blocks is not None else default_blocks
        if len(blocks) != 4 or any(b < 1 for b in blocks):
            raise InvalidSpecError(f"stage_blocks must be 4 positive counts, got {blocks}")
        out_indices = tuple(out_indices)
        if not out_indices or any(i not in (0, 1, 2, 3) for i in out_indices):
            raise InvalidSpecError(f"out_indices must be a nonempty subset of 0..3, got {out_indices}")
        if list(out_indices) != sorted(out_indices):
            raise InvalidSpecError(f"out_indices must be ascending, got {out_indices}")

        self.depth = depth
        self.output_stride = output_stride
        self.out_indices = out_indices

        stem_channels = _scaled(64, width_multiplier)
        self.stem = nn.Sequential(
            nn.Conv2d(in_channels, stem_channels, 7, stride=2, padding=3, bias=False),
            nn.BatchNorm2d(stem_channels),
            nn.ReLU(inplace=True),
        )
        self.maxpool = nn.MaxPool2d(3, stride=2, padding=1)

        plan = _STRIDE_PLANS[output_stride]
        planes = [_scaled(c, width_multiplier) for c in (64, 128, 256, 512)]
        self.stages = nn.ModuleList()
        self.out_strides = []
        self._out_channels = []
        in_ch = stem_channels
        stride_so_far = 4  # stem conv (2) + maxpool (2)
        for i, (n_blocks, (stride, dilation)) in enumerate(zip(blocks, plan)):
            stage, in_ch = self._make_stage(block, in_ch, planes[i], n_blocks, stride, dilation)
            self.stages.append(stage)
            stride_so_far *= stride
            if i in out_indices:
                self.out_strides.append(stride_so_far)
                self._out_channels.append(in_ch)

        self._init_weights(zero_init_residual)
        if init_from is not None:
            from .pretrained import load_pretrained

            load_pretrained(self, init_from)

    @staticmethod
    def _make_stage(block, in_channels, planes, n_blocks, stride, dilation):
        downsample = None
        out_channels = planes * block.expansion
        if stride != 1 or in_channels != out_channels:
            downsample = nn.Sequential(
                nn.Conv2d(in_channels, out_channels, 1, stride=stride, bias=False),
                nn.BatchNorm2d(out_channels),
            )
        layers = [block(in_channels, planes, stride=stride, dilation=dilation,
                        downsample=downsample)]
        for _ in range(1, n_blocks):
            layers.append(block(out_channels, planes, dilation=dilation))
        return nn.Sequential(*layers), out_channels

    def _init_weights(self, zero_init_residual):
        for m in self.modules():
            if isinstance(m, nn.Conv2d):
                nn.init.kaiming_normal_(m.weight, mode="fan_out", nonlinearity="relu")
            elif isinstance(m, nn.BatchNorm2d):
                nn.init.ones_(m.weight)
                nn.init.zeros_(m.bias)
        if zero_init_residual:
            for m in self.modules():
                if isinstance(m, Bottleneck):
                    nn.init.zeros_(m.bn3.weight)
                elif isinstance(m, BasicBlock):
                    nn.init.zeros_(m.bn2.weight)

    @property
    def out_channels(self) -> list[int]:
        return list(self._out_channels)

    def forward(self, x) -> FeaturePyramid:
        h, w = x.shape[-2:]
        if h % self.size_divisor or w % self.size_divisor:
            raise ShapeError(
                f"input {h}x{w} must be divisible by {self.size_divisor}"
            )
        x = self.maxpool(self.stem(x))
        levels = []
        for i, stage in enumerate(self.stages):
            x = stage(x)
            if i in self.out_indices:
                levels.append(x)
        return FeaturePyramid(
            [FeatureLevel(s, m) for s, m in zip(self.out_strides, levels)]
        )
