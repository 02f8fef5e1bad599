"""Feature pyramid container shared by backbones and decode heads."""

from dataclasses import dataclass

import torch

from ..errors import ShapeError


@dataclass
class FeatureLevel:
    """One backbone output: its effective stride and the feature map."""

    stride: int
    map: torch.Tensor

    @property
    def channels(self) -> int:
        return self.map.shape[1]


class FeaturePyramid:
    """Ordered backbone outputs, shallowest first.

    Levels carry their effective spatial stride relative to the network
    input (ceil arithmetic): under dilation several stages can share one
    stride, so strides are non-decreasing rather than strictly
    increasing.
    """

    def __init__(self, levels):
        levels = list(levels)
        if not levels:
            raise ShapeError("feature pyramid needs at least one level")
        strides = [lv.stride for lv in levels]
        if any(b < a for a, b in zip(strides, strides[1:])):
            raise ShapeError(f"pyramid strides must be non-decreasing, got {strides}")
        self.levels = levels

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, index: int) -> FeatureLevel:
        return self.levels[index]

    def __iter__(self):
        return iter(self.levels)

    @property
    def strides(self) -> list[int]:
        return [lv.stride for lv in self.levels]

    @property
    def channels(self) -> list[int]:
        return [lv.channels for lv in self.levels]

    @property
    def maps(self) -> list[torch.Tensor]:
        return [lv.map for lv in self.levels]
