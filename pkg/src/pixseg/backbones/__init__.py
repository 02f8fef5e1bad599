from .features import FeatureLevel, FeaturePyramid
from .pretrained import load_pretrained
from .resnet import BasicBlock, Bottleneck, InvalidSpecError, ResNet
from .unet import UNet

__all__ = [
    "BasicBlock",
    "Bottleneck",
    "FeatureLevel",
    "FeaturePyramid",
    "InvalidSpecError",
    "ResNet",
    "UNet",
    "load_pretrained",
]
