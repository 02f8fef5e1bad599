from .aspp import ASPP, ASPPHead, DeepLabV3, DeepLabV3Plus, DepthFusedASPPHead
from .base import DecodeHead, EncoderDecoder, SegmentorOutput
from .ccnet import CCHead, CCNet, CrissCrossAttention
from .common import ConvModule, resize
from .fcn import FCN, FCNHead
from .non_local import NonLocalBlock, NonLocalHead, NonLocalNet
from .ocrnet import ObjectAttention, OCRHead, OCRNet, pool_region_features
from .oracle import GroundTruthOracle
from .psp import PSPHead, PSPNet, PyramidPooling
from .upernet import UPerHead, UPerNet

__all__ = [
    "ASPP",
    "ASPPHead",
    "CCHead",
    "CCNet",
    "ConvModule",
    "CrissCrossAttention",
    "DecodeHead",
    "DeepLabV3",
    "DeepLabV3Plus",
    "DepthFusedASPPHead",
    "EncoderDecoder",
    "FCN",
    "FCNHead",
    "GroundTruthOracle",
    "NonLocalBlock",
    "NonLocalHead",
    "NonLocalNet",
    "OCRHead",
    "OCRNet",
    "ObjectAttention",
    "PSPHead",
    "PSPNet",
    "PyramidPooling",
    "SegmentorOutput",
    "UPerHead",
    "UPerNet",
    "pool_region_features",
    "resize",
]
