"""Object-contextual representation head.

Pixel features are pooled into one vector per class using the auxiliary
head's logits as soft region masks (spatial softmax per class); pixels
then attend over the K region vectors and the resulting context is
fused back into each pixel representation.
"""

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..registry import SEGMENTORS
from .base import DecodeHead, EncoderDecoder
from .common import ConvModule, resize


def pool_region_features(features, region_logits):
    """Soft-region weighted sums of pixel features, one vector per class.

    Args:
        features: (B, C, H, W) pixel representations.
        region_logits: (B, K, H, W) soft region scores; each class's map
            is softmaxed over space so its weights sum to 1.

    Returns:
        (B, K, C) region representation matrix.
    """
    b, k = region_logits.shape[:2]
    weights = F.softmax(region_logits.flatten(2), dim=-1)       # b, k, hw
    feats = features.flatten(2)                                 # b, c, hw
    return torch.einsum("bkn,bcn->bkc", weights, feats)


class ObjectAttention(nn.Module):
    """Pixel queries attending over the K region vectors."""

    def __init__(self, channels, key_channels):
        super().__init__()
        self.key_channels = key_channels
        self.query_proj = nn.Conv2d(channels, key_channels, 1)
        self.key_proj = nn.Linear(channels, key_channels)
        self.value_proj = nn.Linear(channels, key_channels)
        self.up_proj = nn.Conv2d(key_channels, channels, 1)

    def forward(self, pixels, regions):
        b, c, h, w = pixels.shape
        q = self.query_proj(pixels).flatten(2).transpose(1, 2)  # b, n, key
        k = self.key_proj(regions)                              # b, K, key
        v = self.value_proj(regions)                            # b, K, key
        attn = F.softmax(
            torch.bmm(q, k.transpose(1, 2)) / math.sqrt(self.key_channels), dim=-1
        )                                                       # b, n, K
        context = torch.bmm(attn, v)                            # b, n, key
        context = context.transpose(1, 2).reshape(b, self.key_channels, h, w)
        return self.up_proj(context)


class OCRHead(DecodeHead):
    needs_region_logits = True

    def __init__(self, in_channels, num_classes, mid_channels=512,
                 key_channels=None, dropout=0.1, in_index=-1):
        super().__init__(mid_channels, num_classes, dropout=dropout, in_index=in_index)
        key = key_channels or max(1, mid_channels // 2)
        self.pixel_conv = ConvModule(in_channels, mid_channels, 3, padding=1)
        self.attention = ObjectAttention(mid_channels, key)
        self.fuse = ConvModule(2 * mid_channels, mid_channels, 1)

    def object_context(self, feat, region_logits):
        """Context-enhanced pixel features (pre-classifier, mid channels)."""
        if region_logits.shape[-2:] != feat.shape[-2:]:
            region_logits = resize(region_logits, feat.shape[-2:])
        regions = pool_region_features(feat, region_logits)
        context = self.attention(feat, regions)
        return self.fuse(torch.cat([feat, context], dim=1))

    def forward(self, pyramid, region_logits):
        feat = self.pixel_conv(pyramid[self.in_index].map)
        return self.cls_seg(self.object_context(feat, region_logits))


@SEGMENTORS.register("ocrnet")
class OCRNet(EncoderDecoder):
    """Segmentor enhancing pixels with object-contextual representations.

    Requires an auxiliary head: its logits provide the soft regions.
    """

    def _build_head(self, out_channels, num_classes, params):
        in_index = params.pop("in_index", -1)
        self._check_index(in_index, "decode head")
        return OCRHead(
            in_channels=out_channels[in_index],
            num_classes=num_classes,
            in_index=in_index,
            **params,
        )
