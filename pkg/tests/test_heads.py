import numpy as np
import pytest
import torch

from pixseg.backbones.features import FeatureLevel, FeaturePyramid
from pixseg.errors import ConfigError
from pixseg.registry import SEGMENTORS
from pixseg.segmentors import FCNHead, SegmentorOutput

TINY_BACKBONE = {
    "type": "resnet",
    "depth": 18,
    "width_multiplier": 0.25,
    "stage_blocks": [1, 1, 1, 1],
    "output_stride": 8,
    "out_indices": [0, 1, 2, 3],
}

HEAD_TYPES = ["fcn", "pspnet", "deeplabv3", "deeplabv3plus", "upernet",
              "nonlocal", "ccnet", "ocrnet"]


def build(head_type, aux=True, **head_params):
    head = {"mid_channels": 16}
    head.update(head_params)
    if head_type == "deeplabv3" or head_type == "deeplabv3plus":
        head.setdefault("rates", (1, 2, 3))
    node = {
        "type": head_type,
        "num_classes": 4,
        "backbone": dict(TINY_BACKBONE),
        "head": head,
        "aux_head": {"mid_channels": 8, "in_index": 2} if aux else None,
    }
    return SEGMENTORS.build(node)


@pytest.mark.parametrize("head_type", HEAD_TYPES)
def test_main_logits_at_input_resolution(seeded, head_type):
    model = build(head_type)
    model.eval()
    out = model(torch.randn(2, 3, 64, 64))
    assert isinstance(out, SegmentorOutput)
    assert out.main_logits.shape == (2, 4, 64, 64)
    assert len(out.aux_logits) == 1
    assert out.aux_logits[0].shape == (2, 4, 64, 64)


@pytest.mark.parametrize("head_type", HEAD_TYPES)
@pytest.mark.parametrize("size", [(64, 64), (96, 64)])
def test_resolution_contract_other_sizes(seeded, head_type, size):
    model = build(head_type)
    model.eval()
    out = model(torch.randn(1, 3, *size))
    assert out.main_logits.shape == (1, 4, *size)


def test_aux_disabled_gives_empty_list(seeded):
    model = build("fcn", aux=False)
    model.eval()
    out = model(torch.randn(1, 3, 64, 64))
    assert out.aux_logits == []


def test_ocrnet_requires_aux_head(seeded):
    with pytest.raises(ConfigError):
        build("ocrnet", aux=False)


def test_head_demanding_missing_level_is_config_error(seeded):
    shallow = dict(TINY_BACKBONE, out_indices=[3])
    with pytest.raises(ConfigError):
        SEGMENTORS.build(
            {
                "type": "deeplabv3plus",
                "num_classes": 4,
                "backbone": shallow,
                "head": {"mid_channels": 16, "low_index": 0, "in_index": 3,
                         "rates": (1, 2, 3)},
                "aux_head": None,
            }
        )
    with pytest.raises(ConfigError):
        SEGMENTORS.build(
            {
                "type": "fcn",
                "num_classes": 4,
                "backbone": shallow,
                "head": {"mid_channels": 16, "in_index": 0},
                "aux_head": {"in_index": 2},
            }
        )


def test_upernet_needs_two_levels(seeded):
    with pytest.raises(ConfigError):
        SEGMENTORS.build(
            {
                "type": "upernet",
                "num_classes": 4,
                "backbone": dict(TINY_BACKBONE, out_indices=[3]),
                "head": {"mid_channels": 16},
                "aux_head": None,
            }
        )


def test_deterministic_eval_forward_bit_identical(seeded):
    model = build("pspnet")
    model.eval()
    x = torch.randn(2, 3, 64, 64)
    with torch.no_grad():
        a = model(x).main_logits
        b = model(x).main_logits
    assert torch.equal(a, b)


def test_internals_exposed_only_on_request(seeded):
    model = build("fcn")
    model.eval()
    assert model(torch.randn(1, 3, 64, 64)).internals is None
    internals = model(torch.randn(1, 3, 64, 64), return_internals=True).internals
    assert internals["pyramid_strides"] == [4, 8, 8, 8]
    assert internals["head_logits"].shape[-2:] == (8, 8)


def test_fcn_head_zero_feature_zero_bias_ties_to_class_zero(seeded):
    pyramid = FeaturePyramid([FeatureLevel(8, torch.zeros(1, 8, 4, 4))])
    head = FCNHead(in_channels=8, num_classes=3, mid_channels=8, num_convs=2,
                   dropout=0.0)
    head.eval()
    logits = head(pyramid)
    assert logits.shape == (1, 3, 4, 4)
    assert torch.all(logits == 0)
    labels = np.argmax(logits.detach().numpy(), axis=1)
    assert (labels == 0).all()


def test_fcn_head_parameter_count_closed_form():
    c, mid, k, num_convs = 8, 8, 3, 2
    head = FCNHead(in_channels=c, num_classes=k, mid_channels=mid,
                   num_convs=num_convs, dropout=0.1)
    # independent closed-form tally: each 3x3 ConvModule has 9*cin*cout
    # conv weights (no bias under norm) plus 2*cout norm affine params;
    # the classifier is a 1x1 conv with bias.
    expected = (9 * c * mid + 2 * mid) + (9 * mid * mid + 2 * mid) + (mid * k + k)
    assert sum(p.numel() for p in head.parameters()) == expected


def test_channel_arithmetic_of_fusion_convs():
    from pixseg.segmentors import ASPP, PyramidPooling
    from pixseg.segmentors.aspp import DepthFusedASPPHead
    from pixseg.segmentors.upernet import UPerHead

    ppm = PyramidPooling(16, 16, bins=(1, 2, 3, 6))
    assert ppm.fuse[0].in_channels == 16 + 4 * 16

    aspp = ASPP(8, 32, rates=(6, 12, 18), with_global=True)
    assert aspp.fuse[0].in_channels == 5 * 32

    head = DepthFusedASPPHead(in_channels=32, low_in_channels=8, num_classes=4,
                              mid_channels=32, rates=(1, 2), low_channels=48)
    assert head.fuse[0][0].in_channels == 32 + 48

    uper = UPerHead(in_channels=[8, 16, 32, 64], num_classes=4, mid_channels=32)
    assert uper.fuse[0].in_channels == 4 * 32


def test_argmax_shift_invariance_and_tie_rule():
    from pixseg.evaluation import labels_from_logits

    rng = np.random.default_rng(0)
    logits = torch.from_numpy(rng.normal(size=(5, 6, 7)).astype(np.float32))
    shift = torch.from_numpy(rng.normal(size=(1, 6, 7)).astype(np.float32))
    base = labels_from_logits(logits)
    shifted = labels_from_logits(logits + shift)
    assert np.array_equal(base, shifted)
    # exact ties resolve to the lowest class index
    tied = torch.zeros(3, 2, 2)
    assert (labels_from_logits(tied) == 0).all()
    tied[1] += 1.0
    tied[2] += 1.0
    assert (labels_from_logits(tied) == 1).all()
