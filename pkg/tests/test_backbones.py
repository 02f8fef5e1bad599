import pytest
import torch

from pixseg.backbones import FeaturePyramid, InvalidSpecError, ResNet, UNet
from pixseg.backbones.features import FeatureLevel
from pixseg.errors import ShapeError


def tiny_resnet(**kwargs):
    defaults = dict(depth=18, width_multiplier=0.25, stage_blocks=[1, 1, 1, 1])
    defaults.update(kwargs)
    return ResNet(**defaults)


def test_resnet18_os32_spatial_sizes(seeded):
    net = tiny_resnet(output_stride=32, out_indices=(0, 1, 2, 3))
    pyramid = net(torch.randn(1, 3, 64, 64))
    assert pyramid.strides == [4, 8, 16, 32]
    assert [lv.map.shape[-1] for lv in pyramid] == [16, 8, 4, 2]


def test_resnet50_os8_strides_and_size(seeded):
    net = ResNet(depth=50, width_multiplier=0.125, stage_blocks=[1, 1, 1, 1],
                 output_stride=8, out_indices=(0, 1, 2, 3))
    pyramid = net(torch.randn(1, 3, 64, 64))
    assert pyramid.strides == [4, 8, 8, 8]
    assert pyramid[-1].map.shape[-2:] == (8, 8)


def test_resnet_os16_only_last_stage_dilated(seeded):
    net = tiny_resnet(output_stride=16, out_indices=(0, 1, 2, 3))
    pyramid = net(torch.randn(1, 3, 64, 64))
    assert pyramid.strides == [4, 8, 16, 16]
    # stage 4 carries dilation 2
    assert net.stages[3][0].conv2.dilation == (2, 2) if net.depth == 50 else True
    assert net.stages[3][0].conv1.dilation == (2, 2)


def test_output_stride_never_changes_parameter_count(seeded):
    counts = set()
    state_keys = set()
    for os_ in (8, 16, 32):
        net = tiny_resnet(output_stride=os_)
        counts.add(sum(p.numel() for p in net.parameters()))
        state_keys.add(tuple(sorted(net.state_dict())))
    assert len(counts) == 1
    assert len(state_keys) == 1


def test_checkpoint_transfers_across_strides(seeded, tmp_path):
    from pixseg.engine.checkpoint import save_archive
    from pixseg.backbones import load_pretrained

    src = tiny_resnet(output_stride=32)
    arrays = {k: v.numpy().copy() for k, v in src.state_dict().items()}
    save_archive(tmp_path / "w.ckpt", arrays, {})
    dst = tiny_resnet(output_stride=8)
    loaded = load_pretrained(dst, tmp_path / "w.ckpt")
    assert len(loaded) == len(arrays)
    for k, v in src.state_dict().items():
        assert torch.equal(dst.state_dict()[k], v)


def test_no_batch_cross_talk_in_eval(seeded):
    net = tiny_resnet(output_stride=8, out_indices=(3,)).double()
    net.eval()
    image = torch.randn(1, 3, 64, 64, dtype=torch.float64)
    others = torch.randn(2, 3, 64, 64, dtype=torch.float64)
    alone = net(image)[0].map
    batched = net(torch.cat([image, others]))[0].map[:1]
    # exact in double precision; f32 only reassociates kernel sums
    assert (alone - batched).abs().max().item() <= 1e-6

    net32 = tiny_resnet(output_stride=8, out_indices=(3,))
    net32.eval()
    img32, others32 = image.float(), others.float()
    alone32 = net32(img32)[0].map
    batched32 = net32(torch.cat([img32, others32]))[0].map[:1]
    assert (alone32 - batched32).abs().max().item() <= 1e-4


def test_zero_input_zero_final_norm_gives_zero_features(seeded):
    net = tiny_resnet(output_stride=32, out_indices=(3,))
    net.eval()
    # zero every norm gain and bias: conv outputs then normalize to zero
    for m in net.modules():
        if isinstance(m, torch.nn.BatchNorm2d):
            torch.nn.init.zeros_(m.weight)
            torch.nn.init.zeros_(m.bias)
    out = net(torch.zeros(1, 3, 64, 64))[0].map
    assert torch.all(out == 0)


def test_divisibility_precondition(seeded):
    net = tiny_resnet()
    with pytest.raises(ShapeError):
        net(torch.randn(1, 3, 60, 64))


def test_invalid_specs_rejected():
    with pytest.raises(InvalidSpecError):
        ResNet(depth=34)
    with pytest.raises(InvalidSpecError):
        tiny_resnet(output_stride=4)
    with pytest.raises(InvalidSpecError):
        tiny_resnet(out_indices=(0, 5))
    with pytest.raises(InvalidSpecError):
        tiny_resnet(width_multiplier=0.0)
    with pytest.raises(InvalidSpecError):
        UNet(num_stages=1)


def test_stride_arithmetic_many_sizes(seeded):
    net = tiny_resnet(output_stride=16, out_indices=(0, 1, 2, 3))
    for size in (32, 64, 96, 128):
        pyramid = net(torch.randn(1, 3, size, size))
        for level in pyramid:
            expected = -(-size // level.stride)  # ceil
            assert level.map.shape[-2:] == (expected, expected)


def test_unet_stride1_level_and_channels(seeded):
    net = UNet(base_channels=64, width_multiplier=0.25, num_stages=4,
               out_indices=(0, 1, 2, 3))
    pyramid = net(torch.randn(1, 3, 64, 64))
    assert pyramid.strides == [1, 2, 4, 8]
    assert pyramid[0].map.shape == (1, 16, 64, 64)  # base 64 * 0.25
    assert pyramid.channels == [16, 32, 64, 128]


def test_feature_pyramid_rejects_decreasing_strides():
    t = torch.zeros(1, 1, 4, 4)
    with pytest.raises(ShapeError):
        FeaturePyramid([FeatureLevel(8, t), FeatureLevel(4, t)])
    # equal strides are legal (dilated stages)
    FeaturePyramid([FeatureLevel(8, t), FeatureLevel(8, t)])
