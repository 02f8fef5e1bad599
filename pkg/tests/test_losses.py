import math

import numpy as np
import pytest
import torch

from pixseg.errors import LabelOutOfRangeError
from pixseg.losses import CrossEntropyLoss, combine_losses, cross_entropy


def test_uniform_logits_give_log_k():
    logits = torch.zeros(2, 4, 3, 3)
    target = torch.randint(0, 4, (2, 3, 3))
    loss, count = cross_entropy(logits, target, ignore_index=255)
    assert loss.item() == pytest.approx(math.log(4), rel=1e-6)
    assert count == 18


def test_all_ignored_returns_zero_with_zero_count_and_grad():
    logits = torch.randn(1, 3, 2, 2, requires_grad=True)
    target = torch.full((1, 2, 2), 255, dtype=torch.long)
    loss, count = cross_entropy(logits, target, ignore_index=255)
    assert float(loss) == 0.0
    assert count == 0.0
    loss.backward()
    assert torch.all(logits.grad == 0)


def scalar_oracle(logits, target, ignore_index, weights=None, smoothing=0.0):
    """Independent per-pixel evaluation of the documented formula."""
    n, k, h, w = logits.shape
    num = 0.0
    den = 0.0
    for b in range(n):
        for i in range(h):
            for j in range(w):
                t = int(target[b, i, j])
                if t == ignore_index:
                    continue
                z = logits[b, :, i, j].double()
                logp = z - torch.logsumexp(z, dim=0)
                pick = (1 - smoothing) * logp[t] + smoothing * logp.mean()
                w_t = 1.0 if weights is None else float(weights[t])
                num += -float(pick) * w_t
                den += w_t
    return (num / den if den else 0.0), den


@pytest.mark.parametrize("smoothing", [0.0, 0.1])
@pytest.mark.parametrize("weights", [None, [0.5, 1.0, 2.0]])
def test_random_case_matches_scalar_oracle(seeded, smoothing, weights):
    logits = torch.randn(2, 3, 2, 2, dtype=torch.float64)
    target = torch.randint(0, 3, (2, 2, 2))
    target[0, 0, 0] = 255
    loss, count = cross_entropy(logits, target, ignore_index=255,
                                class_weights=weights, label_smoothing=smoothing)
    expected, expected_count = scalar_oracle(logits, target, 255, weights, smoothing)
    assert loss.item() == pytest.approx(expected, rel=1e-6)
    assert count == pytest.approx(expected_count, rel=1e-9)


def test_gradient_matches_central_differences(seeded):
    logits = torch.randn(2, 3, 2, 2, dtype=torch.float64, requires_grad=True)
    target = torch.randint(0, 3, (2, 2, 2))
    target[1, 1, 1] = 255
    loss, _ = cross_entropy(logits, target, ignore_index=255)
    loss.backward()
    analytic = logits.grad.clone()

    eps = 1e-6
    flat = logits.detach().reshape(-1)
    numeric = torch.zeros_like(flat)
    for idx in range(flat.numel()):
        plus = flat.clone()
        plus[idx] += eps
        minus = flat.clone()
        minus[idx] -= eps
        lp, _ = cross_entropy(plus.reshape(logits.shape), target, ignore_index=255)
        lm, _ = cross_entropy(minus.reshape(logits.shape), target, ignore_index=255)
        numeric[idx] = (lp - lm) / (2 * eps)
    numeric = numeric.reshape(logits.shape)
    rel = (analytic - numeric).abs().max() / numeric.abs().max()
    assert rel.item() < 1e-4


def test_ignored_pixels_contribute_bit_zero_gradient(seeded):
    logits = torch.randn(1, 3, 2, 2, dtype=torch.float64)
    target = torch.randint(0, 3, (1, 2, 2))
    target[0, 0, 1] = 255

    a = logits.clone().requires_grad_(True)
    loss_a, _ = cross_entropy(a, target, ignore_index=255)
    loss_a.backward()

    perturbed = logits.clone()
    perturbed[0, :, 0, 1] += 123.0  # only the ignored pixel moves
    b = perturbed.requires_grad_(True)
    loss_b, _ = cross_entropy(b, target, ignore_index=255)
    loss_b.backward()

    assert loss_a.item() == loss_b.item()
    assert torch.all(a.grad[0, :, 0, 1] == 0)
    valid = torch.ones(1, 3, 2, 2, dtype=torch.bool)
    valid[0, :, 0, 1] = False
    assert torch.equal(a.grad[valid], b.grad[valid])


def test_batch_permutation_equivariance(seeded):
    logits = torch.randn(4, 3, 2, 2, dtype=torch.float64)
    target = torch.randint(0, 3, (4, 2, 2))
    perm = torch.tensor([2, 0, 3, 1])
    loss_a, _ = cross_entropy(logits, target)
    loss_b, _ = cross_entropy(logits[perm], target[perm])
    assert loss_a.item() == pytest.approx(loss_b.item(), rel=1e-12)


def test_label_out_of_range_rejected():
    logits = torch.randn(1, 3, 2, 2)
    target = torch.tensor([[[0, 1], [3, 2]]])
    with pytest.raises(LabelOutOfRangeError):
        cross_entropy(logits, target, ignore_index=255)
    with pytest.raises(LabelOutOfRangeError):
        cross_entropy(logits, torch.tensor([[[0, -1], [1, 2]]]), ignore_index=255)


def test_combine_losses_arithmetic():
    total, breakdown = combine_losses(torch.tensor(1.0), [torch.tensor(0.5)], 0.4)
    assert float(total) == pytest.approx(1.2)
    assert breakdown == {"main": 1.0, "aux0": 0.5, "total": pytest.approx(1.2)}
    total, _ = combine_losses(torch.tensor(2.0), [], 0.4)
    assert float(total) == 2.0


def test_zero_aux_weight_scales_aux_gradient_to_zero(seeded):
    main_logits = torch.randn(1, 3, 2, 2, requires_grad=True)
    aux_logits = torch.randn(1, 3, 2, 2, requires_grad=True)
    target = torch.randint(0, 3, (1, 2, 2))
    loss = CrossEntropyLoss(ignore_index=255)
    main, _ = loss(main_logits, target)
    aux, _ = loss(aux_logits, target)
    total, _ = combine_losses(main, [aux], aux_weight=0.0)
    total.backward()
    assert float(total) == pytest.approx(float(main.detach()))
    assert torch.all(aux_logits.grad == 0)
    assert not torch.all(main_logits.grad == 0)
