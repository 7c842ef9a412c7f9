import math

import pytest
import torch

from fusiontrain.model import (
    FusionHead,
    StallClassifier,
    TinyEncoder3d,
    encode_bidirectional,
    fuse_and_score,
)

torch.set_num_threads(2)


def tiny_input(rng_seed, t=6, hw=112):
    g = torch.Generator().manual_seed(rng_seed)
    return torch.rand(1, 3, t, hw, hw, generator=g)


def test_feature_lengths():
    enc = TinyEncoder3d()
    x = tiny_input(0, t=8)
    assert enc(x).shape == (1, 512)
    assert encode_bidirectional(enc, x).shape == (1, 1024)


def test_single_frame_halves_identical():
    enc = TinyEncoder3d()
    feats = encode_bidirectional(enc, tiny_input(1, t=1))
    assert torch.equal(feats[:, :512], feats[:, 512:])


def test_reversal_swaps_halves_exactly():
    torch.manual_seed(3)
    enc = TinyEncoder3d()
    for seed in range(6):
        x = tiny_input(100 + seed, t=5)
        direct = encode_bidirectional(enc, x)
        reversed_ = encode_bidirectional(enc, torch.flip(x, dims=[2]))
        assert torch.equal(reversed_[:, :512], direct[:, 512:])
        assert torch.equal(reversed_[:, 512:], direct[:, :512])


def test_encoder_rejects_bad_shapes():
    enc = TinyEncoder3d()
    with pytest.raises(ValueError):
        enc(torch.zeros(1, 4, 5, 112, 112))
    with pytest.raises(ValueError):
        encode_bidirectional(enc, torch.zeros(3, 5, 112, 112))


def test_fusion_zero_weights_give_half():
    head = FusionHead(8)
    with torch.no_grad():
        head.dense.weight.zero_()
        head.dense.bias.zero_()
    score = fuse_and_score(torch.randn(1, 4), torch.randn(1, 4), head)
    assert score.item() == 0.5


def test_fusion_logit_two_scores_sigmoid():
    head = FusionHead(2)
    with torch.no_grad():
        head.dense.weight.copy_(torch.tensor([[1.0, 0.0]]))
        head.dense.bias.zero_()
    score = fuse_and_score(torch.tensor([[2.0]]), torch.tensor([[0.0]]), head)
    assert abs(score.item() - 1.0 / (1.0 + math.exp(-2.0))) <= 1e-4


def test_fusion_scores_strictly_inside_unit_interval():
    torch.manual_seed(5)
    head = FusionHead(16)
    for _ in range(20):
        score = fuse_and_score(torch.randn(1, 8) * 3, torch.randn(1, 8) * 3, head)
        assert 0.0 < score.item() < 1.0


def test_bce_with_logits_ln2_sanity():
    loss = torch.nn.BCEWithLogitsLoss()(torch.zeros(1), torch.ones(1))
    assert abs(loss.item() - math.log(2.0)) <= 1e-6


def test_classifier_stream_configurations():
    img = tiny_input(7, t=5)
    pc = tiny_input(8, t=4)
    both = StallClassifier("both", bidirectional=True)
    assert both(img, pc).shape == (1,)
    assert both.head.dense.in_features == 2048
    image_only = StallClassifier("image", bidirectional=True)
    assert image_only(img, None).shape == (1,)
    assert image_only.head.dense.in_features == 1024
    uni = StallClassifier("both", bidirectional=False)
    assert uni.head.dense.in_features == 1024
    pc_uni = StallClassifier("pc", bidirectional=False)
    assert pc_uni.head.dense.in_features == 512
    with pytest.raises(ValueError):
        StallClassifier("audio")


def test_fusion_head_gradient_matches_finite_differences():
    torch.manual_seed(11)
    head = FusionHead(12).double()
    f_i = torch.randn(1, 6, dtype=torch.float64)
    f_p = torch.randn(1, 6, dtype=torch.float64)
    label = torch.ones(1, dtype=torch.float64)
    loss_fn = torch.nn.BCEWithLogitsLoss()

    def loss_value():
        return loss_fn(head(torch.cat([f_i, f_p], dim=1)), label)

    loss_value().backward()
    h = 1e-6
    for param in head.parameters():
        analytic = param.grad.clone()
        flat = param.data.view(-1)
        for k in range(flat.numel()):
            keep = flat[k].item()
            flat[k] = keep + h
            up = loss_value().item()
            flat[k] = keep - h
            down = loss_value().item()
            flat[k] = keep
            fd = (up - down) / (2 * h)
            a = analytic.view(-1)[k].item()
            rel = abs(a - fd) / max(abs(a), abs(fd), 1e-8)
            assert rel <= 1e-4, f"gradient mismatch: analytic {a}, fd {fd}, rel {rel}"
