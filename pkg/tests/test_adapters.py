"""Tests for PEFT strategies and trainability accounting"""

import pytest
import torch
from src.adapters import (
    AdapterSpec,
    Strategy,
    apply_adapter,
    has_lora,
    lora_factors,
    lora_forward,
    lora_settings,
)
from src.backbone import LARGE_SPEC, DeepfakeDetector, ImageEncoder
from src.errors import ConfigurationError, ShapeError

LARGE_TOTAL = 303_179_776 + 1024 * 2 + 2


@pytest.fixture
def large_skeleton():
    """ViT-L/14 detector on the meta device, for parameter counting only"""
    return DeepfakeDetector(ImageEncoder.skeleton(LARGE_SPEC), normalize=True)


def test_ln_tuning_counts_on_large_model(large_skeleton):
    """Should leave about 104K of 303M parameters trainable (0.03%)"""
    _, report = apply_adapter(large_skeleton, AdapterSpec(Strategy.LN_TUNING))

    assert report.trainable_count == 104_450
    assert report.total_count == LARGE_TOTAL
    assert "0.03%" in report.summary()
    assert report.summary().startswith("trainable: ")


def test_linear_probe_trains_head_only(large_skeleton):
    """Should unfreeze nothing but the 1024 x 2 head"""
    _, report = apply_adapter(large_skeleton, AdapterSpec(Strategy.LINEAR_PROBE))
    assert report.trainable_count == 2050
    assert report.trainable_names == ["head.weight", "head.bias"]


def test_bias_tuning_counts_on_large_model(large_skeleton):
    """Should unfreeze the MLP biases of every block plus the head"""
    _, report = apply_adapter(large_skeleton, AdapterSpec(Strategy.BIAS_TUNING))
    assert report.trainable_count == 24 * (4096 + 1024) + 2050


def test_ln_tuning_selects_only_norms(toy_detector):
    """Should unfreeze norm affine parameters and the head, nothing else"""
    tree, report = apply_adapter(toy_detector, AdapterSpec(Strategy.LN_TUNING))
    norms = ("pre_layrnorm", "layer_norm1", "layer_norm2", "post_layernorm")

    assert report.trainable_names
    for name in report.trainable_names:
        assert name.startswith("head.") or any(norm in name for norm in norms), name
    # two blocks with two norms each, plus pre and post norms, each 8 wide with scale and shift
    assert report.trainable_count == 6 * 2 * 8 + 8 * 2 + 2
    assert tree.trainable_count + sum(
        e.count for e in tree.entries.values() if not e.trainable
    ) == tree.total_count


def test_apply_adapter_is_idempotent(toy_detector):
    """Should produce the same trainable set when applied twice"""
    spec = AdapterSpec(Strategy.LN_TUNING)
    _, first = apply_adapter(toy_detector, spec)
    _, second = apply_adapter(toy_detector, spec)
    assert first == second


def test_unmatched_pattern(toy_detector):
    """Should reject a pattern that selects no parameter"""
    spec = AdapterSpec(Strategy.LN_TUNING, target_patterns=["*.does_not_exist.*"])
    with pytest.raises(ConfigurationError):
        apply_adapter(toy_detector, spec)


def test_lora_injection(toy_detector):
    """Should add rank-1 factors to query and value projections without changing outputs"""
    images = torch.rand(3, 3, 28, 28)
    before = toy_detector.features(images)

    _, report = apply_adapter(toy_detector, AdapterSpec(Strategy.LORA, lora_rank=1))

    assert has_lora(toy_detector.encoder.model)
    # two blocks, q and v, each with an 8 x 1 and a 1 x 8 factor
    assert report.trainable_count == 2 * 2 * 16 + 18
    assert all(".lora_" in name or name.startswith("head.") for name in report.trainable_names)
    assert torch.allclose(toy_detector.features(images), before, atol=1e-6)

    _, again = apply_adapter(toy_detector, AdapterSpec(Strategy.LORA, lora_rank=1))
    assert again.trainable_count == report.trainable_count


def test_reapplying_lora_with_other_factors(toy_detector):
    """Should refuse to reuse injected LoRA layers with another rank, alpha or target set"""
    apply_adapter(toy_detector, AdapterSpec(Strategy.LORA, lora_rank=1))
    assert set(lora_settings(toy_detector.encoder.model).values()) == {(1, 1.0)}

    with pytest.raises(ConfigurationError, match="rank 2"):
        apply_adapter(toy_detector, AdapterSpec(Strategy.LORA, lora_rank=2))
    with pytest.raises(ConfigurationError, match="alpha 4.0"):
        apply_adapter(toy_detector, AdapterSpec(Strategy.LORA, lora_rank=1, lora_alpha=4.0))
    with pytest.raises(ConfigurationError, match="v_proj"):
        spec = AdapterSpec(Strategy.LORA, target_patterns=["*.self_attn.q_proj"])
        apply_adapter(toy_detector, spec)

    _, report = apply_adapter(toy_detector, AdapterSpec(Strategy.LORA, lora_rank=1))
    assert report.trainable_count == 2 * 2 * 16 + 18


def test_lora_forward_matches_injected_layer(toy_detector):
    """Should reproduce the injected layer's output from its frozen weight and factors"""
    apply_adapter(toy_detector, AdapterSpec(Strategy.LORA, lora_rank=1, lora_alpha=2.0))
    layer = toy_detector.encoder.model.vision_model.encoder.layers[0].self_attn.q_proj
    first, second = lora_factors(layer)
    with torch.no_grad():
        second.copy_(torch.randn_like(second))

    x = torch.randn(4, 8)
    expected = lora_forward(x, layer.base_layer.weight, (first, second), 2.0, layer.base_layer.bias)
    assert torch.allclose(layer(x), expected, atol=1e-6)


def test_lora_forward_shapes():
    """Should reject factors that do not fit the frozen weight"""
    weight = torch.zeros(6, 4)
    with pytest.raises(ShapeError):
        lora_forward(torch.zeros(2, 4), weight, (torch.zeros(1, 5), torch.zeros(6, 1)), 1.0)
    with pytest.raises(ShapeError):
        lora_forward(torch.zeros(2, 4), weight, (torch.zeros(1, 4), torch.zeros(6, 2)), 1.0)


def test_adapter_spec_config_round_trip():
    """Should coerce strategy names and store default patterns as an empty list"""
    spec = AdapterSpec.from_dict({"strategy": "bias_tuning"})
    assert spec.strategy is Strategy.BIAS_TUNING
    assert spec.to_dict()["target_patterns"] == []

    custom = AdapterSpec(Strategy.LN_TUNING, target_patterns=["*.post_layernorm.*"])
    assert custom.to_dict()["target_patterns"] == ["*.post_layernorm.*"]

    with pytest.raises(ConfigurationError):
        AdapterSpec("prompt_tuning")
    with pytest.raises(ConfigurationError):
        AdapterSpec(Strategy.LORA, lora_rank=0)
