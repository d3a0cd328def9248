"""Tests for the image encoder and detector model"""

import pytest
import torch
from src.backbone import (
    LARGE_SPEC,
    TOY_SPEC,
    DeepfakeDetector,
    ImageEncoder,
    encode,
    parameter_tree,
)
from src.errors import ConfigurationError, ShapeError


def test_large_spec_architecture():
    """Should describe ViT-L/14 with 1024-wide features and 257 tokens"""
    assert LARGE_SPEC.feature_dim == 1024
    assert LARGE_SPEC.patch_grid == (16, 16)
    assert LARGE_SPEC.token_count == 257
    assert parameter_tree(LARGE_SPEC).total_count == 303_179_776


@pytest.mark.parametrize(
    ("spec", "expected"), [(TOY_SPEC, 96), (LARGE_SPEC, 102_400)], ids=["toy", "large"]
)
def test_layer_norm_parameters(spec, expected):
    """Should hold a weight and a bias of width D for each of the 2L + 2 layer norms"""
    tree = parameter_tree(spec)
    norms = tree.count_matching("layer_norm", "layrnorm", "layernorm")
    assert norms == 2 * spec.feature_dim * (2 * spec.num_layers + 2) == expected


def test_toy_encoder_is_deterministic():
    """Should build identical weights and fingerprints from the encoder seed"""
    a = ImageEncoder.from_spec(TOY_SPEC)
    b = ImageEncoder.from_spec(TOY_SPEC)

    assert a.fingerprint == b.fingerprint == "init:toy:seed0"
    for (name, p), (_, q) in zip(a.named_parameters(), b.named_parameters()):
        assert torch.equal(p, q), name
    assert not any(p.requires_grad for p in a.parameters())


def test_features_are_post_norm_class_token(toy_encoder):
    """Should return the final-normed classification token, one row per image"""
    images = torch.rand(3, 3, 28, 28)
    features = toy_encoder(images)
    assert features.shape == (3, TOY_SPEC.feature_dim)

    with torch.no_grad():
        hidden = toy_encoder.model(pixel_values=toy_encoder.preprocess(images)).last_hidden_state
        expected = toy_encoder.model.vision_model.post_layernorm(hidden[:, 0])
    assert torch.allclose(features, expected, atol=1e-6)


def test_uint8_and_float_inputs_agree(toy_encoder):
    """Should treat uint8 pixels as [0, 255] and float pixels as [0, 1]"""
    pixels = torch.randint(0, 256, (2, 3, 28, 28), dtype=torch.uint8)
    as_float = pixels.float() / 255.0
    assert torch.allclose(toy_encoder(pixels), toy_encoder(as_float), atol=1e-6)


def test_resizes_to_input_side(toy_encoder):
    """Should resize 256-pixel crops to the encoder input side"""
    assert toy_encoder(torch.rand(2, 3, 256, 256)).shape == (2, TOY_SPEC.feature_dim)


def test_shape_errors(toy_encoder):
    """Should reject images without three channels and mis-sized pixel values"""
    with pytest.raises(ShapeError):
        toy_encoder(torch.rand(2, 1, 28, 28))
    with pytest.raises(ShapeError):
        toy_encoder.encode(torch.rand(2, 3, 30, 30))


def test_empty_batch(toy_encoder):
    """Should return an empty feature matrix for an empty batch"""
    assert toy_encoder(torch.rand(0, 3, 28, 28)).shape == (0, TOY_SPEC.feature_dim)


def test_encode_builds_feature_batch(toy_encoder):
    """Should wrap features with default labels and video ids"""
    batch = encode(toy_encoder, torch.rand(4, 3, 28, 28))
    assert len(batch) == 4
    assert batch.labels.tolist() == [0, 0, 0, 0]
    assert batch.video_ids == ["0", "1", "2", "3"]
    assert not batch.normalized


def test_missing_weights(tmp_path):
    """Should raise a configuration error for a weights path that does not exist"""
    with pytest.raises(ConfigurationError):
        ImageEncoder.from_spec(TOY_SPEC, weights=tmp_path / "missing.pt")


def test_weights_from_state_dict_file(tmp_path, toy_encoder):
    """Should load a saved state dict and fingerprint it by content"""
    path = tmp_path / "toy.pt"
    torch.save(toy_encoder.model.state_dict(), path)

    loaded = ImageEncoder.from_spec(TOY_SPEC, weights=path)
    images = torch.rand(2, 3, 28, 28)

    assert loaded.fingerprint.startswith("sha256:")
    assert torch.allclose(loaded(images), toy_encoder(images), atol=1e-6)


def test_detector_normalized_features(toy_detector):
    """Should emit unit feature rows and fake probabilities in [0, 1]"""
    images = torch.rand(5, 3, 28, 28)
    logits, features = toy_detector(images)

    assert logits.shape == (5, 2)
    assert torch.allclose(features.norm(dim=1), torch.ones(5), atol=1e-5)
    scores = toy_detector.predict(images)
    assert ((scores >= 0) & (scores <= 1)).all()


def test_detector_raw_features(toy_encoder):
    """Should pass encoder features through untouched without normalization"""
    detector = DeepfakeDetector(toy_encoder, normalize=False)
    images = torch.rand(2, 3, 28, 28)
    assert torch.allclose(detector.features(images), toy_encoder(images))
    assert detector.feature_dim == TOY_SPEC.feature_dim
