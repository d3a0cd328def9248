"""Tests for the cosine learning-rate schedule"""

from types import SimpleNamespace

import pytest
import torch
from src.errors import ConfigurationError
from src.training import lr_at, set_lr

CFG = SimpleNamespace(lr_initial=8e-5, lr_final=5e-5)


def test_lr_endpoints():
    """Should start at lr_initial and reach lr_final at the last decay step"""
    assert lr_at(0, 100, CFG) == 8e-5
    assert lr_at(100, 100, CFG) == 5e-5


def test_lr_midpoint():
    """Should sit halfway between the bounds at half the decay"""
    assert lr_at(50, 100, CFG) == pytest.approx(6.5e-5)


def test_lr_monotone_and_bounded():
    """Should never increase and never leave [lr_final, lr_initial]"""
    values = [lr_at(step, 37, CFG) for step in range(60)]
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert all(5e-5 <= v <= 8e-5 for v in values)


def test_lr_constant_after_decay():
    """Should hold lr_final past the decay horizon"""
    assert lr_at(1000, 100, CFG) == 5e-5


def test_lr_errors():
    """Should reject a non-positive horizon and negative steps"""
    with pytest.raises(ConfigurationError):
        lr_at(0, 0, CFG)
    with pytest.raises(ConfigurationError):
        lr_at(-1, 10, CFG)


def test_set_lr_updates_every_group():
    """Should write the rate into every parameter group"""
    a, b = torch.nn.Parameter(torch.zeros(1)), torch.nn.Parameter(torch.zeros(1))
    optimizer = torch.optim.AdamW([{"params": [a]}, {"params": [b]}], lr=1.0)
    set_lr(optimizer, 0.25)
    assert [g["lr"] for g in optimizer.param_groups] == [0.25, 0.25]
