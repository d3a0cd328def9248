"""PEFT adapter | Select, freeze and unfreeze backbone parameters by strategy"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fnmatch import fnmatchcase

import torch.nn as nn
from peft.tuners.lora import LoraLayer

from ..backbone import HEAD_PREFIX, DeepfakeDetector, NamedParameterTree, parameter_tree
from ..errors import ConfigurationError
from .lora import LORA_MARKERS, inject_lora, lora_settings

logger = logging.getLogger(__name__)

ENCODER_PREFIX = "encoder.model."


class Strategy(str, Enum):
    LINEAR_PROBE = "linear_probe"
    LN_TUNING = "ln_tuning"
    BIAS_TUNING = "bias_tuning"
    LORA = "lora"


DEFAULT_PATTERNS = {
    Strategy.LINEAR_PROBE: [],
    # every block norm plus the pre/post norms of the vision tower
    Strategy.LN_TUNING: [
        "*.pre_layrnorm.*",
        "*.layer_norm1.*",
        "*.layer_norm2.*",
        "*.post_layernorm.*",
    ],
    Strategy.BIAS_TUNING: ["*.mlp.fc1.bias", "*.mlp.fc2.bias"],
    Strategy.LORA: ["*.self_attn.q_proj", "*.self_attn.v_proj"],
}


@dataclass
class AdapterSpec:
    """Declarative choice of which backbone parameters train and how"""

    strategy: Strategy = Strategy.LN_TUNING
    lora_rank: int = 1
    lora_alpha: float = 1.0
    lora_dropout: float = 0.0
    target_patterns: list[str] = field(default_factory=list)

    def __post_init__(self):
        try:
            self.strategy = Strategy(self.strategy)
        except ValueError as exc:
            raise ConfigurationError(f"Unknown PEFT strategy: {self.strategy}") from exc

        if not self.target_patterns:
            self.target_patterns = list(DEFAULT_PATTERNS[self.strategy])

        if self.strategy is Strategy.LORA and self.lora_rank < 1:
            raise ConfigurationError(f"LoRA rank must be >= 1, got {self.lora_rank}")
        if self.strategy is not Strategy.LINEAR_PROBE and not self.target_patterns:
            raise ConfigurationError(f"{self.strategy.value} needs at least one target pattern")

    def to_dict(self) -> dict:
        """Default patterns serialize as an empty list so a strategy override picks up its own"""
        custom = self.target_patterns != DEFAULT_PATTERNS[self.strategy]
        return {
            "strategy": self.strategy.value,
            "lora_rank": self.lora_rank,
            "lora_alpha": self.lora_alpha,
            "lora_dropout": self.lora_dropout,
            "target_patterns": list(self.target_patterns) if custom else [],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AdapterSpec":
        return cls(**data)


@dataclass
class TrainabilityReport:
    """How many parameters an adapter leaves trainable"""

    trainable_count: int
    total_count: int
    trainable_names: list[str]

    @property
    def fraction(self) -> float:
        return self.trainable_count / self.total_count if self.total_count else 0.0

    def summary(self) -> str:
        return (
            f"trainable: {_human(self.trainable_count)} / {_human(self.total_count)} "
            f"({self.fraction * 100:.2f}%)"
        )

    @classmethod
    def from_tree(cls, tree: NamedParameterTree) -> "TrainabilityReport":
        return cls(
            trainable_count=tree.trainable_count,
            total_count=tree.total_count,
            trainable_names=tree.trainable_names,
        )


def apply_adapter(
    model: DeepfakeDetector, spec: AdapterSpec
) -> tuple[NamedParameterTree, TrainabilityReport]:
    """Freeze everything, then unfreeze exactly what the AdapterSpec selects plus the head.

    Running it twice with the same spec gives the same trainable set.
    """
    model.requires_grad_(False)

    if spec.strategy in (Strategy.LN_TUNING, Strategy.BIAS_TUNING):
        selected = _match_parameters(model, spec.target_patterns)
        for name, param in model.named_parameters():
            if name in selected:
                param.requires_grad_(True)

    elif spec.strategy is Strategy.LORA:
        targets = [
            name.removeprefix(ENCODER_PREFIX)
            for name in _match_linear_modules(model, spec.target_patterns)
        ]
        existing = lora_settings(model.encoder.model)
        if existing:
            _check_existing_lora(existing, targets, spec)
        else:
            inject_lora(
                model.encoder.model,
                targets,
                rank=spec.lora_rank,
                alpha=spec.lora_alpha,
                dropout=spec.lora_dropout,
            )
        model.requires_grad_(False)
        for name, param in model.named_parameters():
            if any(marker in name for marker in LORA_MARKERS):
                param.requires_grad_(True)

    model.head.requires_grad_(True)

    tree = parameter_tree(model)
    report = TrainabilityReport.from_tree(tree)
    logger.info("%s adapter: %s", spec.strategy.value, report.summary())
    return tree, report


def _check_existing_lora(
    existing: dict[str, tuple[int, float]], targets: list[str], spec: AdapterSpec
) -> None:
    """Injected layers can only be reused when they carry the requested factors"""
    expected = {name: (spec.lora_rank, float(spec.lora_alpha)) for name in targets}
    if existing == expected:
        return
    mismatched = sorted(
        name
        for name in existing.keys() | expected.keys()
        if existing.get(name) != expected.get(name)
    )
    raise ConfigurationError(
        f"encoder already carries LoRA layers that differ from rank {spec.lora_rank}, "
        f"alpha {spec.lora_alpha} on {len(targets)} targets (first mismatch: {mismatched[0]})"
    )


def _match_parameters(model: nn.Module, patterns: list[str]) -> set[str]:
    selected = set()
    for pattern in patterns:
        hits = {
            name
            for name, _ in model.named_parameters()
            if not name.startswith(HEAD_PREFIX) and fnmatchcase(name, pattern)
        }
        if not hits:
            raise ConfigurationError(f"Adapter pattern {pattern!r} matches no parameter")
        selected |= hits
    return selected


def _match_linear_modules(model: DeepfakeDetector, patterns: list[str]) -> list[str]:
    candidates = [
        name
        for name, module in model.named_modules()
        if name.startswith(ENCODER_PREFIX) and isinstance(module, (nn.Linear, LoraLayer))
    ]
    selected = []
    for pattern in patterns:
        hits = [name for name in candidates if fnmatchcase(name, pattern)]
        if not hits:
            raise ConfigurationError(f"Adapter pattern {pattern!r} matches no linear layer")
        selected.extend(hit for hit in hits if hit not in selected)
    return selected


def _human(count: int) -> str:
    for unit, scale in (("B", 1e9), ("M", 1e6), ("K", 1e3)):
        if count >= scale:
            return f"{count / scale:.1f}{unit}"
    return str(count)
