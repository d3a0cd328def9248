"""Experiment config | YAML presets mapped onto dataclasses, dotted overrides, config hashing"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence

import yaml

from ..adapters import AdapterSpec, Strategy
from ..backbone import ENCODER_SPECS
from ..errors import ConfigurationError
from ..losses import LossWeights
from ..pipeline import AugmentationConfig, SplitSpec, SyntheticConfig

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).parent / "presets"
PAIRWISE_TERMS = ("alignment", "uniformity", "supcon")


class Setup(str, Enum):
    LINEAR_PROBE = "linear_probe"
    LN = "ln"
    LN_NORM = "ln_norm"
    LN_NORM_UNAL = "ln_norm_unal"
    LN_NORM_UNAL_SLERP = "ln_norm_unal_slerp"


NORMALIZED_SETUPS = {Setup.LN_NORM, Setup.LN_NORM_UNAL, Setup.LN_NORM_UNAL_SLERP}


@dataclass
class DataConfig:
    """Where frames come from: manifest files or the synthetic generator"""

    manifests: list[str] = field(default_factory=list)
    data_root: Optional[str] = None
    split: SplitSpec = field(default_factory=SplitSpec)
    synthetic: Optional[SyntheticConfig] = None

    def to_dict(self) -> dict:
        return {
            "manifests": list(self.manifests),
            "data_root": self.data_root,
            "split": asdict(self.split),
            "synthetic": self.synthetic.to_dict() if self.synthetic else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DataConfig":
        data = dict(data)
        _reject_unknown(cls, data, "data")
        split = data.pop("split", None) or {}
        synthetic = data.pop("synthetic", None)
        return cls(
            split=_build(SplitSpec, split, "data.split"),
            synthetic=_build(SyntheticConfig, synthetic, "data.synthetic") if synthetic else None,
            **data,
        )


@dataclass
class TrainConfig:
    """Everything that determines a training run"""

    name: str = "custom"
    setup: Setup = Setup.LN_NORM_UNAL_SLERP
    encoder: str = "large"
    weights: Optional[str] = None
    lr_initial: float = 8e-5
    lr_final: float = 5e-5
    decay_epochs: int = 50
    epochs: int = 50
    betas: tuple[float, float] = (0.9, 0.999)
    weight_decay: float = 0.0
    batch_size: int = 128
    precision: str = "full"
    seed: int = 0
    slerp_mode: str = "replace"
    slerp_probability: float = 1.0
    early_stopping_patience: Optional[int] = None
    validate_every: int = 1
    max_steps: Optional[int] = None
    workers: int = 0
    device: str = "cpu"
    loss_weights: LossWeights = field(default_factory=LossWeights)
    adapter: AdapterSpec = field(default_factory=AdapterSpec)
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)
    data: DataConfig = field(default_factory=DataConfig)

    def __post_init__(self):
        try:
            self.setup = Setup(self.setup)
        except ValueError as exc:
            raise ConfigurationError(f"Unknown setup {self.setup!r}") from exc
        self.betas = tuple(float(b) for b in self.betas)

        if self.encoder not in ENCODER_SPECS:
            raise ConfigurationError(
                f"Unknown encoder {self.encoder!r}, expected one of {sorted(ENCODER_SPECS)}"
            )
        if self.lr_final > self.lr_initial:
            raise ConfigurationError(
                f"lr_final {self.lr_final} exceeds lr_initial {self.lr_initial}"
            )
        if self.lr_final < 0:
            raise ConfigurationError("learning rates must be non-negative")
        if self.precision not in ("full", "reduced"):
            raise ConfigurationError(
                f"precision must be 'full' or 'reduced', got {self.precision!r}"
            )
        if self.slerp_mode not in ("replace", "append"):
            raise ConfigurationError(
                f"slerp_mode must be 'replace' or 'append', got {self.slerp_mode!r}"
            )
        if not 0.0 <= self.slerp_probability <= 1.0:
            raise ConfigurationError(
                f"slerp_probability must be in [0, 1], got {self.slerp_probability}"
            )
        if self.epochs < 1 or self.decay_epochs < 1 or self.validate_every < 1:
            raise ConfigurationError("epochs, decay_epochs and validate_every must be >= 1")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.batch_size < 2 and any(getattr(self.loss_weights, t) > 0 for t in PAIRWISE_TERMS):
            raise ConfigurationError("pairwise loss terms need batch_size >= 2")
        if self.setup is Setup.LINEAR_PROBE and self.adapter.strategy is not Strategy.LINEAR_PROBE:
            raise ConfigurationError(
                "the linear_probe setup trains the head only; set adapter.strategy: linear_probe"
            )

    @property
    def normalize(self) -> bool:
        return self.setup in NORMALIZED_SETUPS

    @property
    def slerp(self) -> bool:
        return self.setup is Setup.LN_NORM_UNAL_SLERP

    def to_dict(self) -> dict:
        data = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if hasattr(value, "to_dict"):
                value = value.to_dict()
            elif isinstance(value, Enum):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            data[f.name] = value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        data = dict(data or {})
        _reject_unknown(cls, data, "config")
        nested = {
            "loss_weights": lambda d: _build(LossWeights, d, "loss_weights"),
            "adapter": lambda d: _build(AdapterSpec, d, "adapter"),
            "augmentation": lambda d: _build(AugmentationConfig, d, "augmentation"),
            "data": DataConfig.from_dict,
        }
        for key, builder in nested.items():
            if key in data:
                data[key] = builder(data[key] or {})
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(f"invalid config: {exc}") from exc

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))
        return path


def available_presets() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))


def load_config(name_or_path: str | Path, overrides: Sequence[str] = ()) -> TrainConfig:
    """Load a preset by name or a YAML file by path, then apply key=value overrides"""
    path = Path(name_or_path)
    if not path.is_file():
        path = PRESET_DIR / f"{name_or_path}.yaml"
        if not path.is_file():
            raise ConfigurationError(
                f"No config file or preset named {name_or_path!r}; "
                f"presets: {', '.join(available_presets())}"
            )

    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: invalid YAML ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    raw.setdefault("name", path.stem)

    data = TrainConfig.from_dict(raw).to_dict()
    for override in overrides:
        apply_override(data, override)

    config = TrainConfig.from_dict(data)
    logger.debug("Loaded config %s (%s)", config.name, config.config_hash()[:12])
    return config


def apply_override(data: dict, override: str) -> None:
    """Set dotted.key=value in place; the key must already exist"""
    key, sep, raw_value = override.partition("=")
    if not sep or not key.strip():
        raise ConfigurationError(f"override must look like key=value, got {override!r}")

    parts = key.strip().split(".")
    node = data
    for depth, part in enumerate(parts[:-1]):
        child = node.get(part) if isinstance(node, dict) else None
        if not isinstance(child, dict):
            section = ".".join(parts[: depth + 1])
            raise ConfigurationError(f"override {key!r}: {section} is not a section")
        node = child

    leaf = parts[-1]
    if leaf not in node:
        raise ConfigurationError(f"override {key!r}: no such config key")
    try:
        node[leaf] = yaml.safe_load(raw_value)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"override {key!r}: cannot parse value {raw_value!r}") from exc


def _build(cls, data: Any, where: str):
    if isinstance(data, cls):
        return data
    if not isinstance(data, dict):
        raise ConfigurationError(f"{where} must be a mapping")
    _reject_unknown(cls, data, where)
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def _reject_unknown(cls, data: dict, where: str) -> None:
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"{where}: unknown keys {', '.join(unknown)}")
