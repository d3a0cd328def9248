"""Learning-rate schedule | Cosine decay to a floor, constant afterwards"""

import math

from ..errors import ConfigurationError


def lr_at(step: int, total_steps: int, cfg) -> float:
    """lr_final + (lr_initial - lr_final) * (1 + cos(pi * step / total)) / 2.

    Steps past total_steps stay at lr_final. cfg needs lr_initial and lr_final.
    """
    if total_steps <= 0:
        raise ConfigurationError(f"total_steps must be positive, got {total_steps}")
    if step < 0:
        raise ConfigurationError(f"step must be non-negative, got {step}")

    high, low = cfg.lr_initial, cfg.lr_final
    if step == 0:
        return high
    if step >= total_steps:
        return low

    value = low + 0.5 * (high - low) * (1.0 + math.cos(math.pi * step / total_steps))
    return min(high, max(low, value))


def set_lr(optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group["lr"] = lr
