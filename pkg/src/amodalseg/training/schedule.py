"""Warmup-then-linear-decay learning rate schedule."""
from __future__ import annotations

from ..errors import ConfigurationError


def lr_at(step: int, warmup_steps: int, total_steps: int, peak_lr: float) -> float:
    """Linear 0 -> peak over warmup, then linear peak -> 0 at total_steps.

    Continuous at the warmup boundary; lr_at(warmup_steps) == peak_lr and
    lr_at(total_steps) == 0.
    """
    if not 0 <= step <= total_steps:
        raise ConfigurationError(f"step {step} outside [0, {total_steps}]")
    if warmup_steps >= total_steps:
        raise ConfigurationError("warmup_steps must be < total_steps")
    if peak_lr <= 0:
        raise ConfigurationError("peak_lr must be > 0")
    if step <= warmup_steps:
        if warmup_steps == 0:
            return peak_lr if step > 0 else 0.0
        return peak_lr * step / warmup_steps
    return peak_lr * (total_steps - step) / (total_steps - warmup_steps)
