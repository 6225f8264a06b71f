"""SGD with momentum and weight decay, plus the poly learning-rate schedule."""

from __future__ import annotations

import numpy as np

from .autograd import Parameter
from .errors import ContractError, NumericsError


class OptimState:
    """Per-parameter momentum buffers and the optimizer hyperparameters."""

    def __init__(self, params: list[Parameter], momentum: float = 0.9,
                 weight_decay: float = 0.0001):
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.buffers: dict[str, np.ndarray] = {
            p.name: np.zeros_like(p.data) for p in params}


def sgd_step(params: list[Parameter], state: OptimState, lr: float):
    """buffer <- m*buffer + grad + wd*value;  value <- value - lr*buffer.

    Gradients are left untouched; the caller zeroes them.
    """
    for p in params:
        if not np.all(np.isfinite(p.grad)):
            raise NumericsError(f"non-finite gradient in parameter {p.name}")
        buf = state.buffers[p.name]
        buf *= state.momentum
        buf += p.grad
        if state.weight_decay:
            buf += state.weight_decay * p.data
        p.data -= np.asarray(lr * buf, dtype=p.data.dtype)


def zero_grads(params: list[Parameter]):
    for p in params:
        p.zero_grad()


def poly_lr(base: float, epoch: int, max_epoch: int, power: float = 0.9) -> float:
    """base * (1 - epoch/max_epoch)^power."""
    if max_epoch <= 0:
        raise ContractError("max_epoch must be positive")
    if not 0 <= epoch <= max_epoch:
        raise ContractError(f"epoch {epoch} outside [0, {max_epoch}]")
    if power <= 0:
        raise ContractError("power must be positive")
    return base * (1.0 - epoch / max_epoch) ** power
