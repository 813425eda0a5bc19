"""AdamW with decoupled weight decay and bias-corrected moments."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

import numpy as np


@dataclass
class AdamWState:
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adamw_step(params: dict, state: AdamWState, lr: float,
               beta1: float = 0.9, beta2: float = 0.99,
               eps: float = 1e-8, weight_decay: float = 0.0) -> None:
    """One update over {name: DiffArray} using each array's .grad in place.

    Parameters with no accumulated gradient still receive weight decay.
    """
    if not (lr > 0):
        raise ValueError(f"lr must be positive, got {lr}")
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, p in params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        update = (m / c1) / (np.sqrt(v / c2) + eps)
        if weight_decay:
            p.data *= 1.0 - lr * weight_decay
        p.data -= lr * update
