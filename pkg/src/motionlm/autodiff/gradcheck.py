"""Finite-difference verification of analytic gradients."""
from __future__ import annotations

import numpy as np

from .core import backward


def grad_check(builder, epsilon: float = 1e-5, leaf: str = None) -> float:
    """Max relative error between analytic and central-difference grads.

    `builder(values)` constructs the graph and returns
    (scalar loss DiffArray, {name: leaf DiffArray}). Called with None it
    must invent its own (deterministic) leaf data; called with a
    {name: ndarray} dict it must build the same graph from those arrays.
    `leaf` restricts probing to one named leaf; default checks all.

    Error per coordinate is |a - n| / max(1, |a|, |n|).
    """
    if not (1e-7 <= epsilon <= 1e-3):
        raise ValueError(f"epsilon out of range [1e-7, 1e-3]: {epsilon}")
    loss, leaves = builder(None)
    if loss.data.ndim != 0 and loss.data.size != 1:
        raise ValueError("builder must return a scalar loss")
    for p in leaves.values():
        p.zero_grad()
    backward(loss)
    analytic = {k: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for k, p in leaves.items()}
    base = {k: p.data.copy() for k, p in leaves.items()}

    def loss_at(values) -> float:
        l2, _ = builder(values)
        return float(l2.data)

    names = [leaf] if leaf is not None else list(leaves)
    worst = 0.0
    for name in names:
        flat = base[name].reshape(-1)
        ana = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            fp = loss_at(base)
            flat[i] = orig - epsilon
            fm = loss_at(base)
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * epsilon)
            err = abs(ana[i] - numeric) / max(1.0, abs(ana[i]), abs(numeric))
            worst = max(worst, err)
    return worst
