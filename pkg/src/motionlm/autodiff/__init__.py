from .core import (
    DiffArray, leaf, constant, backward, toposort,
    add, sub, mul, neg, matmul, transpose, reshape, concat, narrow,
    relu, silu, softbound, layernorm, groupnorm, softmax, conv1d, embedding, rope,
    attention, mean, total, smooth_l1_loss, mse_loss, cross_entropy,
    straight_through, scale,
)
from .optim import AdamWState, adamw_step
from .gradcheck import grad_check
from .checkpoint import save_params, load_params, params_digest

__all__ = [
    "DiffArray", "leaf", "constant", "backward", "toposort",
    "add", "sub", "mul", "neg", "matmul", "transpose", "reshape", "concat",
    "narrow", "relu", "silu", "softbound", "layernorm", "groupnorm", "softmax", "conv1d",
    "embedding", "rope", "attention", "mean", "total", "smooth_l1_loss",
    "mse_loss", "cross_entropy", "straight_through", "scale",
    "AdamWState", "adamw_step", "grad_check",
    "save_params", "load_params", "params_digest",
]
