"""Two-stage tokenizer training.

Stage 1 fits the conv autoencoder with straight-through quantization on
smooth-L1 reconstruction (optional commitment term). Stage 2 freezes
everything from stage 1 and regresses the flow decoder's velocity
prediction onto v = x - x_t with MSE. Batches are random crops padded
with zeros to the batch maximum; padded frames are masked out of both
losses.
"""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import AdamWState, adamw_step, constant
from ..data import MotionClip, fit_stats, standardize
from ..quantizers import FsqQuantizer
from ..quantizers.fsq import fsq_bound  # noqa: F401  (bound applied in-graph)
from .config import FlowVqConfig
from .model import FlowVqModel
from .schedule import make_noisy, velocity_target


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


def _crop(rng, arr: np.ndarray, max_frames: int, multiple: int) -> np.ndarray:
    """Random temporal crop to at most max_frames, length a multiple."""
    t = arr.shape[-1]
    want = min(t, max_frames)
    want -= want % multiple
    want = max(want, multiple)
    if want >= t:
        start = 0
    else:
        start = int(rng.integers(0, t - want + 1))
    return arr[..., start:start + want]


def _batch_items(rng, items, batch_size):
    idx = rng.integers(0, len(items), size=batch_size)
    return [items[i] for i in idx]


def _pad_stack(arrs):
    """Zero-pad [C, T_i] arrays to the longest T; returns (batch, mask)."""
    tmax = max(a.shape[-1] for a in arrs)
    batch = np.zeros((len(arrs), arrs[0].shape[0], tmax))
    mask = np.zeros((len(arrs), 1, tmax))
    for i, a in enumerate(arrs):
        batch[i, :, :a.shape[-1]] = a
        mask[i, :, :a.shape[-1]] = 1.0
    return batch, mask


def _dataset_items(dataset, stats):
    """Standardized per-agent channel arrays [C, T]."""
    items = []
    for clip in dataset:
        std = standardize(clip, stats)
        for a in range(std.agents):
            items.append(std.positions[:, a].reshape(std.frames, -1).T.copy())
    return items


def _graph_quantize(model: FlowVqModel, latents):
    """Straight-through quantization inside the graph.

    FSQ differentiates its smooth bounding map and passes gradients
    through the grid snap only; the learned quantizers pass gradients
    straight through the whole selection.
    """
    b, d, t = latents.shape
    flat = ad.transpose(latents, (0, 2, 1))
    flat = ad.reshape(flat, (b * t, d))
    if isinstance(model.quantizer, FsqQuantizer):
        bounded = ad.softbound(flat)
        codes, values = model.quantizer.quantize(flat.data)
        node = ad.straight_through(bounded, lambda _: values)
    else:
        codes, values = model.quantizer.quantize(flat.data)
        node = ad.straight_through(flat, lambda _: values)
    back = ad.reshape(node, (b, t, d))
    return codes, flat, ad.transpose(back, (0, 2, 1))


def train_stage1(dataset, config: FlowVqConfig, seed: int,
                 steps: int = None, log_every: int = 0):
    """Fit the stage-1 autoencoder; returns (FlowVqModel, loss trace)."""
    if not dataset:
        raise ValueError("empty dataset")
    steps = steps or config.stage1_steps
    stats = fit_stats(dataset, config.standardization)
    motion_dim = dataset[0].joints * 3
    model = FlowVqModel(config, motion_dim, stats, seed=seed)
    items = _dataset_items(dataset, stats)
    rng = np.random.default_rng([seed, 404])
    opt = AdamWState()
    params = model.net.params()
    losses = []
    for step in range(steps):
        arrs = [_crop(rng, a, config.max_train_frames, config.downsample_total)
                for a in _batch_items(rng, items, config.batch_size)]
        batch, mask = _pad_stack(arrs)
        x = constant(batch)
        latents = model.net.encode(x)
        codes, flat_latents, values = _graph_quantize(model, latents)
        recon = model.net.decode(values)
        loss = ad.smooth_l1_loss(recon, batch, mask=np.broadcast_to(mask, batch.shape))
        if config.commit_beta > 0:
            target = model.quantizer.dequantize(codes)
            commit = ad.mse_loss(flat_latents, target)
            loss = ad.add(loss, ad.scale(commit, config.commit_beta))
        value = float(loss.data)
        if not np.isfinite(value):
            raise DivergenceError(f"stage-1 loss became {value} at step {step}")
        losses.append(value)
        for p in params.values():
            p.zero_grad()
        ad.backward(loss)
        adamw_step(params, opt, lr=config.lr, beta1=config.beta1,
                   beta2=config.beta2, weight_decay=config.weight_decay)
        model.quantizer.update(flat_latents.data, codes, rng)
        if log_every and step % log_every == 0:
            print(f"[stage1] step {step} loss {value:.5f}")
    return model, losses


def train_stage2(dataset, model: FlowVqModel, seed: int,
                 steps: int = None, log_every: int = 0):
    """Fit the flow decoder with stage-1 weights frozen; returns
    (model, loss trace). The stage-1 digest is asserted unchanged."""
    if not dataset:
        raise ValueError("empty dataset")
    config = model.config
    steps = steps or config.stage2_steps
    lr = config.stage2_lr or config.lr
    batch_size = config.stage2_batch or config.batch_size
    before = model.stage1_digest()
    flow = model.init_flow(seed=seed)
    items = _dataset_items(dataset, model.stats)
    rng = np.random.default_rng([seed, 505])
    opt = AdamWState()
    params = flow.params()
    losses = []
    for step in range(steps):
        arrs = [_crop(rng, a, config.max_train_frames, config.downsample_total)
                for a in _batch_items(rng, items, batch_size)]
        batch, mask = _pad_stack(arrs)              # [B, C, T]
        with np.errstate(all="ignore"):
            latents = model.net.encode(constant(batch)).data
        b, d, tz = latents.shape
        codes, values = model.quantizer.quantize(
            latents.transpose(0, 2, 1).reshape(b * tz, d))
        z = values.reshape(b, tz, d)
        x = batch.transpose(0, 2, 1)                # [B, T, C]
        t_raw = model.schedule.sample_train_times(rng, b, mode=config.time_sampling)
        eps = rng.normal(0.0, 1.0, size=x.shape)
        x_t = np.stack([make_noisy(x[i], t_raw[i], eps[i], model.schedule)
                        for i in range(b)])
        target = velocity_target(x, x_t)
        t_warped = model.schedule.warp(t_raw)
        pred = flow.forward(constant(x_t), constant(z), t_warped)
        frame_mask = np.broadcast_to(mask.transpose(0, 2, 1), x.shape)
        loss = ad.mse_loss(pred, target, mask=frame_mask)
        value = float(loss.data)
        if not np.isfinite(value):
            raise DivergenceError(f"stage-2 loss became {value} at step {step}")
        losses.append(value)
        for p in params.values():
            p.zero_grad()
        ad.backward(loss)
        adamw_step(params, opt, lr=lr, beta1=config.beta1,
                   beta2=config.beta2, weight_decay=config.weight_decay)
        if log_every and step % log_every == 0:
            print(f"[stage2] step {step} loss {value:.5f}")
    after = model.stage1_digest()
    if after != before:
        raise RuntimeError("stage-1 parameters changed during stage-2 training")
    return model, losses
