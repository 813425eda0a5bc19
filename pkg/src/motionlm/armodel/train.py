"""Next-token training over encoded motion messages.

Targets are the input shifted left; the stage's loss mask rides along
as ignore-index so unscored positions contribute exactly nothing to
loss or gradients. Batches pad with [PAD], which is never scored.
"""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import AdamWState, adamw_step
from ..vocab import Vocabulary, encode_message
from .config import ArConfig, TrainingStage
from .net import ArModel

IGNORE = -1


class ArDivergenceError(RuntimeError):
    """Training loss became non-finite."""


def encode_corpus(corpus, vocab: Vocabulary, mode: str):
    """Messages -> list of (ids, mask) pairs under the given mask mode."""
    return [encode_message(msg, vocab, mode=mode) for msg in corpus]


def _batch(encoded, idx, pad_id):
    rows = [encoded[i] for i in idx]
    tmax = max(len(ids) for ids, _ in rows)
    ids = np.full((len(rows), tmax), pad_id, dtype=np.int64)
    tgt = np.full((len(rows), tmax), IGNORE, dtype=np.int64)
    for r, (seq, mask) in enumerate(rows):
        ids[r, :len(seq)] = seq
        scored = np.where(mask, seq, IGNORE)
        tgt[r, :len(seq)] = scored
    return ids, tgt


def step_loss(model: ArModel, ids: np.ndarray, targets: np.ndarray):
    """Cross-entropy of next-token prediction at scored target positions."""
    logits = model.forward(ids)
    b, t, v = logits.shape
    flat = ad.reshape(ad.narrow(logits, 1, 0, t - 1), ((t - 1) * b, v))
    return ad.cross_entropy(flat, targets[:, 1:].reshape(-1), ignore_index=IGNORE)


def eval_loss(model: ArModel, encoded, pad_id: int, batch_size: int = 8) -> float:
    """Mean masked next-token loss over a fixed encoded corpus."""
    total, count = 0.0, 0
    for lo in range(0, len(encoded), batch_size):
        idx = range(lo, min(lo + batch_size, len(encoded)))
        ids, tgt = _batch(encoded, idx, pad_id)
        n = int((tgt[:, 1:] != IGNORE).sum())
        if n == 0:
            continue
        loss = step_loss(model, ids, tgt)
        total += float(loss.data) * n
        count += n
    return total / max(count, 1)


def train_stage(corpus, stage: TrainingStage, vocab: Vocabulary,
                config: ArConfig, seed: int, model: ArModel = None,
                steps: int = None, val_corpus=None, val_every: int = 0,
                log_every: int = 0):
    """Run one training stage; returns (model, metrics dict).

    Generalist stages build a fresh model unless one is passed;
    the specialist stage requires the generalist checkpoint.
    """
    if not corpus:
        raise ValueError("empty corpus")
    if stage.task_filter:
        corpus = [m for m in corpus if m.task in stage.task_filter]
        if not corpus:
            raise ValueError(f"task filter {stage.task_filter} matched nothing")
    if stage.stage == "specialist-sft":
        if model is None:
            raise ValueError("specialist stage needs the generalist model")
        model = model.clone()
        lr = config.specialist_lr
        default_steps = config.specialist_steps
    else:
        if model is None:
            model = ArModel(vocab.size, config, seed=seed)
        lr = config.lr
        default_steps = (config.pretrain_steps if stage.stage == "generalist-pretrain"
                         else config.sft_steps)
    steps = steps if steps is not None else default_steps
    encoded = encode_corpus(corpus, vocab, stage.mask_mode)
    val_encoded = None
    if val_corpus:
        val_msgs = [m for m in val_corpus
                    if not stage.task_filter or m.task in stage.task_filter]
        val_encoded = encode_corpus(val_msgs, vocab, stage.mask_mode)
    pad_id = vocab.special["[PAD]"]
    rng = np.random.default_rng([seed, 707])
    opt = AdamWState()
    params = model.params()
    trace = {"train": [], "val": []}
    for step in range(steps):
        idx = rng.integers(0, len(encoded), size=config.batch_size)
        ids, tgt = _batch(encoded, idx, pad_id)
        loss = step_loss(model, ids, tgt)
        value = float(loss.data)
        if not np.isfinite(value):
            raise ArDivergenceError(f"{stage.stage} loss became {value} at step {step}")
        trace["train"].append(value)
        for p in params.values():
            p.zero_grad()
        ad.backward(loss)
        adamw_step(params, opt, lr=lr, beta1=config.beta1, beta2=config.beta2,
                   weight_decay=config.weight_decay)
        if val_encoded and val_every and (step + 1) % val_every == 0:
            trace["val"].append(eval_loss(model, val_encoded, pad_id))
        if log_every and step % log_every == 0:
            print(f"[{stage.stage}] step {step} loss {value:.4f}")
    if val_encoded:
        trace["val"].append(eval_loss(model, val_encoded, pad_id))
    return model, trace
