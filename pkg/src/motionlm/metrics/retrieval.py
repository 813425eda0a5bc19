"""Cross-modal retrieval, diversity, and L1 deviation metrics."""
from __future__ import annotations

import numpy as np


def retrieval_metrics(motion_emb: np.ndarray, text_emb: np.ndarray,
                      ks=(1, 2, 3)) -> dict:
    """Within-batch retrieval: for caption i, rank all motions by
    Euclidean distance (ties broken by index); hit@k when motion i is
    among the k closest. mm_dist is the mean matched-pair distance."""
    motion_emb = np.asarray(motion_emb, dtype=np.float64)
    text_emb = np.asarray(text_emb, dtype=np.float64)
    if motion_emb.shape != text_emb.shape or motion_emb.ndim != 2:
        raise ValueError(f"need equal [B, d] embeddings, got "
                         f"{motion_emb.shape}/{text_emb.shape}")
    b = motion_emb.shape[0]
    ks = tuple(int(k) for k in ks)
    if b < max(ks):
        raise ValueError(f"batch size {b} smaller than max k {max(ks)}")
    d2 = ((text_emb[:, None, :] - motion_emb[None, :, :]) ** 2).sum(axis=2)
    order = np.argsort(d2, axis=1, kind="stable")     # stable sort = index ties
    ranks = np.empty_like(order)
    rows = np.arange(b)[:, None]
    ranks[rows, order] = np.arange(b)[None, :]
    self_rank = ranks[np.arange(b), np.arange(b)]
    out = {f"r_precision_top{k}": float((self_rank < k).mean()) for k in ks}
    out["mm_dist"] = float(np.sqrt(d2[np.arange(b), np.arange(b)]).mean())
    return out


def diversity(embeddings: np.ndarray, sample_n: int = 300, seed: int = 0,
              mode: str = "two-draw") -> float:
    """Mean L2 distance between two disjoint seeded draws (default) or
    over seeded sample pairs from a single pool."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[0] < 2:
        raise ValueError("need at least two embeddings")
    n = embeddings.shape[0]
    rng = np.random.default_rng([seed, 1111])
    if mode == "two-draw":
        take = min(sample_n, n // 2)
        perm = rng.permutation(n)
        a = embeddings[perm[:take]]
        b = embeddings[perm[take:2 * take]]
        return float(np.linalg.norm(a - b, axis=1).mean())
    if mode == "pairwise":
        take = min(sample_n, n)
        idx = rng.permutation(n)[:take]
        sub = embeddings[idx]
        d2 = ((sub[:, None, :] - sub[None, :, :]) ** 2).sum(axis=2)
        upper = d2[np.triu_indices(take, k=1)]
        return float(np.sqrt(upper).mean())
    raise ValueError(f"unknown diversity mode {mode!r}")


def l1div(embeddings: np.ndarray) -> float:
    """Mean L1 norm of deviation from the sample mean."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[0] < 1:
        raise ValueError("need [N, d] embeddings")
    dev = embeddings - embeddings.mean(axis=0)
    return float(np.abs(dev).sum(axis=1).mean())
