"""Reconstruction error suite: MPJPE, PA-MPJPE, ADE, FDE.

PA alignment solves per-frame (and per-agent) orthogonal Procrustes:
rotation + translation by default, with reflection corrected to a
proper rotation; scale and translation-only variants are switchable.
"""
from __future__ import annotations

import numpy as np

from ..data import MotionClip
from ..data.skeleton import SkeletonSpec, DESK_SKELETON


def procrustes_align(pred: np.ndarray, gt: np.ndarray, mode: str = "rigid") -> np.ndarray:
    """Align one pose [J, 3] onto gt; returns transformed pred.

    modes: 'rigid' (rotation+translation), 'similarity' (adds scale),
    'translation' (centroid shift only).
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    mu_p, mu_g = pred.mean(axis=0), gt.mean(axis=0)
    pc, gc = pred - mu_p, gt - mu_g
    if mode == "translation":
        return pc + mu_g
    if mode not in ("rigid", "similarity"):
        raise ValueError(f"unknown alignment mode {mode!r}")
    h = pc.T @ gc
    u, s, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    corr = np.diag([1.0, 1.0, d])
    rot = vt.T @ corr @ u.T
    scale = 1.0
    if mode == "similarity":
        denom = (pc ** 2).sum()
        scale = (s * np.diag(corr)).sum() / denom if denom > 0 else 1.0
    return scale * pc @ rot.T + mu_g


def _per_joint_errors(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    return np.linalg.norm(pred - gt, axis=-1)


def recon_metrics(pred: MotionClip, gt: MotionClip,
                  skeleton: SkeletonSpec = DESK_SKELETON,
                  pa_mode: str = "rigid") -> dict:
    if pred.positions.shape != gt.positions.shape:
        raise ValueError(f"shape mismatch {pred.positions.shape} vs "
                         f"{gt.positions.shape}")
    p = pred.positions.reshape(-1, pred.joints, 3)     # frames*agents poses
    g = gt.positions.reshape(-1, gt.joints, 3)
    hands = list(skeleton.hand_joints)
    body = list(skeleton.body_joints())
    err = _per_joint_errors(p, g)
    aligned = np.stack([procrustes_align(p[i], g[i], pa_mode) for i in range(len(p))])
    pa_err = _per_joint_errors(aligned, g)

    def split(e):
        out = {"all": float(e.mean())}
        out["body"] = float(e[:, body].mean()) if body else float("nan")
        out["hand"] = float(e[:, hands].mean()) if hands else float("nan")
        return out

    root_pred = pred.positions[:, :, 0, :]
    root_gt = gt.positions[:, :, 0, :]
    root_err = np.linalg.norm(root_pred - root_gt, axis=-1)
    m, pa = split(err), split(pa_err)
    return {
        "mpjpe_all": m["all"], "mpjpe_body": m["body"], "mpjpe_hand": m["hand"],
        "pa_mpjpe_all": pa["all"], "pa_mpjpe_body": pa["body"],
        "pa_mpjpe_hand": pa["hand"],
        "ade": float(root_err.mean()),
        "fde": float(root_err[-1].mean()),
    }
