"""Rigid canonicalization of motion clips.

Places the global joint-height minimum on the y=0 plane, agent 0's
frame-0 root on the xz origin, and agent 0's initial facing direction
on +z. One rigid transform (heading rotation about y + translation) is
applied to every agent and frame, so inter-agent geometry is preserved.

Facing = horizontal component of cross(root->left_hip, root->right_hip)
at frame 0. A degenerate (near-vertical or zero) hip cross product falls
back to the identity rotation with a warning.
"""
from __future__ import annotations

import warnings

import numpy as np

from .clips import MotionClip
from .skeleton import SkeletonSpec, DESK_SKELETON

_DEGENERATE_EPS = 1e-8


def _heading_rotation(facing_xz: np.ndarray) -> np.ndarray:
    """Rotation about y mapping the horizontal facing vector onto +z."""
    fx, fz = facing_xz
    theta = -np.arctan2(fx, fz)
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def canonicalize(clip: MotionClip, skeleton: SkeletonSpec = DESK_SKELETON) -> MotionClip:
    pos = clip.positions.astype(np.float64)
    root = pos[0, 0, 0]
    lhip = pos[0, 0, skeleton.left_hip]
    rhip = pos[0, 0, skeleton.right_hip]
    facing = np.cross(lhip - root, rhip - root)
    fx, fz = facing[0], facing[2]
    if fx * fx + fz * fz < _DEGENERATE_EPS ** 2:
        warnings.warn("degenerate facing (hip cross product has no horizontal part); "
                      "keeping identity rotation", RuntimeWarning)
        rot = np.eye(3)
    else:
        rot = _heading_rotation(np.array([fx, fz]))
    rotated = pos @ rot.T
    new_root = rot @ root
    offset = np.array([new_root[0], rotated[..., 1].min(), new_root[2]])
    return MotionClip(positions=rotated - offset, fps=clip.fps)
