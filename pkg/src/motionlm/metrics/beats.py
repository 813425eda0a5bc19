"""Beat extraction and music/motion rhythm metrics."""
from __future__ import annotations

import numpy as np
from scipy.signal import find_peaks

from ..data import MotionClip

MERGE_WINDOW = 1.0          # beats within one second count as one
DEFAULT_SIGMA = 0.1         # BAS kernel width (seconds)
DEFAULT_HIT_TOL = 0.1       # beat-hit alignment window (seconds)


def merge_beats(onsets, window: float = MERGE_WINDOW):
    """Collapse onsets closer than `window` to the earliest of each run;
    window 0 keeps everything."""
    out = []
    for t in sorted(float(x) for x in onsets):
        if not out or window <= 0 or t - out[-1] >= window:
            out.append(t)
    return out


def extract_motion_beats(clip: MotionClip, rel_prominence: float = 0.05,
                         merge_window: float = MERGE_WINDOW):
    """Local maxima of the mean joint-speed curve, merged to one beat per
    window. Returns onset times in seconds (possibly empty)."""
    if clip.frames < 3:
        raise ValueError("need at least 3 frames")
    vel = np.diff(clip.positions, axis=0)
    speed = np.linalg.norm(vel, axis=-1).mean(axis=(1, 2)) * clip.fps
    spread = speed.max() - speed.min()
    if spread <= 1e-12:
        return []
    peaks, _ = find_peaks(speed, prominence=rel_prominence * spread)
    times = (peaks + 0.5) / clip.fps
    return merge_beats(times, merge_window)


def bas(motion_beats, music_beats, sigma: float = DEFAULT_SIGMA) -> float:
    """Mean Gaussian-kernel proximity of each music beat to its nearest
    motion beat; 0 when no motion beats exist."""
    music = np.asarray(list(music_beats), dtype=np.float64)
    if music.size == 0:
        raise ValueError("music beats must be non-empty")
    motion = np.asarray(list(motion_beats), dtype=np.float64)
    if motion.size == 0:
        return 0.0
    d2 = (music[:, None] - motion[None, :]) ** 2
    nearest = d2.min(axis=1)
    return float(np.exp(-nearest / (2.0 * sigma ** 2)).mean())


def _match_count(music, kinematic, tol: float) -> int:
    """Max one-to-one matches within tol: time-ordered earliest-compatible
    greedy, optimal for equal-width windows."""
    used = np.zeros(len(music), dtype=bool)
    count = 0
    j = 0
    for t in kinematic:
        for j in range(len(music)):
            if not used[j] and abs(music[j] - t) <= tol:
                used[j] = True
                count += 1
                break
    return count


def beat_f1(music_beats, kinematic_beats, tolerance: float = DEFAULT_HIT_TOL) -> dict:
    """Beat coverage (B_k/B_m), hit rate (B_a/B_k), and their F1."""
    music = sorted(float(t) for t in music_beats)
    kin = sorted(float(t) for t in kinematic_beats)
    if not music:
        raise ValueError("music beats must be non-empty")
    bcs = len(kin) / len(music)
    if not kin:
        return {"bcs": 0.0, "bhs": 0.0, "f1": 0.0}
    aligned = _match_count(music, kin, tolerance)
    bhs = aligned / len(kin)
    f1 = 2.0 * bcs * bhs / (bcs + bhs) if bcs + bhs > 0 else 0.0
    return {"bcs": float(bcs), "bhs": float(bhs), "f1": float(f1)}
