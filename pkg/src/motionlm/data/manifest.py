"""Dataset manifest: a JSON array of entry records with split tags."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import List, Optional

from .clips import read_clip

SPLITS = ("train", "val", "test")


@dataclass
class ManifestEntry:
    clip: str
    fps: float
    agents: int
    split: str = "train"
    caption: Optional[str] = None
    beats: Optional[str] = None          # path to beat-track JSON
    tasks: List[str] = field(default_factory=list)
    family: Optional[str] = None
    genre: Optional[str] = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")


def save_manifest(entries: List[ManifestEntry], path) -> None:
    records = []
    for e in entries:
        rec = {k: v for k, v in asdict(e).items() if v not in (None, [])}
        records.append(rec)
    Path(path).write_text(json.dumps(records, indent=1, sort_keys=True), encoding="utf-8")


def load_manifest(path, check_files: bool = True) -> List[ManifestEntry]:
    base = Path(path).parent
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(records, list):
        raise ValueError(f"{path}: manifest must be a JSON array")
    entries = [ManifestEntry(**rec) for rec in records]
    if check_files:
        for e in entries:
            read_clip(base / e.clip)
            if e.beats is not None:
                read_beats(base / e.beats)
    return entries


def write_beats(onsets, path) -> None:
    onsets = sorted(float(t) for t in onsets)
    Path(path).write_text(json.dumps(onsets), encoding="utf-8")


def read_beats(path):
    onsets = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(onsets, list):
        raise ValueError(f"{path}: beat track must be a JSON array")
    out = [float(t) for t in onsets]
    if any(b < a for a, b in zip(out, out[1:])):
        raise ValueError(f"{path}: beat onsets must ascend")
    return out
