"""Autoregressive model and training-stage configuration."""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional, Tuple

STAGES = ("generalist-pretrain", "generalist-sft", "specialist-sft")


@dataclass
class ArConfig:
    layers: int = 4
    heads: int = 4
    width: int = 128
    ffn_width: int = 256
    context: int = 1024
    rope: bool = True

    # training knobs
    batch_size: int = 8
    lr: float = 1e-4
    specialist_lr: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.99
    weight_decay: float = 0.0
    pretrain_steps: int = 600
    sft_steps: int = 400
    specialist_steps: int = 300

    def __post_init__(self):
        if self.width % self.heads:
            raise ValueError(f"width {self.width} not divisible by heads {self.heads}")
        if (self.width // self.heads) % 2:
            raise ValueError("head dim must be even for rotary embedding")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ArConfig":
        return cls(**d)


@dataclass(frozen=True)
class TrainingStage:
    stage: str
    task_filter: Optional[Tuple[str, ...]] = None   # specialist only
    mask_mode: str = None

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        mode = "pretrain" if self.stage == "generalist-pretrain" else "sft"
        object.__setattr__(self, "mask_mode", self.mask_mode or mode)
        if self.stage == "specialist-sft":
            if not self.task_filter:
                raise ValueError("specialist stage needs a task filter")
        elif self.task_filter:
            raise ValueError("generalist stages train on all tasks")
