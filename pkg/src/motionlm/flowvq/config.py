"""Tokenizer configuration: architecture switches and training knobs."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

DILATIONS = ("none", "constant", "growth")
NORM_ACTS = ("relu_nonorm", "silu_groupnorm", "silu_layernorm")
PATCHIFY_MODES = ("rearrange", "haar")


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass
class FlowVqConfig:
    channels: int = 64                 # conv width (512 at full scale)
    layers: int = 3                    # hierarchy depth
    blocks_per_layer: int = 3
    downsample_total: int = 4          # total temporal factor incl. patchify
    downsample_after_blocks: bool = True
    causal: bool = False
    dilation: str = "none"
    patchify_mode: str = "rearrange"
    patchify_size: int = 1
    norm_act: str = "relu_nonorm"
    max_train_frames: int = 256

    quantizer: str = "fsq"             # fsq | vq | lfq | rvq
    fsq_levels: tuple = (7, 5, 5, 5, 5)
    code_dim: int = 5                  # latent channels at the quantizer
    codebook_size: int = 512           # vq / rvq per-stage size
    rvq_depth: int = 3
    ema_decay: float = 0.99
    reseed_after: int = 10
    commit_beta: float = 0.0           # optional commitment term

    standardization: str = "avg-std"

    # flow-matching refinement decoder
    flow_blocks: int = 8
    flow_heads: int = 4
    flow_head_dim: int = 16            # 128 at full scale
    flow_ffn_dim: int = 64             # 1024 at full scale

    # noise schedule
    train_timesteps: int = 1000
    inference_steps: int = 28
    shift: float = 3.0
    time_sampling: str = "warped-uniform"   # or grid-uniform

    # training
    batch_size: int = 8
    stage1_steps: int = 1500
    stage2_steps: int = 1500
    lr: float = 2e-4
    stage2_lr: float = None                  # defaults to lr
    stage2_batch: int = None                 # defaults to batch_size
    beta1: float = 0.9
    beta2: float = 0.99
    weight_decay: float = 0.0

    def __post_init__(self):
        if not _is_pow2(self.downsample_total):
            raise ValueError(f"downsample_total must be a power of 2, got {self.downsample_total}")
        if not _is_pow2(self.patchify_size) or self.patchify_size > self.downsample_total:
            raise ValueError("patchify_size must be a power of 2 dividing downsample_total")
        if self.blocks_per_layer < 1:
            raise ValueError("blocks_per_layer must be >= 1")
        if self.dilation not in DILATIONS:
            raise ValueError(f"dilation must be one of {DILATIONS}")
        if self.norm_act not in NORM_ACTS:
            raise ValueError(f"norm_act must be one of {NORM_ACTS}")
        if self.patchify_mode not in PATCHIFY_MODES:
            raise ValueError(f"patchify_mode must be one of {PATCHIFY_MODES}")
        if self.quantizer == "fsq":
            self.fsq_levels = tuple(int(v) for v in self.fsq_levels)
            self.code_dim = len(self.fsq_levels)
        n_down = self.downsample_total // self.patchify_size
        if n_down.bit_length() - 1 > self.layers:
            raise ValueError(
                f"{n_down}x conv downsampling needs more stride-2 stages than "
                f"{self.layers} layers provide")

    @property
    def conv_downsample_stages(self) -> int:
        return (self.downsample_total // self.patchify_size).bit_length() - 1

    @property
    def flow_width(self) -> int:
        return self.flow_heads * self.flow_head_dim

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fsq_levels"] = list(self.fsq_levels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FlowVqConfig":
        d = dict(d)
        if "fsq_levels" in d:
            d["fsq_levels"] = tuple(d["fsq_levels"])
        return cls(**d)
