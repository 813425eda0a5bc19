from .config import FlowVqConfig
from .schedule import NoiseSchedule, make_noisy, velocity_target
from .model import FlowVqModel, EncodeResult
from .train import train_stage1, train_stage2, DivergenceError

__all__ = [
    "FlowVqConfig", "NoiseSchedule", "make_noisy", "velocity_target",
    "FlowVqModel", "EncodeResult", "train_stage1", "train_stage2",
    "DivergenceError",
]
