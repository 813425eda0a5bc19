from .config import ArConfig, TrainingStage
from .net import ArModel
from .train import train_stage, eval_loss, ArDivergenceError
from .generate import generate, GenerationError
from .corpus import build_corpus, CorpusSample, audio_stub_from_beats, audio_stub_from_motion

__all__ = [
    "ArConfig", "TrainingStage", "ArModel", "train_stage", "eval_loss",
    "ArDivergenceError", "generate", "GenerationError",
    "build_corpus", "CorpusSample", "audio_stub_from_beats",
    "audio_stub_from_motion",
]
