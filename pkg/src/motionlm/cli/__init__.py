from .main import main
from .runconfig import RunConfig, load_run_config, ConfigError
from .pipeline import run_pipeline, StageFailure
from .ablate import run_ablation, AXES

__all__ = ["main", "RunConfig", "load_run_config", "ConfigError",
           "run_pipeline", "StageFailure", "run_ablation", "AXES"]
