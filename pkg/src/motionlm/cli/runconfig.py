"""Run configuration: strict TOML with dataclass-backed sections."""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field, asdict, fields as dc_fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..flowvq import FlowVqConfig
from ..armodel import ArConfig


class ConfigError(ValueError):
    """Unknown keys or invalid values in a run config."""


@dataclass
class DataConfig:
    clips: int = 120
    frames: int = 64
    joints: int = 8
    fps: float = 30.0
    families: list = field(default_factory=lambda: [
        "wave", "walk", "spin", "bow", "still", "dance(2)"])
    multi_agent_fraction: float = 0.2
    max_agents: int = 2
    val_fraction: float = 0.1
    test_fraction: float = 0.1


@dataclass
class EvalConfig:
    embedder: str = "oracle"
    embed_dim: int = 16
    diversity_n: int = 300
    bas_sigma: float = 0.1
    beat_tolerance: float = 0.1
    retrieval_ks: list = field(default_factory=lambda: [1, 2, 3])
    generate_samples: int = 8
    flow_steps: int = 28
    temperature: float = 0.0
    max_new: int = 96


@dataclass
class PipelineConfig:
    specialist_task: str = "t2m"
    text_vocab: int = 384
    p_optional: float = 0.5


@dataclass
class RunConfig:
    seed: int = 0
    out: str = "runs/desk"
    data: DataConfig = field(default_factory=DataConfig)
    tokenizer: FlowVqConfig = field(default_factory=FlowVqConfig)
    ar: ArConfig = field(default_factory=ArConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tokenizer"] = self.tokenizer.to_dict()
        return d

    def echo(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True),
                              encoding="utf-8")


_SECTIONS = {
    "data": DataConfig,
    "tokenizer": FlowVqConfig,
    "ar": ArConfig,
    "eval": EvalConfig,
    "pipeline": PipelineConfig,
}


def _build_section(cls, payload: dict, where: str):
    allowed = {f.name for f in dc_fields(cls)}
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(unknown)}")
    try:
        return cls(**payload)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{where}] config: {exc}") from exc


def load_run_config(path=None, overrides: dict = None) -> RunConfig:
    payload = {}
    if path is not None:
        try:
            payload = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    top_known = {"seed", "out"} | set(_SECTIONS)
    unknown = set(payload) - top_known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        section = payload.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"[{name}] must be a table")
        if name == "tokenizer" and "fsq_levels" in section:
            section = dict(section)
            section["fsq_levels"] = tuple(section["fsq_levels"])
        kwargs[name] = _build_section(cls, section, name)
    cfg = RunConfig(seed=int(payload.get("seed", 0)),
                    out=str(payload.get("out", "runs/desk")), **kwargs)
    for key, value in (overrides or {}).items():
        setattr(cfg, key, value)
    return cfg
