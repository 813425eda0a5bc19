"""Self-describing metric results."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class MetricReport:
    values: dict = field(default_factory=dict)       # name -> scalar
    config: dict = field(default_factory=dict)       # formula variants, sigmas
    seed: int = 0

    def add(self, name: str, value, **config) -> None:
        self.values[name] = float(value)
        if config:
            self.config[name] = config

    def merge(self, prefix: str, values: dict, **config) -> None:
        for k, v in values.items():
            self.add(f"{prefix}.{k}" if prefix else k, v, **config)

    def to_json(self) -> str:
        payload = {"values": self.values, "config": self.config, "seed": self.seed}
        return json.dumps(payload, indent=1, sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MetricReport":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(values=d["values"], config=d.get("config", {}),
                   seed=d.get("seed", 0))
