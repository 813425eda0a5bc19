"""Ablation harness: train stage-1 cells along one config axis and
report reconstruction metrics in an 8-column table."""
from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..flowvq import FlowVqConfig, train_stage1, DivergenceError
from ..metrics import recon_metrics
from .runconfig import RunConfig

COLUMNS = ("mpjpe_all", "mpjpe_body", "mpjpe_hand",
           "pa_mpjpe_all", "pa_mpjpe_body", "pa_mpjpe_hand", "ade", "fde")

AXES = {
    "quantizer": ["vq", "fsq", "lfq", "rvq3"],
    "standardization": ["none", "standard", "avg-std", "min-max"],
    "dilation": ["none", "constant", "growth"],
    "down_order": ["after", "before"],
    "causal": ["false", "true"],
    "patchify": ["rear1", "rear2", "rear4", "haar2", "haar4"],
    "norm_act": ["relu_nonorm", "silu_groupnorm", "silu_layernorm"],
    "depth": ["2", "3", "4", "5"],
    "clip_length": ["32", "64"],
    "code_dim": ["4", "8", "16"],
}


def apply_axis(base: FlowVqConfig, axis: str, value: str) -> FlowVqConfig:
    d = base.to_dict()
    if axis == "quantizer":
        if value.startswith("rvq"):
            d.update(quantizer="rvq", rvq_depth=int(value[3:] or 3), code_dim=5)
        elif value == "fsq":
            d.update(quantizer="fsq")
        else:
            d.update(quantizer=value, code_dim=5)
    elif axis == "standardization":
        d.update(standardization=value)
    elif axis == "dilation":
        d.update(dilation=value)
    elif axis == "down_order":
        d.update(downsample_after_blocks=(value == "after"))
    elif axis == "causal":
        d.update(causal=(value == "true"))
    elif axis == "patchify":
        mode = "haar" if value.startswith("haar") else "rearrange"
        size = int(value.replace("haar", "").replace("rear", ""))
        d.update(patchify_mode=mode, patchify_size=size)
        d["downsample_total"] = max(d["downsample_total"], size)
    elif axis == "norm_act":
        d.update(norm_act=value)
    elif axis == "depth":
        d.update(blocks_per_layer=int(value))
    elif axis == "clip_length":
        d.update(max_train_frames=int(value))
    elif axis == "code_dim":
        d.update(quantizer="vq", code_dim=int(value))
    else:
        raise ValueError(f"unknown ablation axis {axis!r}; "
                         f"known: {sorted(AXES)}")
    d["fsq_levels"] = tuple(d["fsq_levels"])
    return FlowVqConfig.from_dict(d)


def run_ablation(cfg: RunConfig, axis: str, grid=None, out_dir=None,
                 steps: int = None, log=print) -> dict:
    if axis not in AXES:
        raise ValueError(f"unknown ablation axis {axis!r}; known: {sorted(AXES)}")
    grid = list(grid) if grid else AXES[axis]
    from .pipeline import load_dataset, synth_dataset, Stage
    out = Path(out_dir or Path(cfg.out) / "ablate" / axis)
    out.mkdir(parents=True, exist_ok=True)
    data_dir = Path(cfg.out) / "data"
    if not (data_dir / "manifest.json").exists():
        data_dir.mkdir(parents=True, exist_ok=True)
        synth_dataset(cfg, data_dir)
    dataset = load_dataset(data_dir)
    train_clips = [c for c, _, _ in dataset["train"]]
    val_rows = dataset["val"] or dataset["train"][:8]
    table = {"axis": axis, "columns": list(COLUMNS), "rows": {}}
    for value in grid:
        cell_cfg = apply_axis(cfg.tokenizer, axis, str(value))
        try:
            model, _ = train_stage1(train_clips, cell_cfg, seed=cfg.seed,
                                    steps=steps)
            metrics = []
            for clip, _, _ in val_rows:
                enc = model.encode(clip)
                recon = model.decode_plain(enc.codes, fps=clip.fps,
                                           trim_frames=clip.frames)
                metrics.append(recon_metrics(recon, clip))
            row = {k: float(np.mean([m[k] for m in metrics])) for k in COLUMNS}
            table["rows"][str(value)] = row
            log(f"[ablate:{axis}] {value}: mpjpe_all={row['mpjpe_all']:.4f}")
        except DivergenceError as exc:
            table["rows"][str(value)] = {"failed": str(exc)}
            log(f"[ablate:{axis}] {value}: FAILED ({exc})")
    (out / "table.json").write_text(json.dumps(table, indent=1, sort_keys=True),
                                    encoding="utf-8")
    (out / "table.txt").write_text(format_table(table), encoding="utf-8")
    return table


def format_table(table: dict) -> str:
    cols = table["columns"]
    width = max(len(str(v)) for v in table["rows"]) + 2
    lines = [f"axis: {table['axis']}",
             "variant".ljust(width) + "  ".join(c.rjust(13) for c in cols)]
    for value, row in table["rows"].items():
        if "failed" in row:
            lines.append(str(value).ljust(width) + f"FAILED: {row['failed']}")
        else:
            lines.append(str(value).ljust(width) +
                         "  ".join(f"{row[c]:13.4f}" for c in cols))
    return "\n".join(lines) + "\n"
