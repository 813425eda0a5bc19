"""Command-line driver.

Exit codes: 0 success, 2 config error, 3 data/format error,
4 training divergence, 5 generation error, 6 pipeline stage failure,
1 anything else.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4
EXIT_GENERATION = 5
EXIT_STAGE = 6


def _add_common(p):
    p.add_argument("--config", type=Path, default=None, help="TOML run config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=Path, default=None, help="output directory")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="motionlm",
        description="Motion tokenizer + motion-message LLM + metrics, desk scale")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("synth", "generate the synthetic dataset"),
        ("train-vq", "train the stage-1 tokenizer"),
        ("train-flow", "train the flow refinement decoder"),
        ("train-ar", "train the autoregressive model"),
        ("eval", "run the metric suite"),
        ("pipeline", "run every stage end to end"),
    ]:
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        if name == "train-ar":
            p.add_argument("--stage", choices=["pretrain", "gen-sft", "spec-sft"],
                           required=True)
            p.add_argument("--task", default=None, help="specialist task name")
    p = sub.add_parser("tokenize", help="clip file -> motion codes")
    _add_common(p)
    p.add_argument("--clip", type=Path, required=True)
    p.add_argument("--tokens", type=Path, default=None, help="output JSON path")
    p = sub.add_parser("detokenize", help="motion codes -> clip file")
    _add_common(p)
    p.add_argument("--tokens", type=Path, required=True)
    p.add_argument("--clip", type=Path, required=True, help="output clip path")
    p.add_argument("--decoder", choices=["flow", "plain"], default="flow")
    p.add_argument("--steps", type=int, default=None)
    p = sub.add_parser("generate", help="constrained generation from a prefix")
    _add_common(p)
    p.add_argument("--prefix", type=Path, required=True,
                   help="JSON message file (task + condition fields)")
    p.add_argument("--max-new", type=int, default=256)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--top-k", type=int, default=0)
    p.add_argument("--output", type=Path, default=None)
    p = sub.add_parser("ablate", help="axis sweep with a recon-metric table")
    _add_common(p)
    p.add_argument("--axis", required=True)
    p.add_argument("--grid", default=None, help="comma-separated cell values")
    p.add_argument("--steps", type=int, default=None,
                   help="stage-1 steps per cell")
    return ap


def _load_cfg(args):
    from .runconfig import load_run_config
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = str(args.out)
    return load_run_config(args.config, overrides)


def _tokenizer_dir(cfg, prefer_flow=True):
    base = Path(cfg.out) / "tokenizer"
    for sub in (["flow", "stage1"] if prefer_flow else ["stage1", "flow"]):
        if (base / sub / "bundle" / "tokenizer.json").exists():
            return base / sub / "bundle"
    raise FileNotFoundError(f"no tokenizer bundle under {base}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from ..data.clips import ClipFormatError
    from ..flowvq import DivergenceError
    from ..armodel import ArDivergenceError, GenerationError
    from ..vocab import GrammarError, MessageError
    from .runconfig import ConfigError
    from .pipeline import StageFailure
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ClipFormatError, FileNotFoundError, MessageError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DivergenceError, ArDivergenceError) as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (GenerationError, GrammarError) as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except StageFailure as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    from . import pipeline as pl
    cfg = _load_cfg(args)
    out = Path(cfg.out)
    if args.command == "synth":
        data_dir = out / "data"
        data_dir.mkdir(parents=True, exist_ok=True)
        pl.synth_dataset(cfg, data_dir)
        cfg.echo(out / "config.json")
        print(f"wrote dataset to {data_dir}")
        return 0
    if args.command == "train-vq":
        from ..flowvq import train_stage1
        dataset = pl.load_dataset(out / "data")
        clips = [c for c, _, _ in dataset["train"]]
        model, losses = train_stage1(clips, cfg.tokenizer, seed=cfg.seed)
        dest = out / "tokenizer" / "stage1" / "bundle"
        model.save(dest)
        (dest.parent / "stage1_losses.json").write_text(json.dumps(losses))
        print(f"stage-1 tokenizer saved to {dest} "
              f"(final loss {np.mean(losses[-50:]):.5f})")
        return 0
    if args.command == "train-flow":
        from ..flowvq import FlowVqModel, train_stage2
        dataset = pl.load_dataset(out / "data")
        clips = [c for c, _, _ in dataset["train"]]
        model = FlowVqModel.load(_tokenizer_dir(cfg, prefer_flow=False))
        model, losses = train_stage2(clips, model, seed=cfg.seed)
        dest = out / "tokenizer" / "flow" / "bundle"
        model.save(dest)
        (dest.parent / "stage2_losses.json").write_text(json.dumps(losses))
        print(f"flow decoder saved to {dest} "
              f"(final loss {np.mean(losses[-50:]):.5f})")
        return 0
    if args.command == "tokenize":
        from ..data import read_clip
        from ..flowvq import FlowVqModel
        model = FlowVqModel.load(_tokenizer_dir(cfg))
        clip = read_clip(args.clip)
        enc = model.encode(clip)
        payload = {"codes": enc.codes.tolist(), "pad_frames": enc.pad_frames,
                   "frames": enc.frames, "fps": enc.fps}
        dest = args.tokens or args.clip.with_suffix(".tokens.json")
        Path(dest).write_text(json.dumps(payload))
        print(f"wrote {dest}")
        return 0
    if args.command == "detokenize":
        from ..data import write_clip
        from ..flowvq import FlowVqModel
        model = FlowVqModel.load(_tokenizer_dir(cfg))
        payload = json.loads(Path(args.tokens).read_text())
        codes = np.asarray(payload["codes"], dtype=np.int64)
        trim = payload.get("frames")
        if args.decoder == "flow":
            clip = model.flow_decode(codes, steps=args.steps, seed=cfg.seed,
                                     fps=payload.get("fps", 30.0),
                                     trim_frames=trim)
        else:
            clip = model.decode_plain(codes, fps=payload.get("fps", 30.0),
                                      trim_frames=trim)
        write_clip(clip, args.clip)
        print(f"wrote {args.clip}")
        return 0
    if args.command == "train-ar":
        return _train_ar(args, cfg)
    if args.command == "generate":
        return _generate(args, cfg)
    if args.command == "eval":
        from ..flowvq import FlowVqModel
        from ..armodel import ArModel
        from ..vocab import Vocabulary
        dataset = pl.load_dataset(out / "data")
        tokenizer = FlowVqModel.load(_tokenizer_dir(cfg))
        vocab = Vocabulary.load(out / "corpus" / "vocab.txt")
        task = cfg.pipeline.specialist_task
        ar_dir = out / "ar" / f"specialist_{task}"
        if not ar_dir.exists():
            ar_dir = out / "ar" / "generalist_sft"
        ar_model = ArModel.load(ar_dir)
        eval_dir = out / "eval"
        eval_dir.mkdir(parents=True, exist_ok=True)
        pl.run_eval(cfg, dataset, tokenizer, ar_model, vocab, eval_dir)
        print((eval_dir / "report.json").read_text())
        return 0
    if args.command == "ablate":
        from .ablate import run_ablation, format_table
        grid = args.grid.split(",") if args.grid else None
        table = run_ablation(cfg, args.axis, grid=grid, steps=args.steps)
        print(format_table(table))
        failed = [v for v, row in table["rows"].items() if "failed" in row]
        return EXIT_DIVERGED if failed else 0
    if args.command == "pipeline":
        pl.run_pipeline(cfg)
        report = Path(cfg.out) / "eval" / "report.json"
        print(f"pipeline complete; report at {report}")
        return 0
    raise AssertionError(f"unhandled command {args.command}")


def _train_ar(args, cfg) -> int:
    from . import pipeline as pl
    from ..flowvq import FlowVqModel
    from ..armodel import ArModel, TrainingStage, train_stage
    from ..vocab import Vocabulary
    out = Path(cfg.out)
    dataset = pl.load_dataset(out / "data")
    tokenizer = FlowVqModel.load(_tokenizer_dir(cfg))
    vocab_path = out / "corpus" / "vocab.txt"
    if vocab_path.exists():
        vocab = Vocabulary.load(vocab_path)
    else:
        vocab = pl.build_vocab(cfg, dataset)
        vocab_path.parent.mkdir(parents=True, exist_ok=True)
        vocab.save(vocab_path)
    train_msgs = pl.build_messages(cfg, dataset, tokenizer, "train")
    val_msgs = pl.build_messages(cfg, dataset, tokenizer, "val")
    if args.stage == "pretrain":
        stage = TrainingStage("generalist-pretrain")
        base, dest = None, out / "ar" / "generalist_pre"
    elif args.stage == "gen-sft":
        stage = TrainingStage("generalist-sft")
        base, dest = out / "ar" / "generalist_pre", out / "ar" / "generalist_sft"
    else:
        task = args.task or cfg.pipeline.specialist_task
        stage = TrainingStage("specialist-sft", task_filter=(task,))
        base, dest = out / "ar" / "generalist_sft", out / "ar" / f"specialist_{task}"
    model = ArModel.load(base) if base else None
    model, trace = train_stage(train_msgs, stage, vocab, cfg.ar, seed=cfg.seed,
                               model=model, val_corpus=val_msgs)
    model.save(dest)
    (dest / "trace.json").write_text(json.dumps(trace))
    val = trace["val"][-1] if trace["val"] else float("nan")
    print(f"{stage.stage} done; final train loss "
          f"{np.mean(trace['train'][-20:]):.4f}, val {val:.4f}; saved to {dest}")
    return 0


def _generate(args, cfg) -> int:
    from . import pipeline as pl
    from ..armodel import ArModel, generate
    from ..vocab import (Vocabulary, MotionMessage, TASKS, encode_prefix,
                         parse_message, CaptionPart, AudioPart, MotionPart,
                         DurationPart, HeadcountPart, GenrePart,
                         PastMotionPart, FutureMotionPart)
    out = Path(cfg.out)
    vocab = Vocabulary.load(out / "corpus" / "vocab.txt")
    task_dir = out / "ar" / f"specialist_{cfg.pipeline.specialist_task}"
    model_dir = task_dir if task_dir.exists() else out / "ar" / "generalist_sft"
    model = ArModel.load(model_dir)
    spec = json.loads(Path(args.prefix).read_text())
    task = spec["task"]
    makers = {
        "caption": lambda v: CaptionPart(v),
        "audio": lambda v: AudioPart(v),
        "motion": lambda v: MotionPart(v),
        "duration": lambda v: DurationPart.of(v),
        "headcount": lambda v: HeadcountPart.of(v),
        "genre": lambda v: GenrePart(v),
        "past_motion": lambda v: PastMotionPart(v),
        "future_motion": lambda v: FutureMotionPart(v),
    }
    conditions = [makers[k](spec[k]) for k in makers if k in spec]
    placeholder = {"motion": MotionPart([[0]]), "caption": CaptionPart("x"),
                   "audio": AudioPart([0])}
    reply = [placeholder[k] for k in TASKS[task].reply]
    msg = MotionMessage(task=task, instruction=spec.get(
        "instruction", TASKS[task].instructions[0]), conditions=conditions,
        reply=reply)
    prefix = encode_prefix(msg, vocab)
    ids = generate(model, prefix, vocab, seed=cfg.seed, max_new=args.max_new,
                   temperature=args.temperature, top_k=args.top_k)
    parsed = parse_message(ids, vocab)
    result = {"ids": [int(t) for t in ids],
              "rendered": vocab.render(ids[len(prefix):]),
              "reply_kinds": [p.kind for p in parsed.reply]}
    text = json.dumps(result, indent=1)
    if args.output:
        Path(args.output).write_text(text)
    print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
